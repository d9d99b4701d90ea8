"""
Splitting a skull mesh into two printable halves at an axial plane.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
import trimesh

from mesh.surface import TriangleMesh, empty_mesh

logger = logging.getLogger(__name__)


def _boundary_loops(mesh: TriangleMesh) -> List[List[Tuple[int, int]]]:
    """Directed boundary edges (face order) grouped into closed walks."""
    single = trimesh.grouping.group_rows(mesh.edges_sorted, require_count=1)
    edges = [tuple(int(v) for v in e) for e in mesh.edges[single]]
    successor: Dict[int, Tuple[int, int]] = {a: (a, b) for a, b in edges}
    loops, seen = [], set()
    for edge in edges:
        if edge in seen:
            continue
        loop, current = [], edge
        while current not in seen:
            seen.add(current)
            loop.append(current)
            current = successor.get(current[1])
            if current is None:
                break
        loops.append(loop)
    return loops


def cap_fan(mesh: TriangleMesh) -> TriangleMesh:
    """Close every boundary loop with a fan around the loop centroid."""
    mesh = mesh.copy()
    mesh.merge_vertices()
    loops = _boundary_loops(mesh)
    if not loops:
        return mesh
    vertices = [mesh.vertices]
    faces = [mesh.faces]
    next_index = len(mesh.vertices)
    for loop in loops:
        ring = np.array([a for a, _ in loop])
        vertices.append(mesh.vertices[ring].mean(axis=0, keepdims=True))
        faces.append(np.array([[b, a, next_index] for a, b in loop], dtype=np.int64))
        next_index += 1
    logger.debug(f"Capped {len(loops)} boundary loops")
    return trimesh.Trimesh(vertices=np.vstack(vertices), faces=np.vstack(faces), process=False)


def clip_half(mesh: TriangleMesh, axis: int = 2,
              position_mm: Optional[float] = None) -> Tuple[TriangleMesh, TriangleMesh]:
    """Lower and upper halves of ``mesh`` cut at ``position_mm`` along ``axis``
    (default: the middle of the bounding box), each capped at the cut."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    if len(mesh.faces) == 0:
        return empty_mesh(), empty_mesh()
    if position_mm is None:
        position_mm = float(mesh.bounds[:, axis].mean())
    normal = np.zeros(3)
    normal[axis] = 1.0
    origin = np.zeros(3)
    origin[axis] = position_mm
    halves = []
    for direction in (-normal, normal):
        part = trimesh.intersections.slice_mesh_plane(mesh, plane_normal=direction, plane_origin=origin, cap=False)
        halves.append(cap_fan(part) if part is not None and len(part.faces) else empty_mesh())
    logger.info(f"Clipped mesh at {position_mm:.2f} mm on axis {axis}: "
                f"{len(halves[0].faces)} + {len(halves[1].faces)} triangles")
    return halves[0], halves[1]
