"""
Mesh smoothing and cleanup.
"""

import logging

import numpy as np
import trimesh

from mesh.surface import TriangleMesh

logger = logging.getLogger(__name__)

RELAXATION = 0.5
MIN_AREA = 1e-12


def taubin_coefficients(passband: float, relaxation: float = RELAXATION):
    """Shrink/inflate pair with ``1/λ − 1/ν = passband``."""
    if not 0.0 < passband < 1.0 / relaxation:
        raise ValueError(f"passband must lie in (0, {1.0 / relaxation}), got {passband}")
    return relaxation, 1.0 / (1.0 / relaxation - passband)


def sinc_smooth(mesh: TriangleMesh, iterations: int = 20, passband: float = 0.1) -> TriangleMesh:
    """Low-pass vertex smoothing; each iteration is one shrink and one inflate step.

    Connectivity is unchanged and the input mesh is left untouched.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    out = mesh.copy()
    if iterations == 0 or len(out.faces) == 0:
        return out
    lamb, nu = taubin_coefficients(passband)
    trimesh.smoothing.filter_taubin(out, lamb=lamb, nu=nu, iterations=2 * iterations)
    return out


def clean_mesh(mesh: TriangleMesh, min_component_triangles: int = 50) -> TriangleMesh:
    """Drop degenerate triangles and edge-connected components smaller than
    ``min_component_triangles``, then remove unreferenced vertices."""
    out = mesh.copy()
    if len(out.faces) == 0:
        return out
    out.merge_vertices()
    out.update_faces(out.area_faces > MIN_AREA)
    components = trimesh.graph.connected_components(out.face_adjacency, nodes=np.arange(len(out.faces)),
                                                    min_len=1)
    keep = np.zeros(len(out.faces), dtype=bool)
    dropped = 0
    for faces in components:
        if len(faces) >= min_component_triangles:
            keep[faces] = True
        else:
            dropped += 1
    out.update_faces(keep)
    out.remove_unreferenced_vertices()
    if dropped:
        logger.info(f"Mesh cleanup removed {dropped} small components, {len(out.faces)} triangles remain")
    return out
