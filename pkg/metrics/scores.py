"""
Overlap and surface-distance scores for reconstructed defects: Dice,
boundary Dice and the 95th-percentile symmetric Hausdorff distance, plus
per-case CSV reports.
"""

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from volume.grid import VoxelGrid, distance_transform
from volume.morphology import contour

logger = logging.getLogger(__name__)

DEFAULT_TAU_MM = 2.0
REPORT_COLUMNS = ("case_id", "dsc", "bdsc", "hd95")


def _masks(a: VoxelGrid, b: VoxelGrid):
    a.require_same_geometry(b, what="metric operands")
    return a.data.astype(bool), b.data.astype(bool)


def dsc(a: VoxelGrid, b: VoxelGrid) -> float:
    """2|a∧b| / (|a|+|b|), 1.0 when both are empty."""
    ma, mb = _masks(a, b)
    return _dice(ma, mb)


def _dice(ma: np.ndarray, mb: np.ndarray) -> float:
    total = int(np.count_nonzero(ma)) + int(np.count_nonzero(mb))
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(ma & mb)) / total


def boundary_band(grid: VoxelGrid, tau_mm: float = DEFAULT_TAU_MM) -> np.ndarray:
    """Voxels within ``tau_mm`` of the one-voxel inner boundary."""
    surface = contour(grid)
    if not surface.data.any():
        return np.zeros(grid.dims, dtype=bool)
    return distance_transform(surface).data <= tau_mm


def bdsc(a: VoxelGrid, b: VoxelGrid, tau_mm: float = DEFAULT_TAU_MM) -> float:
    """Dice restricted to the union of both boundary bands."""
    ma, mb = _masks(a, b)
    region = boundary_band(a, tau_mm) | boundary_band(b, tau_mm)
    return _dice(ma & region, mb & region)


def nearest_rank(values: np.ndarray, percentile: float = 95.0) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    ordered = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if ordered.size == 0:
        return math.inf
    rank = max(1, int(math.ceil(percentile / 100.0 * ordered.size)))
    return float(ordered[rank - 1])


def directed_surface_distances(a: VoxelGrid, b: VoxelGrid) -> np.ndarray:
    """Distance (mm) from every surface voxel of ``a`` to the nearest surface voxel of ``b``."""
    surface_a, surface_b = contour(a), contour(b)
    return distance_transform(surface_b).data[surface_a.data]


def hd95(a: VoxelGrid, b: VoxelGrid, percentile: float = 95.0) -> float:
    """Symmetric percentile Hausdorff distance in mm; ``inf`` if either mask is empty."""
    ma, mb = _masks(a, b)
    if not ma.any() or not mb.any():
        return math.inf
    forward = nearest_rank(directed_surface_distances(a, b), percentile)
    backward = nearest_rank(directed_surface_distances(b, a), percentile)
    return max(forward, backward)


@dataclass(frozen=True)
class MetricsReport:
    case_id: str
    dsc: float
    bdsc: float
    hd95: float
    group: Optional[str] = None

    def __post_init__(self):
        for name in ("dsc", "bdsc"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.hd95 < 0:
            raise ValueError(f"hd95 must be non-negative, got {self.hd95}")

    def row(self) -> List[str]:
        return [self.case_id, _fmt(self.dsc), _fmt(self.bdsc), _fmt(self.hd95)]


def evaluate_case(prediction: VoxelGrid, ground_truth: VoxelGrid, case_id: str,
                  tau_mm: float = DEFAULT_TAU_MM, group: Optional[str] = None) -> MetricsReport:
    report = MetricsReport(case_id=case_id,
                           dsc=dsc(prediction, ground_truth),
                           bdsc=bdsc(prediction, ground_truth, tau_mm),
                           hd95=hd95(prediction, ground_truth),
                           group=group)
    logger.info(f"Metrics {case_id}: dsc={report.dsc:.4f} bdsc={report.bdsc:.4f} hd95={report.hd95:.3f}")
    return report


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"


def _mean_std(values: Sequence[float]):
    finite = np.asarray([v for v in values if math.isfinite(v)], dtype=np.float64)
    if finite.size == 0:
        return math.inf, math.inf
    return float(finite.mean()), float(finite.std())


def summarize(reports: Sequence[MetricsReport]) -> Dict[str, Dict[str, float]]:
    """Mean and population std per metric, in report order; infinite HD95 values are excluded."""
    summary: Dict[str, Dict[str, float]] = {"mean": {}, "std": {}}
    for name in REPORT_COLUMNS[1:]:
        values = [getattr(r, name) for r in reports]
        excluded = sum(1 for v in values if not math.isfinite(v))
        if excluded:
            logger.warning(f"Summary of {name} excludes {excluded} infinite values")
        summary["mean"][name], summary["std"][name] = _mean_std(values)
    return summary


def summarize_by_group(reports: Sequence[MetricsReport]) -> Dict[str, Dict[str, Dict[str, float]]]:
    """Per-group summaries; reports without a group fall under ``all``."""
    groups: Dict[str, List[MetricsReport]] = defaultdict(list)
    for report in reports:
        groups[report.group or "all"].append(report)
    return {name: summarize(members) for name, members in sorted(groups.items())}


def cumulative_histogram(values: Iterable[float], bins: Sequence[float]) -> List[tuple]:
    """Fraction of finite values ``<= edge`` for every bin edge."""
    finite = np.asarray([v for v in values if math.isfinite(v)], dtype=np.float64)
    if finite.size == 0:
        return [(float(edge), 0.0) for edge in bins]
    return [(float(edge), float(np.count_nonzero(finite <= edge)) / finite.size) for edge in bins]


def write_metrics_csv(reports: Sequence[MetricsReport], path: Union[str, Path]) -> Path:
    """One row per case, then ``mean`` and ``std`` summary rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = summarize(reports)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            writer.writerow(report.row())
        for label in ("mean", "std"):
            writer.writerow([label] + [_fmt(summary[label][name]) for name in REPORT_COLUMNS[1:]])
    logger.info(f"Wrote metrics for {len(reports)} cases to {path}")
    return path


def write_group_summary_csv(reports: Sequence[MetricsReport], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("group", "statistic") + REPORT_COLUMNS[1:])
        for group, summary in summarize_by_group(reports).items():
            for label in ("mean", "std"):
                writer.writerow([group, label] + [_fmt(summary[label][name]) for name in REPORT_COLUMNS[1:]])
    return path


def write_cumulative_csv(reports: Sequence[MetricsReport], path: Union[str, Path],
                         bins: Optional[Dict[str, Sequence[float]]] = None) -> Path:
    """Cumulative-fraction table per metric, one row per bin edge."""
    bins = bins or {
        "dsc": [round(0.05 * i, 2) for i in range(21)],
        "bdsc": [round(0.05 * i, 2) for i in range(21)],
        "hd95": [0.5 * i for i in range(41)],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("metric", "edge", "fraction"))
        for name, edges in bins.items():
            for edge, fraction in cumulative_histogram([getattr(r, name) for r in reports], edges):
                writer.writerow([name, f"{edge:g}", f"{fraction:.6f}"])
    return path


def read_metrics_csv(path: Union[str, Path]) -> List[MetricsReport]:
    """Per-case rows of a metrics CSV (summary rows are skipped)."""
    reports = []
    with Path(path).open(newline="") as handle:
        for row in csv.DictReader(handle):
            if row["case_id"] in ("mean", "std"):
                continue
            reports.append(MetricsReport(row["case_id"], float(row["dsc"]), float(row["bdsc"]), float(row["hd95"])))
    return reports
