"""
Evaluation scores for reconstructed defects.
"""

from metrics.scores import (
    DEFAULT_TAU_MM, MetricsReport, bdsc, boundary_band, cumulative_histogram, dsc,
    evaluate_case, hd95, nearest_rank, read_metrics_csv, summarize, summarize_by_group,
    write_cumulative_csv, write_group_summary_csv, write_metrics_csv,
)

__all__ = [
    "DEFAULT_TAU_MM", "MetricsReport", "bdsc", "boundary_band", "cumulative_histogram", "dsc",
    "evaluate_case", "hd95", "nearest_rank", "read_metrics_csv", "summarize", "summarize_by_group",
    "write_cumulative_csv", "write_group_summary_csv", "write_metrics_csv",
]
