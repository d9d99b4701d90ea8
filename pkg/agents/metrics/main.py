import logging
from pathlib import Path
from typing import Dict, Any

from agents.core.agent_base import BaseAgent
from agents.utils.case_store import load_cases, matching_case
from metrics import (
    evaluate_case, summarize, write_cumulative_csv, write_group_summary_csv, write_metrics_csv,
)

logger = logging.getLogger(__name__)


class MetricsAgent(BaseAgent):
    """Scores predicted defects against ground truth and writes the CSV reports."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['pred_dir', 'gt_dir', 'output_dir'],
                'field_types': {'pred_dir': 'path', 'gt_dir': 'path', 'output_dir': 'path'},
                'existing_paths': ['pred_dir', 'gt_dir'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        tau = self.pipeline_config.metrics.tau_mm
        reports = []
        for prediction in load_cases(inputs['pred_dir']):
            self.check_cancelled()
            truth = matching_case(inputs['gt_dir'], prediction.case_id, require_defect=True)
            group = truth.metadata.get('group') or truth.metadata.get('defect_type')
            report = evaluate_case(prediction.defect, truth.defect, prediction.case_id, tau, group)
            reports.append(report)
        self.check_cancelled()
        output_dir = Path(inputs['output_dir'])
        metrics_csv = write_metrics_csv(reports, output_dir / 'metrics.csv')
        groups_csv = write_group_summary_csv(reports, output_dir / 'metrics_by_group.csv')
        cumulative_csv = write_cumulative_csv(reports, output_dir / 'metrics_cumulative.csv')
        files = [str(metrics_csv), str(groups_csv), str(cumulative_csv)]
        return {'metrics_csv': str(metrics_csv), 'summary': summarize(reports), 'artifacts': files}
