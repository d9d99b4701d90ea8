import logging
from pathlib import Path
from typing import Dict, Any

from agents.core.agent_base import BaseAgent
from agents.utils.case_store import load_cases, write_cases
from dataio.cases import CaseRecord
from nnet import load_weights, reconstruct

logger = logging.getLogger(__name__)


class ReconstructAgent(BaseAgent):
    """Predicts the defect of every preprocessed case."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dir', 'checkpoint', 'output_dir'],
                'field_types': {'input_dir': 'path', 'checkpoint': 'path', 'output_dir': 'path',
                                'threshold': 'number'},
                'field_constraints': {'threshold': {'min': 0.0, 'max': 1.0}},
                'existing_paths': ['input_dir', 'checkpoint'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        weights = load_weights(inputs['checkpoint'])
        threshold = self.option(inputs, 'threshold', self.pipeline_config.postprocess.threshold)
        records = []
        for case in load_cases(inputs['input_dir'], require_defect=False):
            self.check_cancelled()
            defect = reconstruct(weights, case.defective, threshold)
            logger.info(f"Case {case.case_id}: {defect.count()} predicted defect voxels")
            records.append(CaseRecord(None, case.defective, defect, case.case_id, dict(case.metadata)))
        output_dir = Path(inputs['output_dir'])
        case_ids = write_cases(records, output_dir, cancelled=self.cancelled)
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'artifacts': [str(output_dir)]}
