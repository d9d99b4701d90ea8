import logging
from functools import partial
from pathlib import Path
from typing import Dict, Any

from agents.core.agent_base import BaseAgent, map_cases
from agents.utils.case_store import load_cases, write_cases
from dataio.cases import CaseRecord
from implant import ImplantConfig, model_implant

logger = logging.getLogger(__name__)


def _implant_one(case: CaseRecord, config: ImplantConfig) -> CaseRecord:
    result = model_implant(case.defect, case.defective, config)
    metadata = dict(case.metadata, implant={
        'iterations_used': result.iterations_used,
        'final_ratio': round(result.final_ratio, 6),
        'converged': result.converged,
        'shift_mm': round(result.shift_mm, 4),
        'direction': [round(float(v), 6) for v in result.direction],
    })
    return CaseRecord(None, case.defective, result.implant, case.case_id, metadata)


class ImplantAgent(BaseAgent):
    """Thins postprocessed defects into implant models."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dir', 'output_dir'],
                'field_types': {'input_dir': 'path', 'output_dir': 'path'},
                'existing_paths': ['input_dir'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        config = self.pipeline_config.implant.to_implant_config()
        records = map_cases(partial(_implant_one, config=config), load_cases(inputs['input_dir']),
                            self.pipeline_config.jobs, cancelled=self.cancelled)
        status = {r.case_id: r.metadata['implant']['converged'] for r in records}
        for case_id, converged in status.items():
            logger.info(f"Case {case_id}: implant {'converged' if converged else 'not converged'}")
        output_dir = Path(inputs['output_dir'])
        case_ids = write_cases(records, output_dir, cancelled=self.cancelled)
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'converged': status,
                'artifacts': [str(output_dir)]}
