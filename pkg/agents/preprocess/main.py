import logging
from functools import partial
from pathlib import Path
from typing import Dict, Any

from agents.core.agent_base import BaseAgent, map_cases
from agents.utils.case_store import load_cases, write_cases
from dataio.cases import CaseRecord
from preprocess import preprocess_record

logger = logging.getLogger(__name__)


def _preprocess_one(record: CaseRecord, offset: int, spacing, dims) -> CaseRecord:
    return preprocess_record(record, offset, spacing, dims).record


class PreprocessAgent(BaseAgent):
    """Crops, resamples and centers every case; the provenance goes into the case metadata."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dir', 'output_dir'],
                'field_types': {'input_dir': 'path', 'output_dir': 'path'},
                'existing_paths': ['input_dir'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        settings = self.pipeline_config.preprocess
        cases = load_cases(inputs['input_dir'], require_defect=False)
        work = partial(_preprocess_one, offset=settings.offset, spacing=tuple(settings.target_spacing),
                       dims=tuple(settings.target_dims))
        records = map_cases(work, cases, self.pipeline_config.jobs, cancelled=self.cancelled)
        overflow = [r.case_id for r in records if r.metadata['provenance']['overflow_flag']]
        if overflow:
            logger.warning(f"{len(overflow)} cases overflowed the canvas: {overflow[:10]}")
        output_dir = Path(inputs['output_dir'])
        case_ids = write_cases(records, output_dir, cancelled=self.cancelled)
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'overflow': overflow,
                'artifacts': [str(output_dir)]}
