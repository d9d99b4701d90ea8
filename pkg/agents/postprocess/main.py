import logging
from functools import partial
from pathlib import Path
from typing import Dict, Any, Tuple

from agents.core.agent_base import BaseAgent, map_cases
from agents.utils.case_store import case_provenance, load_cases, matching_case, write_cases
from dataio.cases import CaseRecord
from preprocess import postprocess_defect

logger = logging.getLogger(__name__)


def _postprocess_one(job: Tuple[CaseRecord, str], closing_radius: int, keep_components: int,
                     closing_mode: str) -> CaseRecord:
    case, original_dir = job
    original = matching_case(original_dir, case.case_id, require_defect=False)
    defect = postprocess_defect(case.defect, case_provenance(case), original.defective,
                                closing_radius, keep_components, closing_mode)
    metadata = {k: v for k, v in case.metadata.items() if k not in ('provenance', 'refinement')}
    return CaseRecord(None, original.defective, defect, case.case_id, metadata)


class PostprocessAgent(BaseAgent):
    """Maps predicted defects back to the original frames and cleans them against the skull."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dir', 'original_dir', 'output_dir'],
                'field_types': {'input_dir': 'path', 'original_dir': 'path', 'output_dir': 'path'},
                'existing_paths': ['input_dir', 'original_dir'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        settings = self.pipeline_config.postprocess
        jobs = [(case, str(inputs['original_dir'])) for case in load_cases(inputs['input_dir'])]
        work = partial(_postprocess_one, closing_radius=settings.closing_radius,
                       keep_components=settings.keep_components, closing_mode=settings.closing_mode)
        records = map_cases(work, jobs, self.pipeline_config.jobs, cancelled=self.cancelled)
        empty = [r.case_id for r in records if not r.defect.count()]
        if empty:
            logger.warning(f"{len(empty)} cases have an empty defect after postprocessing: {empty[:10]}")
        output_dir = Path(inputs['output_dir'])
        case_ids = write_cases(records, output_dir, cancelled=self.cancelled)
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'empty': empty,
                'artifacts': [str(output_dir)]}
