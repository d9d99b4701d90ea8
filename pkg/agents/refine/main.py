import logging
from pathlib import Path
from typing import Dict, Any

from agents.core.agent_base import BaseAgent
from agents.utils.case_store import load_cases, write_cases
from dataio.cases import CaseRecord
from nnet import load_weights, refine
from preprocess import clean_defect
from volume.errors import GeometryMismatch

logger = logging.getLogger(__name__)


class RefineAgent(BaseAgent):
    """Refines restored defects around their bounding boxes in the original frame.

    Input cases come from postprocessing. Cases still carrying canvas
    provenance are rejected. The refined defect is cut against the skull
    and reduced to its largest components again.
    """

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dir', 'checkpoint', 'output_dir'],
                'field_types': {'input_dir': 'path', 'checkpoint': 'path', 'output_dir': 'path'},
                'existing_paths': ['input_dir', 'checkpoint'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        settings = self.pipeline_config.refine
        keep_components = self.pipeline_config.postprocess.keep_components
        weights = load_weights(inputs['checkpoint'])
        records, passed_through = [], []
        for case in load_cases(inputs['input_dir']):
            self.check_cancelled()
            if 'provenance' in case.metadata:
                raise GeometryMismatch("refinement expects a restored defect, got a canvas-frame case",
                                       case_id=case.case_id)
            if not case.defect.count():
                logger.warning(f"Case {case.case_id}: empty coarse defect, refinement skipped")
                passed_through.append(case.case_id)
                records.append(case)
                continue
            result = refine(weights, case.defect, settings.offset, settings.dims, settings.threshold)
            defect = clean_defect(result.defect, case.defective, closing_radius=0,
                                  keep_components=keep_components)
            metadata = dict(case.metadata, refinement=result.provenance.to_dict())
            records.append(CaseRecord(None, case.defective, defect, case.case_id, metadata))
        output_dir = Path(inputs['output_dir'])
        case_ids = write_cases(records, output_dir, cancelled=self.cancelled)
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'skipped': passed_through,
                'artifacts': [str(output_dir)]}
