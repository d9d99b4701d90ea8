import logging
from pathlib import Path
from typing import Dict, Any

from agents.core.agent_base import BaseAgent
from agents.utils.case_store import load_cases, write_cases
from registration import augment_by_registration

logger = logging.getLogger(__name__)


class AugmentRegisterAgent(BaseAgent):
    """New training cases by registering ordered pairs of training cases onto each other."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dir', 'output_dir'],
                'field_types': {'input_dir': 'path', 'output_dir': 'path', 'pair_budget': 'integer',
                                'preset': 'string'},
                'field_constraints': {'pair_budget': {'min': 0}},
                'enum_constraints': {'preset': {'enum': ['smooth', 'imperfect']}},
                'existing_paths': ['input_dir'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        settings = self.pipeline_config.registration
        preset = settings.to_preset(inputs.get('preset'))
        budget = self.option(inputs, 'pair_budget', settings.pair_budget)
        cases = load_cases(inputs['input_dir'])
        produced = augment_by_registration(cases, preset, budget, self.pipeline_config.seed,
                                           self.pipeline_config.jobs)
        output_dir = Path(inputs['output_dir'])
        case_ids = write_cases(produced, output_dir, cancelled=self.cancelled)
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'preset': preset.name,
                'artifacts': [str(output_dir)]}
