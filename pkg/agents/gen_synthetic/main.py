import logging
from pathlib import Path
from typing import Dict, Any, List

from agents.core.agent_base import BaseAgent
from agents.utils.case_store import write_cases
from dataio.synthetic import DatasetGroup, generate_dataset

logger = logging.getLogger(__name__)

GROUP_CHOICES = ['varied', 'uniform', 'both']


class GenSyntheticAgent(BaseAgent):
    """Writes a seeded synthetic dataset in the case-directory layout."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['output_dir'],
                'field_types': {'output_dir': 'path', 'n': 'integer', 'seed': 'integer', 'group': 'string'},
                'field_constraints': {'n': {'min': 1}},
                'enum_constraints': {'group': {'enum': GROUP_CHOICES}},
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        settings = self.pipeline_config.synthetic
        n = self.option(inputs, 'n', settings.n)
        seed = self.option(inputs, 'seed', self.pipeline_config.seed)
        group = self.option(inputs, 'group', settings.group)
        groups = [DatasetGroup.VARIED, DatasetGroup.UNIFORM] if group == 'both' else [DatasetGroup(group)]
        output_dir = Path(inputs['output_dir'])

        case_ids: List[str] = []
        for index, dataset_group in enumerate(groups):
            # the first group takes the remainder when n does not split evenly
            count = n // len(groups) + (n % len(groups) if index == 0 else 0)
            if count == 0:
                continue
            records = generate_dataset(count, seed + index, settings.to_synthetic_config(dataset_group))
            case_ids.extend(write_cases(records, output_dir, cancelled=self.cancelled))
        logger.info(f"Generated {len(case_ids)} synthetic cases ({group}, seed={seed})")
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'artifacts': [str(output_dir)]}
