import logging
from pathlib import Path
from typing import Dict, Any

from agents.core.agent_base import BaseAgent
from agents.utils.case_store import load_cases, write_cases
from vae import generate_cases, save_vae, train_vae

logger = logging.getLogger(__name__)


class AugmentVaeAgent(BaseAgent):
    """Trains the VAE on (defective, defect) pairs and decodes new cases from it."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dirs', 'output_dir'],
                'field_types': {'input_dirs': 'paths', 'output_dir': 'path', 'checkpoint': 'path', 'n': 'integer'},
                'field_constraints': {'n': {'min': 0}},
                'existing_paths': ['input_dirs'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        settings = self.pipeline_config.vae
        seed = self.pipeline_config.seed
        cases = load_cases(inputs['input_dirs'])
        descriptor = settings.descriptor(cases[0].defective.dims)
        result = train_vae(cases, settings.to_train_config(seed, self.pipeline_config.train.precision), descriptor)
        output_dir = Path(inputs['output_dir'])
        checkpoint = Path(self.option(inputs, 'checkpoint', output_dir.parent / 'vae.cdrv'))
        self.check_cancelled()
        save_vae(result.weights, checkpoint, extra={'best_epoch': result.best_epoch, 'seed': seed})

        reference = cases[0].defective
        generated = generate_cases(result.weights, self.option(inputs, 'n', settings.n_generate), seed,
                                   settings.threshold, reference.spacing, reference.origin)
        case_ids = write_cases(generated, output_dir, cancelled=self.cancelled)
        return {'case_dir': str(output_dir), 'case_ids': case_ids, 'checkpoint': str(checkpoint),
                'final_loss': result.history[-1].loss if result.history else None,
                'artifacts': [str(output_dir), str(checkpoint)]}
