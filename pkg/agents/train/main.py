import logging
from pathlib import Path
from typing import Dict, Any, List

from agents.core.agent_base import BaseAgent
from agents.utils.case_store import load_cases
from dataio.manifest import split
from nnet import (
    build_unet, load_weights, prepare_refinement_pair, reconstruct, save_weights, train,
    train_samples, write_loss_history,
)
from preprocess import postprocess_defect, preprocess_record
from volume.errors import EmptyDataset, GeometryMismatch

logger = logging.getLogger(__name__)

STAGES = ['reconstruct', 'refine']


class TrainAgent(BaseAgent):
    """Trains the reconstruction network, or the refinement network on restored coarse predictions.

    Reconstruction training reads preprocessed cases; refinement training reads
    original-frame cases and needs the coarse checkpoint.
    """

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dirs', 'checkpoint'],
                'field_types': {'input_dirs': 'paths', 'checkpoint': 'path', 'stage': 'string',
                                'coarse_checkpoint': 'path'},
                'enum_constraints': {'stage': {'enum': STAGES}},
                'existing_paths': ['input_dirs', 'coarse_checkpoint'],
            }
        super().__init__(agent_id, run_context, config)

    async def _custom_validations(self, inputs: Dict[str, Any]) -> List[str]:
        if inputs.get('stage') == 'refine' and not inputs.get('coarse_checkpoint'):
            return ["Refinement training needs 'coarse_checkpoint'"]
        return []

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        config = self.pipeline_config
        stage = self.option(inputs, 'stage', 'reconstruct')
        groups = self.option(inputs, 'groups', config.recipe.groups)
        cases = load_cases(inputs['input_dirs'], groups=groups)
        train_cases, val_cases = split(cases, config.preprocess.split, config.seed)
        train_config = config.train.to_train_config(config.seed)
        checkpoint = Path(inputs['checkpoint'])

        if stage == 'reconstruct':
            weights = build_unet(config.train.network.descriptor(), seed=config.seed, dtype=train_config.dtype)
            result = train(weights, train_cases, train_config, validation=val_cases)
        else:
            weights = build_unet(config.refine.network.descriptor(), seed=config.seed, dtype=train_config.dtype)
            coarse_weights = load_weights(inputs['coarse_checkpoint'])
            samples, labels = self._refinement_samples(coarse_weights, train_cases)
            val_samples, _ = self._refinement_samples(coarse_weights, val_cases)
            result = train_samples(weights, samples, train_config, val_samples, labels=labels)

        self.check_cancelled()
        save_weights(result.weights, checkpoint, extra={
            'stage': stage, 'best_epoch': result.best_epoch, 'seed': config.seed,
            'ablation': config.ablation, 'cases': len(train_cases)})
        history = write_loss_history(result.history, checkpoint.with_suffix('.loss.csv'))
        return {'checkpoint': str(checkpoint), 'history': str(history), 'best_epoch': result.best_epoch,
                'stopped_early': result.stopped_early, 'artifacts': [str(checkpoint), str(history)]}

    def _refinement_samples(self, coarse_weights, cases):
        """Coarse predictions restored to each case's original frame, paired with its defect.

        Cases must be in original geometry; each is preprocessed, reconstructed
        and postprocessed here, the same chain the pipeline runs before refinement.
        """
        config = self.pipeline_config
        pre, post, settings = config.preprocess, config.postprocess, config.refine
        samples, labels = [], []
        for case in cases:
            self.check_cancelled()
            if 'provenance' in case.metadata:
                raise GeometryMismatch("refinement training needs original-frame cases, got a preprocessed one",
                                       case_id=case.case_id)
            mapped = preprocess_record(case, pre.offset, pre.target_spacing, pre.target_dims)
            coarse_canvas = reconstruct(coarse_weights, mapped.record.defective, settings.threshold)
            coarse = postprocess_defect(coarse_canvas, mapped.provenance, case.defective,
                                        post.closing_radius, post.keep_components, post.closing_mode)
            if not coarse.count():
                logger.warning(f"Case {case.case_id}: empty coarse prediction, skipped for refinement")
                continue
            samples.append(prepare_refinement_pair(coarse, case.defect, settings.offset, settings.dims))
            labels.append(case.case_id)
        if not samples and cases:
            raise EmptyDataset("every coarse prediction was empty; cannot train the refinement network")
        return samples, labels
