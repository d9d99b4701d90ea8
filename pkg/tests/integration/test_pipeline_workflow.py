"""
End-to-end pipeline run on small synthetic cases with a network that marks
every voxel of the canvas.
"""

import orjson
import pytest

from agents.core.agent_base import AgentStatus
from agents.core.run_context import RunContext
from agents.utils.case_store import load_cases, matching_case
from nnet import build_unet, save_weights
from orchestrator import Orchestrator


@pytest.mark.asyncio
async def test_pipeline_with_ground_truth(run_context, case_dir, eager_checkpoint):
    orchestrator = Orchestrator(run_context)
    context = await orchestrator.run_pipeline(
        {'input_dir': case_dir, 'checkpoint': eager_checkpoint, 'ground_truth': True})
    assert orchestrator.failure is None
    assert all(r.status == AgentStatus.COMPLETED for r in orchestrator.results.values())
    assert set(orchestrator.results) == {'preprocess', 'reconstruct', 'postprocess', 'mesh', 'metrics'}

    outputs = context['outputs']
    assert len(outputs['stl_files']) == 6
    assert outputs['metrics_csv'].endswith("metrics.csv")
    assert 0.0 < outputs['summary']['mean']['dsc'] < 1.0

    for case in load_cases(context['postprocess']['case_dir']):
        original = matching_case(case_dir, case.case_id, require_defect=True)
        assert case.defect.dims == original.defective.dims
        assert not (case.defect.data & original.defective.data).any()

    manifest = orjson.loads(run_context.write_manifest().read_bytes())
    assert manifest['subcommand'] == 'test'
    recorded = {entry['path'] for entry in manifest['artifacts']}
    assert any(path.endswith("metrics.csv") for path in recorded)


@pytest.mark.asyncio
async def test_pipeline_refines_restored_defects(desk_config, case_dir, eager_checkpoint, tmp_path):
    config = desk_config.model_copy(update={'refine': desk_config.refine.model_copy(update={'enabled': True})})
    weights = build_unet(config.refine.network.descriptor(), seed=1)
    weights["head.weight"].data[...] = 0.0
    weights["head.bias"].data[...] = 20.0
    refine_checkpoint = save_weights(weights, tmp_path / "refine.cdrn")

    orchestrator = Orchestrator(RunContext(config, "pipeline", tmp_path / "run"))
    context = await orchestrator.run_pipeline({'input_dir': case_dir, 'checkpoint': eager_checkpoint,
                                               'refine_checkpoint': refine_checkpoint, 'ground_truth': True})
    assert orchestrator.failure is None
    assert set(orchestrator.results) == {'preprocess', 'reconstruct', 'postprocess', 'refine', 'mesh', 'metrics'}
    assert len(context['outputs']['stl_files']) == 6

    refined = load_cases(context['refine']['case_dir'])
    assert len(refined) == 6
    for case in refined:
        original = matching_case(case_dir, case.case_id, require_defect=True)
        assert case.defect.dims == original.defective.dims
        assert case.defect.same_geometry(original.defective)
        assert not (case.defect.data & original.defective.data).any()
