"""
Pipeline orchestration: input resolution, stage toggles and the one-shot run.
"""

import pytest
import yaml

from agents.core.config import load_config
from agents.core.run_context import RunContext
from agents.preprocess.main import PreprocessAgent
from orchestrator import Orchestrator, load_agent_class, resolve_input
from volume.errors import ConfigValidationError

CONTEXT = {
    'run': {'output_dir': '/runs/r1'},
    'inputs': {'input_dir': '/data/cases', 'checkpoint': None},
    'reconstruct': {'case_dir': '/runs/r1/reconstructed'},
}


@pytest.mark.parametrize("mapping, expected", [
    ('inputs.input_dir', '/data/cases'),
    ('refine.case_dir', None),
    (['refine.case_dir', 'reconstruct.case_dir'], '/runs/r1/reconstructed'),
    (['refine.case_dir', 'inputs.checkpoint'], None),
    ('{run.output_dir}/stl', '/runs/r1/stl'),
    ('{refine.case_dir}/stl', None),
    (3, 3),
    (True, True),
])
def test_resolve_input(mapping, expected):
    assert resolve_input(CONTEXT, mapping) == expected


def test_agent_classes_load_by_name():
    assert load_agent_class('preprocess') is PreprocessAgent
    with pytest.raises(ConfigValidationError):
        load_agent_class('segment')


def test_pipeline_file_must_list_stages(run_context, tmp_path):
    with pytest.raises(ConfigValidationError):
        Orchestrator(run_context, tmp_path / "missing.yaml")
    path = tmp_path / "pipeline.yaml"
    path.write_text(yaml.safe_dump({'name': 'empty'}))
    with pytest.raises(ConfigValidationError):
        Orchestrator(run_context, path)


def test_default_pipeline_order(run_context):
    orchestrator = Orchestrator(run_context)
    assert orchestrator.stage_names() == ['preprocess', 'reconstruct', 'postprocess', 'refine',
                                          'implant', 'mesh', 'metrics']


def test_toggles_follow_recipe_and_inputs(desk_config, tmp_path):
    plain = Orchestrator(RunContext(desk_config, "pipeline", tmp_path)).initial_context({'input_dir': tmp_path})
    assert plain['toggles'] == {'refine': False, 'implant': False, 'ground_truth': False}
    assert plain['inputs']['input_dir'] == str(tmp_path)

    config, _ = load_config(overrides={'ablation': 'CRegRef'})
    refined = Orchestrator(RunContext(config, "pipeline", tmp_path)).initial_context(
        {'refine_checkpoint': 'ref.cdrn', 'ground_truth': True})
    assert refined['toggles'] == {'refine': True, 'implant': False, 'ground_truth': True}

    # the recipe asks for refinement but there are no refinement weights
    unweighted = Orchestrator(RunContext(config, "pipeline", tmp_path)).initial_context({})
    assert unweighted['toggles']['refine'] is False

    config, _ = load_config(overrides={'ablation': 'CImplant'})
    assert Orchestrator(RunContext(config, "pipeline", tmp_path)).initial_context({})['toggles']['implant']


@pytest.mark.asyncio
async def test_failed_agent_aborts_pipeline(run_context, case_dir, tmp_path):
    bogus = tmp_path / "bogus.cdrn"
    bogus.write_bytes(b"not a checkpoint")
    orchestrator = Orchestrator(run_context)
    context = await orchestrator.run_pipeline({'input_dir': case_dir, 'checkpoint': bogus})
    assert orchestrator.failure is not None
    assert orchestrator.failure.agent_name == 'reconstruct'
    assert orchestrator.failure.result.error_category == 'data'
    assert 'postprocess' not in orchestrator.results
    assert 'outputs' not in context
