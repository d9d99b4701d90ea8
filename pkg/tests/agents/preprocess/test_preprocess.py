import pytest

from agents.core.agent_base import AgentStatus
from agents.preprocess.main import PreprocessAgent
from agents.utils.case_store import case_provenance, load_cases


@pytest.mark.asyncio
async def test_cases_land_on_the_canvas(preprocessed_dir, desk_config):
    """Every case is mapped onto the configured canvas with its provenance kept."""
    cases = load_cases(preprocessed_dir)
    assert len(cases) == 6
    for case in cases:
        assert case.defective.dims == tuple(desk_config.preprocess.target_dims)
        assert case.defective.spacing == tuple(desk_config.preprocess.target_spacing)
        assert case.violations() == 0
        provenance = case_provenance(case)
        assert provenance.original_dims == (28, 24, 28)
        assert not provenance.overflow_flag


@pytest.mark.asyncio
async def test_missing_input_dir(run_context, tmp_path):
    """A nonexistent input directory is a configuration error."""
    agent = PreprocessAgent(agent_id="preprocess", run_context=run_context, config={})
    result = await agent.execute({'input_dir': tmp_path / "nowhere", 'output_dir': tmp_path / "out"})
    assert result.status == AgentStatus.FAILED
    assert result.error_category == 'config'


@pytest.mark.asyncio
async def test_empty_input_dir_is_a_data_error(run_context, tmp_path):
    (tmp_path / "empty").mkdir()
    agent = PreprocessAgent(agent_id="preprocess", run_context=run_context, config={})
    result = await agent.execute({'input_dir': tmp_path / "empty", 'output_dir': tmp_path / "out"})
    assert result.status == AgentStatus.FAILED
    assert result.error_category == 'data'
