import numpy as np
import pytest

from agents.core.agent_base import AgentStatus
from agents.gen_synthetic.main import GenSyntheticAgent
from dataio.cases import read_case


@pytest.fixture
def agent(run_context):
    """Fixture to provide a GenSyntheticAgent on the small desk configuration."""
    return GenSyntheticAgent(agent_id="gen_synthetic", run_context=run_context, config={})


@pytest.mark.asyncio
async def test_both_groups_split_the_count(agent, tmp_path):
    """An odd count gives the varied group the remainder."""
    result = await agent.execute({'output_dir': tmp_path / "synth", 'n': 5, 'seed': 7})
    assert result.status == AgentStatus.COMPLETED
    assert result.data['case_ids'] == ['varied_000', 'varied_001', 'varied_002', 'uniform_000', 'uniform_001']
    for case_id in result.data['case_ids']:
        case = read_case(tmp_path / "synth" / case_id)
        assert case.violations() == 0
        assert case.metadata['group'] == case_id.split('_')[0]


@pytest.mark.asyncio
async def test_same_seed_same_data(agent, tmp_path):
    """Generation is deterministic per seed."""
    await agent.execute({'output_dir': tmp_path / "a", 'n': 2, 'seed': 3, 'group': 'uniform'})
    await agent.execute({'output_dir': tmp_path / "b", 'n': 2, 'seed': 3, 'group': 'uniform'})
    await agent.execute({'output_dir': tmp_path / "c", 'n': 2, 'seed': 4, 'group': 'uniform'})
    a = read_case(tmp_path / "a" / "uniform_000")
    b = read_case(tmp_path / "b" / "uniform_000")
    c = read_case(tmp_path / "c" / "uniform_000")
    assert np.array_equal(a.defect.data, b.defect.data)
    assert not np.array_equal(a.defect.data, c.defect.data)


@pytest.mark.asyncio
async def test_invalid_group(agent, tmp_path):
    """An unknown group fails validation."""
    result = await agent.execute({'output_dir': tmp_path, 'group': 'mixed'})
    assert result.status == AgentStatus.FAILED
    assert result.error_category == 'config'
