import pytest

from agents.augment_register.main import AugmentRegisterAgent
from agents.core.agent_base import AgentStatus
from agents.core.config import load_config
from agents.core.run_context import RunContext
from agents.utils.case_store import load_cases


@pytest.fixture
def agent(tmp_path):
    config, _ = load_config(overrides={"registration": {"preset": "imperfect", "iterations": 3, "levels": 2}})
    return AugmentRegisterAgent("augment_register", RunContext(config, "augment-register", tmp_path / "run"), {})


@pytest.mark.asyncio
async def test_pair_budget_limits_new_cases(agent, case_dir, tmp_path):
    result = await agent.execute({'input_dir': case_dir, 'output_dir': tmp_path / "reg", 'pair_budget': 2})
    assert result.status == AgentStatus.COMPLETED
    assert result.data['preset'] == 'imperfect'
    assert len(result.data['case_ids']) <= 2
    for case in load_cases(tmp_path / "reg"):
        assert case.violations() == 0
        assert case.metadata['source'] != case.metadata['target']


@pytest.mark.asyncio
async def test_zero_budget_produces_nothing(agent, case_dir, tmp_path):
    result = await agent.execute({'input_dir': case_dir, 'output_dir': tmp_path / "reg", 'pair_budget': 0})
    assert result.status == AgentStatus.COMPLETED
    assert result.data['case_ids'] == []


@pytest.mark.asyncio
async def test_unknown_preset(agent, case_dir, tmp_path):
    result = await agent.execute({'input_dir': case_dir, 'output_dir': tmp_path / "reg", 'preset': 'rigid'})
    assert result.error_category == 'config'
