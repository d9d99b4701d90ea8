"""
Fixtures for the stage agents: preprocessed cases and a network that marks every voxel.
"""

import pytest
import pytest_asyncio

from agents.core.agent_base import AgentStatus
from agents.preprocess.main import PreprocessAgent
from agents.reconstruct.main import ReconstructAgent


@pytest_asyncio.fixture
async def preprocessed_dir(case_dir, run_context, tmp_path):
    agent = PreprocessAgent(agent_id="preprocess", run_context=run_context, config={})
    result = await agent.execute({"input_dir": case_dir, "output_dir": tmp_path / "preprocessed"})
    assert result.data.get("error") is None
    return tmp_path / "preprocessed"


@pytest_asyncio.fixture
async def reconstructed_dir(run_context, preprocessed_dir, eager_checkpoint, tmp_path):
    result = await ReconstructAgent("reconstruct", run_context, {}).execute(
        {'input_dir': preprocessed_dir, 'checkpoint': eager_checkpoint, 'output_dir': tmp_path / "coarse"})
    assert result.status == AgentStatus.COMPLETED
    return tmp_path / "coarse"
