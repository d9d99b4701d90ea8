import asyncio
import threading
import time

import numpy as np
import pytest

from agents.core.agent_base import AgentStatus, BaseAgent, map_cases
from agents.utils.case_store import write_cases
from dataio.cases import CaseRecord
from volume.errors import EmptyDataset, StageCancelled
from volume.grid import VoxelGrid


class EchoAgent(BaseAgent):
    """Returns its inputs, or raises what it is told to."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['value'],
                'field_types': {'value': 'integer', 'raise': 'string'},
                'field_constraints': {'value': {'min': 0}},
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs):
        failure = inputs.get('raise')
        if failure == 'data':
            raise EmptyDataset("nothing to do", case_id="c7")
        if failure == 'crash':
            raise KeyError('boom')
        if failure == 'slow':
            time.sleep(0.3)
            skull = VoxelGrid.binary(np.ones((2, 2, 2), dtype=bool))
            write_cases([CaseRecord(None, skull, None, "late")], inputs['output_dir'], cancelled=self.cancelled)
        return {'value': inputs['value'], 'artifacts': ['somewhere/out.csv']}


@pytest.fixture
def agent(run_context):
    return EchoAgent(agent_id="echo", run_context=run_context, config={})


def _square(x):
    return x * x


@pytest.mark.asyncio
async def test_successful_run_updates_context(agent, run_context):
    """A completed run lands in the shared context and records its artifacts."""
    result = await agent.execute({'value': 3})
    assert result.status == AgentStatus.COMPLETED
    assert result.data['value'] == 3
    assert result.error_category is None
    context = await run_context.get_context()
    assert context['echo']['value'] == 3
    assert [str(p) for p in run_context.artifacts] == ['somewhere/out.csv']


@pytest.mark.asyncio
async def test_validation_failure_is_a_config_error(agent):
    """Missing or out-of-range inputs fail before the stage runs."""
    result = await agent.execute({'value': -1})
    assert result.status == AgentStatus.FAILED
    assert result.error_category == 'config'
    assert 'must be at least 0' in result.error_details
    missing = await agent.execute({})
    assert 'Missing required field: value' in missing.error_details


@pytest.mark.asyncio
async def test_toolkit_errors_keep_their_category(agent):
    """Toolkit errors become FAILED results carrying the error category and case id."""
    result = await agent.execute({'value': 1, 'raise': 'data'})
    assert result.status == AgentStatus.FAILED
    assert result.error_category == 'data'
    assert '(case=c7)' in result.data['error']


@pytest.mark.asyncio
async def test_unexpected_errors_are_runtime_failures(agent):
    result = await agent.execute({'value': 1, 'raise': 'crash'})
    assert result.status == AgentStatus.FAILED
    assert result.error_category == 'runtime'
    assert result.error_details.startswith('KeyError')


@pytest.mark.asyncio
async def test_timeout_cancels_the_stage(run_context, tmp_path):
    """After a timeout the stage thread stops before writing anything."""
    agent = EchoAgent(agent_id="echo", run_context=run_context, config={'timeout_seconds': 0.05})
    result = await agent.execute({'value': 1, 'raise': 'slow', 'output_dir': tmp_path / "late"})
    assert result.status == AgentStatus.TIMEOUT
    assert result.error_category == 'runtime'
    assert agent.cancelled.is_set()
    await asyncio.sleep(0.6)
    assert not (tmp_path / "late").exists()
    assert run_context.artifacts == []
    assert 'echo' not in await run_context.get_context()


def test_option_falls_back_on_missing_and_none():
    assert BaseAgent.option({'a': None}, 'a', 5) == 5
    assert BaseAgent.option({}, 'a', 5) == 5
    assert BaseAgent.option({'a': 0}, 'a', 5) == 0


def test_map_cases_preserves_order():
    assert map_cases(_square, [3, 1, 2]) == [9, 1, 4]
    assert map_cases(_square, [3, 1, 2], jobs=2) == [9, 1, 4]


def test_map_cases_stops_once_cancelled():
    cancelled = threading.Event()
    seen = []

    def work(x):
        seen.append(x)
        if x == 2:
            cancelled.set()
        return x

    with pytest.raises(StageCancelled):
        map_cases(work, [1, 2, 3], cancelled=cancelled)
    assert seen == [1, 2]


def test_write_cases_refuses_once_cancelled(tmp_path):
    cancelled = threading.Event()
    cancelled.set()
    skull = VoxelGrid.binary(np.ones((2, 2, 2), dtype=bool))
    with pytest.raises(StageCancelled):
        write_cases([CaseRecord(None, skull, None, "c")], tmp_path / "out", cancelled=cancelled)
    assert not (tmp_path / "out").exists()
