import csv
import shutil

import pytest

from agents.core.agent_base import AgentStatus
from agents.metrics.main import MetricsAgent
from metrics.scores import read_metrics_csv


@pytest.fixture
def agent(run_context):
    return MetricsAgent(agent_id="metrics", run_context=run_context, config={})


@pytest.mark.asyncio
async def test_perfect_predictions(agent, case_dir, tmp_path):
    """Scoring the ground truth against itself gives perfect scores in every report."""
    result = await agent.execute({'pred_dir': case_dir, 'gt_dir': case_dir, 'output_dir': tmp_path / "m"})
    assert result.status == AgentStatus.COMPLETED
    summary = result.data['summary']
    assert summary['mean']['dsc'] == pytest.approx(1.0)
    assert summary['mean']['bdsc'] == pytest.approx(1.0)
    assert summary['mean']['hd95'] == pytest.approx(0.0)
    assert len(read_metrics_csv(result.data['metrics_csv'])) == 6
    with (tmp_path / "m" / "metrics_by_group.csv").open(newline="") as handle:
        groups = {row['group'] for row in csv.DictReader(handle)}
    assert groups == {'varied', 'uniform'}
    assert (tmp_path / "m" / "metrics_cumulative.csv").is_file()


@pytest.mark.asyncio
async def test_missing_ground_truth_defect(agent, case_dir, tmp_path):
    """A ground-truth case without a defect grid is a data error."""
    (case_dir / "uniform_001" / "defect.nrrd").unlink()
    predictions = tmp_path / "pred"
    shutil.copytree(case_dir / "varied_000", predictions / "varied_000")
    shutil.copytree(case_dir / "varied_000", predictions / "uniform_001")
    result = await agent.execute({'pred_dir': predictions, 'gt_dir': case_dir, 'output_dir': tmp_path / "m"})
    assert result.status == AgentStatus.FAILED
    assert result.error_category == 'data'
    assert 'uniform_001' in result.error_details
