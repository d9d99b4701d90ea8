import numpy as np
import pytest

from agents.augment_vae.main import AugmentVaeAgent
from agents.core.agent_base import AgentStatus
from agents.utils.case_store import load_cases
from vae import generate, load_vae


def slab_decoder(weights, z):
    """Skull in the lower half, defect just above it."""
    out = np.zeros((1, 2) + weights.descriptor.input_dims)
    out[0, 0, :12] = 1.0
    out[0, 1, 10:16] = 1.0
    return out


@pytest.mark.asyncio
async def test_trains_and_generates(run_context, preprocessed_dir, tmp_path, monkeypatch):
    """The stage saves the VAE and writes valid generated cases on the training grid."""
    monkeypatch.setattr(generate, "decode_latents", slab_decoder)
    checkpoint = tmp_path / "vae.cdrv"
    result = await AugmentVaeAgent("augment_vae", run_context, {}).execute(
        {'input_dirs': [preprocessed_dir], 'output_dir': tmp_path / "vae_cases", 'checkpoint': checkpoint, 'n': 2})
    assert result.status == AgentStatus.COMPLETED
    assert result.data['checkpoint'] == str(checkpoint)
    assert np.isfinite(result.data['final_loss'])
    assert load_vae(checkpoint).descriptor.latent_dim == 4
    generated = load_cases(tmp_path / "vae_cases")
    assert [c.case_id for c in generated] == ["vae_00000", "vae_00001"]
    for case in generated:
        assert case.violations() == 0
        assert case.defective.dims == (24, 24, 24)
        assert case.defect.count() == 4 * 24 * 24


@pytest.mark.asyncio
async def test_input_dirs_must_be_a_list(run_context, preprocessed_dir, tmp_path):
    result = await AugmentVaeAgent("augment_vae", run_context, {}).execute(
        {'input_dirs': str(preprocessed_dir), 'output_dir': tmp_path / "out"})
    assert result.error_category == 'config'
