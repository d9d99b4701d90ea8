from pathlib import Path

import orjson
import pytest

from agents.core.run_context import MANIFEST_FILE, RunContext, file_sha256, software_versions


@pytest.mark.asyncio
async def test_context_updates_record_artifacts(run_context, tmp_path):
    await run_context.update_context("mesh", {"artifacts": [str(tmp_path / "a.stl")]})
    await run_context.update_context("metrics", {"artifacts": [str(tmp_path / "a.stl")], "summary": {}})
    context = await run_context.get_context()
    assert set(context) == {"mesh", "metrics"}
    assert run_context.artifacts == [tmp_path / "a.stl"]


def test_manifest_lists_artifacts_with_hashes(desk_config, tmp_path):
    out = tmp_path / "run"
    data_dir = out / "cases" / "c1"
    data_dir.mkdir(parents=True)
    (data_dir / "defect.nrrd").write_bytes(b"payload")
    context = RunContext(desk_config, "preprocess", out, {"input_dir": Path("in")}, ["defaults", "profile:desk"])
    context.record_artifact(out / "cases")
    path = context.write_manifest()
    assert path == out / MANIFEST_FILE
    manifest = orjson.loads(path.read_bytes())
    assert manifest["subcommand"] == "preprocess"
    assert manifest["inputs"] == {"input_dir": "in"}
    assert manifest["config_hash"] == context.config_hash
    assert manifest["precedence"] == ["defaults", "profile:desk"]
    assert manifest["seed"] == desk_config.seed
    [artifact] = manifest["artifacts"]
    assert artifact["bytes"] == 7
    assert artifact["sha256"] == file_sha256(data_dir / "defect.nrrd")
    assert "numpy" in manifest["software"]


def test_software_versions_include_python():
    versions = software_versions()
    assert versions["python"]
    assert set(versions) >= {"numpy", "scipy", "trimesh", "pydantic"}
