"""
Shared state of one CLI run: the effective configuration, the workflow
context the stage agents read and write, and the run manifest.
"""

import asyncio
import hashlib
import logging
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import orjson

from agents.core.config import PipelineConfig, config_hash

logger = logging.getLogger(__name__)

MANIFEST_FILE = "run_manifest.json"
TRACKED_PACKAGES = ("numpy", "scipy", "scikit-image", "trimesh", "pynrrd", "PyYAML", "pydantic", "orjson")


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def software_versions() -> Dict[str, Optional[str]]:
    versions: Dict[str, Optional[str]] = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


class RunContext:
    def __init__(self, config: PipelineConfig, subcommand: str, output_dir: Union[str, Path],
                 inputs: Optional[Dict[str, Any]] = None, precedence: Optional[List[str]] = None):
        self.config = config
        self.subcommand = subcommand
        self.output_dir = Path(output_dir)
        self.inputs = dict(inputs or {})
        self.precedence = list(precedence or [])
        self.artifacts: List[Path] = []
        self._context: Dict[str, Any] = {}
        self._lock = asyncio.Lock()

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    async def get_context(self) -> Dict[str, Any]:
        async with self._lock:
            return dict(self._context)

    async def update_context(self, agent_id: str, data: Dict[str, Any]) -> None:
        async with self._lock:
            self._context[agent_id] = data
            for path in data.get("artifacts", []):
                self.record_artifact(path)

    def record_artifact(self, path: Union[str, Path]) -> None:
        path = Path(path)
        if path not in self.artifacts:
            self.artifacts.append(path)

    def manifest(self) -> Dict[str, Any]:
        artifacts = []
        for path in self.artifacts:
            files = sorted(p for p in path.rglob("*") if p.is_file()) if path.is_dir() else [path]
            for item in files:
                if item.is_file():
                    artifacts.append({"path": str(item), "sha256": file_sha256(item), "bytes": item.stat().st_size})
        return {
            "subcommand": self.subcommand,
            "created": datetime.now(timezone.utc).isoformat(),
            "inputs": {k: str(v) if isinstance(v, Path) else v for k, v in self.inputs.items()},
            "config": self.config.model_dump(mode="json"),
            "config_hash": self.config_hash,
            "precedence": self.precedence,
            "seed": self.config.seed,
            "artifacts": artifacts,
            "software": software_versions(),
        }

    def write_manifest(self) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / MANIFEST_FILE
        path.write_bytes(orjson.dumps(self.manifest(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS,
                                      default=str))
        logger.info(f"Wrote run manifest {path} ({len(self.artifacts)} artifact roots)")
        return path
