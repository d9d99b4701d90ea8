"""
Single-line key=value log records:

    ts=2024-01-01T12:00:00.000+00:00 level=INFO logger=nnet.trainer msg="Epoch 3" epoch=3 lr=0.0027

Structured fields travel in ``extra={"fields": {...}}`` and are rendered
sorted by key after the message.
"""

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

CRITICAL_LOG = "critical.log"


def _quote(value) -> str:
    text = str(value)
    if text == "" or any(c in text for c in ' ="\n'):
        text = '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'
    return text


class KeyValueFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        ts = datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(timespec="milliseconds")
        parts = [f"ts={ts}", f"level={record.levelname}", f"logger={record.name}",
                 f"msg={_quote(record.getMessage())}"]
        fields = getattr(record, "fields", None) or {}
        parts.extend(f"{key}={_quote(fields[key])}" for key in sorted(fields))
        if record.exc_info:
            parts.append(f"exc={_quote(self.formatException(record.exc_info))}")
        return " ".join(parts)


def configure_logging(level: Union[int, str] = logging.INFO,
                      output_dir: Optional[Union[str, Path]] = None) -> logging.Logger:
    """Install the key=value stream handler and, with ``output_dir``, an
    ERROR-level file handler at ``<output_dir>/logs/critical.log``."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_cranial", False):
            root.removeHandler(handler)
            handler.close()
    formatter = KeyValueFormatter()
    stream = logging.StreamHandler()
    stream.setFormatter(formatter)
    stream._cranial = True  # type: ignore[attr-defined]
    root.addHandler(stream)
    if output_dir is not None:
        log_dir = Path(output_dir) / "logs"
        log_dir.mkdir(parents=True, exist_ok=True)
        critical = logging.FileHandler(log_dir / CRITICAL_LOG)
        critical.setLevel(logging.ERROR)
        critical.setFormatter(formatter)
        critical._cranial = True  # type: ignore[attr-defined]
        root.addHandler(critical)
    root.setLevel(level)
    return root
