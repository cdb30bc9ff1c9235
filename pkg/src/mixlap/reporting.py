"""Report bundles, verdicts, and deterministic atomic file output.

CSV bodies are byte-deterministic for a fixed config: floats are rendered with
%.12g, the decimal separator is '.', rows end with LF, and iteration orders
are fixed upstream.  Files are written via a temp file and os.replace.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field

__all__ = [
    "Verdict",
    "ReportBundle",
    "config_hash",
    "format_float",
    "write_json_atomic",
    "write_csv_atomic",
]

PACKAGE_VERSION = "0.1.0"


@dataclass
class Verdict:
    """One pass/fail record tied to an acceptance-criterion id."""

    criterion: str
    passed: bool
    measured: object
    target: object
    tolerance: object
    detail: str = ""


@dataclass
class ReportBundle:
    kind: str
    config_hash: str
    version: str = PACKAGE_VERSION
    wall_time: float = 0.0
    records: list = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config_hash": self.config_hash,
            "version": self.version,
            "wall_time": self.wall_time,
            "records": self.records,
            "verdicts": [asdict(v) for v in self.verdicts],
            "all_passed": self.all_passed,
        }


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def format_float(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _atomic_write(path: str, data: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _NumpyEncoder(json.JSONEncoder):
    def default(self, obj):
        import numpy as np

        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return super().default(obj)


def write_json_atomic(path: str, obj) -> None:
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    _atomic_write(path, json.dumps(obj, indent=2, cls=_NumpyEncoder) + "\n")


def write_csv_atomic(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")
