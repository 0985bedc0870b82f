from __future__ import annotations
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping

BASE_DIR = Path(__file__).resolve()
project_root = BASE_DIR.parent.parent.parent

FAMILIES_DIR = project_root / "Data" / "Families"
INPUTS_DIR = project_root / "Data" / "Inputs"

TOOL_VERSION = "1.0.0"
SCHEMA_VERSION = 1

# ================================================================
# Environment overrides: variable -> option field
# ================================================================
ENV_OVERRIDES = {
    "DOUBLES_PENALTY": "penalty",
    "DOUBLES_WINDOW": "window",
    "DOUBLES_MIN_WITNESS": "min_witness_length",
    "DOUBLES_THREADS": "threads",
    "DOUBLES_BLOCK_ROWS": "block_rows",
}


@dataclass(frozen=True)
class PipelineOptions:
    penalty: int = 0
    window: int = 3
    divergence_step: int = 1
    min_witness_length: int = 6
    min_sparse_points: int = 4
    threads: int = 1
    block_rows: int = 32

    def __post_init__(self):
        if self.penalty < 0:
            raise ValueError("penalty must be >= 0")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.divergence_step < 1:
            raise ValueError("divergence_step must be >= 1")
        if self.min_witness_length < 1 or self.min_sparse_points < 1:
            raise ValueError("witness lengths must be >= 1")
        if self.threads < 1 or self.block_rows < 1:
            raise ValueError("threads and block_rows must be >= 1")

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> "PipelineOptions":
        env = os.environ if environ is None else environ
        overrides: Dict[str, Any] = {}
        for var, name in ENV_OVERRIDES.items():
            raw = env.get(var)
            if raw is None or not raw.strip():
                continue
            try:
                overrides[name] = int(raw)
            except ValueError:
                raise ValueError(f"{var} must be an integer, got {raw!r}")
        return cls(**overrides)

    def merged(self, **overrides: Any) -> "PipelineOptions":
        known = {f.name for f in fields(self)}
        clean = {k: int(v) for k, v in overrides.items() if k in known and v is not None}
        return replace(self, **clean)

    def as_dict(self) -> Dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}
