from __future__ import annotations
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 backport with the same API
    import tomli as tomllib

from .config import FAMILIES_DIR, SCHEMA_VERSION, TOOL_VERSION, PipelineOptions
from .double_space import assemble_double
from .errors import CodecError
from .metric_core import as_metric
from .models import MAX_QUANTA, DoubleMetric, ExperimentConfig, FamilySpec, FiniteMetric

logger = logging.getLogger(__name__)

SPACE_PARAM_KEYS = ("width", "branching", "seed", "dim", "box", "scale")
KIND_PARAM_KEYS = ("lambda", "basepoint", "offset")


# ================================================================
# JSON artifacts: metrics and doubles
# ================================================================
def metric_to_dict(value: Union[FiniteMetric, DoubleMetric]) -> Dict[str, Any]:
    """Canonical key order: version, n, scale_denominator, dist, labels?, cross?"""
    base = value.base if isinstance(value, DoubleMetric) else value
    out: Dict[str, Any] = {
        "version": SCHEMA_VERSION,
        "n": base.n,
        "scale_denominator": base.scale_denominator,
        "dist": base.dist.tolist(),
    }
    if base.labels is not None:
        out["labels"] = [list(lab) for lab in base.labels]
    if isinstance(value, DoubleMetric):
        out["cross"] = value.cross.tolist()
    return out


def dumps_metric(value: Union[FiniteMetric, DoubleMetric]) -> str:
    return json.dumps(metric_to_dict(value), separators=(",", ":")) + "\n"


def _int_matrix(raw: Any, n: int, key: str) -> List[List[int]]:
    if not isinstance(raw, list) or len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
        raise CodecError(f"{key!r} must be an {n}x{n} list of lists")
    for row in raw:
        for v in row:
            if isinstance(v, bool) or not isinstance(v, int):
                raise CodecError(f"{key!r} holds a non-integer value {v!r}")
            if abs(v) > MAX_QUANTA:
                raise CodecError(f"{key!r} value {v} overflows the 2^40 quanta cap")
    return raw


def metric_from_dict(data: Dict[str, Any]) -> Union[FiniteMetric, DoubleMetric]:
    version = data.get("version")
    if version != SCHEMA_VERSION:
        raise CodecError(f"unsupported schema version {version!r}; expected {SCHEMA_VERSION}")
    n = data.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise CodecError("'n' must be a positive integer")
    dist = _int_matrix(data.get("dist"), n, "dist")
    labels = data.get("labels")
    base = as_metric(dist, labels, int(data.get("scale_denominator", 1)))
    if "cross" not in data:
        return base
    return assemble_double(base, _int_matrix(data["cross"], n, "cross"))


def save_metric(path: Path, value: Union[FiniteMetric, DoubleMetric]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_metric(value), encoding="utf-8")
    return path


def load_metric(path: Path) -> Union[FiniteMetric, DoubleMetric]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise CodecError(f"{path.name}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, dict):
        raise CodecError(f"{path.name}: expected a JSON object")
    return metric_from_dict(data)


def load_double(path: Path) -> DoubleMetric:
    value = load_metric(path)
    if not isinstance(value, DoubleMetric):
        raise CodecError(f"{Path(path).name} holds a metric without a cross block")
    return value


# ================================================================
# Reports
# ================================================================
def config_hash(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def report_envelope(payload: Dict[str, Any], config: Dict[str, Any]) -> Dict[str, Any]:
    return {"tool_version": TOOL_VERSION, "config_hash": config_hash(config), **payload}


def save_report(
    path: Path,
    payload: Dict[str, Any],
    config: Dict[str, Any],
    timings: Optional[Dict[str, float]] = None,
) -> Path:
    """Write the report and, when given, its timings to a `.timings.json` sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_envelope(payload, config), indent=2) + "\n", encoding="utf-8")
    if timings is not None:
        sidecar = path.with_suffix(".timings.json")
        sidecar.write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_report(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if data.get("tool_version") is None or data.get("config_hash") is None:
        raise CodecError(f"{Path(path).name} is not a report (missing tool_version/config_hash)")
    return data


# ================================================================
# TOML configs
# ================================================================
def _norm_keys(table: Dict[str, Any] | None) -> Dict[str, Any]:
    if not table:
        return {}
    return {str(k).strip().lower(): v for k, v in table.items()}


def family_spec_from_table(table: Dict[str, Any], default_name: str = "") -> FamilySpec:
    data = _norm_keys(table)
    space = data.get("space")
    if not space:
        raise CodecError(f"family {default_name!r} has no 'space'")
    levels = data.get("levels")
    if not isinstance(levels, list) or not levels or not all(isinstance(v, int) for v in levels):
        raise CodecError(f"family {default_name!r} needs 'levels' as a list of integers")
    cross = data.get("cross")
    kind = data.get("kind")
    if (cross is None) == (kind is None):
        raise CodecError(f"family {default_name!r} needs exactly one of 'cross' or 'kind'")
    validated = data.get("validate", True)
    if not isinstance(validated, bool):
        raise CodecError(f"family {default_name!r}: 'validate' must be true or false")
    if not validated and cross is None:
        raise CodecError(f"family {default_name!r}: 'validate = false' needs a 'cross' formula")
    space_params = tuple(sorted((k, data[k]) for k in SPACE_PARAM_KEYS if k in data))
    kind_params = tuple(sorted((k, data[k]) for k in KIND_PARAM_KEYS if k in data))
    return FamilySpec(
        name=str(data.get("name") or default_name),
        space=str(space),
        levels=tuple(levels),
        space_params=space_params,
        cross=cross,
        kind=kind,
        kind_params=kind_params,
        plus=int(data.get("plus", 0)),
        validated=validated,
    )


def _read_toml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise CodecError(f"{Path(path).name}: {exc}") from exc


def load_family_spec(path: Path) -> FamilySpec:
    path = Path(path)
    return family_spec_from_table(_read_toml(path), path.stem)


def load_families(path: Path = FAMILIES_DIR) -> Dict[str, FamilySpec]:
    """Every family TOML in a folder, keyed by family name."""
    specs: Dict[str, FamilySpec] = {}
    for p in sorted(Path(path).glob("*.toml")):
        spec = load_family_spec(p)
        specs[spec.name] = spec
    logger.info("loaded %d family specs from %s", len(specs), path)
    return specs


def load_experiment(path: Path, options: Optional[PipelineOptions] = None) -> ExperimentConfig:
    """`[pipeline]` overrides, `[families.<name>]` tables (inline or `file = ...`), `[output]`."""
    path = Path(path)
    data = _read_toml(path)
    base = options or PipelineOptions.from_env()
    pipeline = _norm_keys(data.get("pipeline"))
    unknown = set(pipeline) - set(base.as_dict())
    if unknown:
        raise CodecError(f"unknown [pipeline] keys: {sorted(unknown)}")
    opts = base.merged(**pipeline)

    families: List[FamilySpec] = []
    for name, table in (data.get("families") or {}).items():
        table = _norm_keys(table)
        ref = table.get("file")
        if ref:
            candidates = [path.parent / ref, FAMILIES_DIR / ref]
            found = next((c for c in candidates if c.exists()), None)
            if found is None:
                raise CodecError(f"family {name!r} references missing file {ref!r}")
            spec = load_family_spec(found)
            families.append(replace(spec, name=name))
        else:
            families.append(family_spec_from_table(table, name))
    if not families:
        raise CodecError(f"{path.name} defines no [families.*] tables")

    output = _norm_keys(data.get("output"))
    return ExperimentConfig(
        families=tuple(families),
        options=opts,
        output_dir=output.get("dir"),
        emit_csv=bool(output.get("emit_csv", False)),
        seed=int(data.get("seed", 0)),
    )


def spec_to_dict(spec: FamilySpec) -> Dict[str, Any]:
    out: Dict[str, Any] = {"name": spec.name, "space": spec.space, "levels": list(spec.levels)}
    out.update(dict(spec.space_params))
    if spec.cross is not None:
        out["cross"] = spec.cross
    else:
        out["kind"] = spec.kind
        out.update(dict(spec.kind_params))
    if spec.plus:
        out["plus"] = spec.plus
    if not spec.validated:
        out["validate"] = False
    return out
