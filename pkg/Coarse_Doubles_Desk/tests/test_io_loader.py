import json

import pytest

from doubles.catalog import family_from_spec
from doubles.config import FAMILIES_DIR, INPUTS_DIR, TOOL_VERSION, PipelineOptions
from doubles.errors import CodecError, DoubleValidationError, InvalidInputError
from doubles.io_loader import (
    config_hash,
    dumps_metric,
    family_spec_from_table,
    load_double,
    load_experiment,
    load_families,
    load_family_spec,
    load_metric,
    load_report,
    metric_from_dict,
    metric_to_dict,
    save_metric,
    save_report,
    spec_to_dict,
)
from doubles.models import FiniteMetric


# ---------- JSON artifacts ----------
def test_double_round_trip_is_byte_identical(tmp_path, c_wedge):
    D = c_wedge.top.prefix(64)
    path = save_metric(tmp_path / "wedge.json", D)
    loaded = load_double(path)
    assert loaded == D
    assert dumps_metric(loaded) == path.read_text(encoding="utf-8")


def test_canonical_key_order(c_wedge):
    data = metric_to_dict(c_wedge.at(0))
    assert list(data) == ["version", "n", "scale_denominator", "dist", "labels", "cross"]
    assert "cross" not in metric_to_dict(c_wedge.at(0).base)


def test_plain_metric_loads_as_finite_metric(tmp_path, c_wedge):
    path = save_metric(tmp_path / "base.json", c_wedge.at(0).base)
    assert isinstance(load_metric(path), FiniteMetric)
    with pytest.raises(CodecError):
        load_double(path)


def test_unsupported_version():
    with pytest.raises(CodecError):
        metric_from_dict({"version": 2, "n": 1, "dist": [[0]]})


def test_negative_cross_is_rejected():
    data = {"version": 1, "n": 2, "dist": [[0, 1], [1, 0]], "cross": [[1, 2], [2, -1]]}
    with pytest.raises(DoubleValidationError) as exc:
        metric_from_dict(data)
    assert exc.value.report.violations[0].kind == "floor"


def test_bad_matrices():
    with pytest.raises(CodecError):
        metric_from_dict({"version": 1, "n": 2, "dist": [[0, 1.5], [1.5, 0]]})
    with pytest.raises(CodecError):
        metric_from_dict({"version": 1, "n": 2, "dist": [[0, 2 ** 41], [2 ** 41, 0]]})
    with pytest.raises(CodecError):
        metric_from_dict({"version": 1, "n": 3, "dist": [[0, 1], [1, 0]]})
    with pytest.raises(InvalidInputError):
        metric_from_dict({"version": 1, "n": 3, "dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]})


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(CodecError):
        load_metric(path)


# ---------- Reports ----------
def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_report_and_timings_sidecar(tmp_path):
    path = save_report(tmp_path / "out" / "report.json", {"verdict": "holds"}, {"k": 1}, {"wall_seconds": 0.5})
    report = load_report(path)
    assert report["tool_version"] == TOOL_VERSION
    assert report["config_hash"] == config_hash({"k": 1})
    assert report["verdict"] == "holds"
    assert "wall_seconds" not in json.dumps(report)
    sidecar = json.loads((tmp_path / "out" / "report.timings.json").read_text(encoding="utf-8"))
    assert sidecar == {"wall_seconds": 0.5}


def test_load_report_rejects_other_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text('{"verdict": "holds"}', encoding="utf-8")
    with pytest.raises(CodecError):
        load_report(path)


# ---------- TOML ----------
def test_bundled_families_load():
    specs = load_families(FAMILIES_DIR)
    assert {"b_line", "c_wedge", "focused", "unit", "line_wedge"} <= set(specs)
    assert specs["b_line"].levels == (16, 32, 64, 128, 256)
    assert specs["b_line_plus5"].plus == 5
    assert dict(specs["focused"].kind_params) == {"basepoint": 0, "lambda": 1}


def test_family_spec_round_trip():
    spec = load_family_spec(FAMILIES_DIR / "focused.toml")
    assert family_spec_from_table(spec_to_dict(spec)) == spec
    F = family_from_spec(spec)
    assert F.top.cross[1, 2] == 4


def test_unvalidated_family_spec():
    spec = load_family_spec(FAMILIES_DIR / "cwedge_double.toml")
    assert spec.validated is False
    assert spec_to_dict(spec)["validate"] is False
    assert family_spec_from_table(spec_to_dict(spec)) == spec
    assert "validate" not in spec_to_dict(load_family_spec(FAMILIES_DIR / "cwedge.toml"))
    with pytest.raises(CodecError):
        family_spec_from_table({"space": "halfline", "levels": [4, 8], "kind": "lambda", "validate": False}, "kind")
    with pytest.raises(CodecError):
        family_spec_from_table({"space": "halfline", "levels": [4, 8], "cross": "dxy + 1", "validate": "no"}, "flag")


def test_family_tables_need_exactly_one_definition():
    with pytest.raises(CodecError):
        family_spec_from_table({"space": "halfline", "levels": [4, 8], "cross": "dxy + 1", "kind": "lambda"}, "both")
    with pytest.raises(CodecError):
        family_spec_from_table({"space": "halfline", "levels": [4, 8]}, "neither")
    with pytest.raises(CodecError):
        family_spec_from_table({"space": "halfline", "levels": "4,8", "kind": "lambda"}, "levels")
    with pytest.raises(CodecError):
        family_spec_from_table({"levels": [4], "kind": "lambda"}, "space")


def test_bundled_experiment():
    config = load_experiment(INPUTS_DIR / "experiment.toml", PipelineOptions())
    assert [s.name for s in config.families] == ["S", "T"]
    assert config.families[0].cross == "abs(x0 - y0) + min(x0, y0) + 1"
    assert config.options.window == 3 and config.options.min_witness_length == 6
    assert config.output_dir == "Data/Outputs" and config.emit_csv is False


def test_experiment_inline_families_and_unknown_keys(tmp_path):
    good = tmp_path / "inline.toml"
    good.write_text(
        '[pipeline]\npenalty = 1\n\n[families.S]\nspace = "line"\nlevels = [4, 8, 16, 32]\n'
        'kind = "reflect"\n\n[families.T]\nspace = "line"\nlevels = [4, 8, 16, 32]\ncross = "dxy + 2"\n',
        encoding="utf-8",
    )
    config = load_experiment(good, PipelineOptions())
    assert config.options.penalty == 1
    assert config.families[0].kind == "reflect"
    assert config.seed == 0

    bad = tmp_path / "bad.toml"
    bad.write_text("[pipeline]\nspeed = 3\n\n[families.S]\nfile = \"bline.toml\"\n", encoding="utf-8")
    with pytest.raises(CodecError):
        load_experiment(bad, PipelineOptions())

    missing = tmp_path / "missing.toml"
    missing.write_text('[families.S]\nfile = "nowhere.toml"\n', encoding="utf-8")
    with pytest.raises(CodecError):
        load_experiment(missing, PipelineOptions())


# ---------- Options ----------
def test_options_from_environment():
    opts = PipelineOptions.from_env({"DOUBLES_WINDOW": "4", "DOUBLES_THREADS": " "})
    assert opts.window == 4 and opts.threads == 1
    with pytest.raises(ValueError):
        PipelineOptions.from_env({"DOUBLES_PENALTY": "lots"})
    with pytest.raises(ValueError):
        PipelineOptions(window=0)
    merged = opts.merged(penalty=1, window=None, colour=3)
    assert merged.penalty == 1 and merged.window == 4
