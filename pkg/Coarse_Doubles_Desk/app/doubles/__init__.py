"""Coarse doubles: metrics on X ⊔ X′ up to coarse equivalence, their min-plus
algebra, and the order oracle that compares them on finite truncation ladders."""
from __future__ import annotations

from .catalog import (
    catalog_family,
    compose_families,
    dsl_family,
    function_family,
    named_family,
    shift_family,
    transpose_family,
)
from .coarse_order import build_homeomorphism, check_controls, check_equivalent, control_profile, is_idempotent
from .config import TOOL_VERSION as __version__, PipelineOptions
from .double_space import assemble_double, make_catalog_double, transpose, validate_double
from .dsl import eval_cross_expr, parse_cross_expr, to_text
from .fundamentality import (
    build_separating_metric,
    extract_witness,
    fundamentality_experiment,
    mu_action,
    sparsify_witness,
    verify_lemma_main,
)
from .metric_core import as_metric, generate_space, metric_closure, validate_metric
from .models import ComposeOptions, DoubleMetric, FiniteMetric, Ladder, MetricFamily
from .tropical import bench_minplus, compose, compose_chain
