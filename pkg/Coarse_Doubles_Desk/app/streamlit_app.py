from __future__ import annotations
import json
from dataclasses import replace
from pathlib import Path
from typing import Dict, List

import pandas as pd
import streamlit as st

from doubles.catalog import family_from_spec, is_validated
from doubles.coarse_order import check_controls, check_equivalent, is_idempotent
from doubles.config import PipelineOptions
from doubles.errors import DoublesError
from doubles.formatting import (
    experiment_to_dict,
    lemma_frame,
    lemma_report_to_dict,
    profile_table,
    sparse_frame,
    verdict_to_dict,
    witness_frame,
)
from doubles.fundamentality import fundamentality_experiment, verify_lemma_main
from doubles.io_loader import load_families
from doubles.models import Fails, FamilySpec, Holds

BASE_DIR = Path(__file__).resolve()
project_root = BASE_DIR.parent.parent

DEFAULT_FAMILIES = str(project_root / "Data" / "Families")

# ---------- Page ----------
st.set_page_config(page_title="Coarse Doubles Desk", page_icon="🧭", layout="wide")
st.title("Coarse Doubles Desk")

if "desk_state" not in st.session_state:
    st.session_state["desk_state"] = None  # last computed verdicts and tables

# ---------- Sidebar ----------
with st.sidebar:
    st.header("Settings")
    families_path = st.text_input("Families folder", value=DEFAULT_FAMILIES)
    window = st.number_input("Stability window (levels)", min_value=1, max_value=8, value=3, step=1)
    min_witness = st.number_input("Minimum witness length", min_value=1, max_value=64, value=6, step=1)
    penalty = st.selectbox("Junction penalty (quanta)", [0, 1], index=0)
    threads = st.number_input("Min-plus threads", min_value=1, max_value=32, value=1, step=1)
    levels_text = st.text_input("Override ladder levels (comma-separated, optional)", value="")

opts = PipelineOptions.from_env().merged(
    window=window, min_witness_length=min_witness, penalty=penalty, threads=threads
)

# ---------- Load families ----------
folder = Path(families_path)
if not folder.exists():
    st.error(f"Folder not found: {families_path}")
    st.stop()

try:
    specs: Dict[str, FamilySpec] = load_families(folder)
except DoublesError as e:
    st.error(f"Failed to load family specs: {e}")
    st.stop()

if not specs:
    st.warning("No *.toml family specs found in the selected folder.")
    st.stop()

with st.expander("Family specs"):
    st.dataframe(
        pd.DataFrame(
            [
                {
                    "name": s.name,
                    "space": s.space,
                    "levels": ", ".join(str(v) for v in s.levels),
                    "cross / kind": s.cross or s.kind,
                    "plus": s.plus,
                }
                for s in specs.values()
            ]
        ),
        use_container_width=True,
    )


def _with_levels(spec: FamilySpec) -> FamilySpec:
    if not levels_text.strip():
        return spec
    try:
        levels = tuple(int(v) for v in levels_text.replace(" ", "").split(",") if v)
    except ValueError:
        st.error("Levels must be comma-separated integers.")
        st.stop()
    return replace(spec, levels=levels)


names: List[str] = sorted(specs)
left, right = st.columns(2)
with left:
    first = st.selectbox("F (controls)", names, index=names.index("c_wedge") if "c_wedge" in names else 0)
with right:
    second = st.selectbox("G (controlled)", names, index=names.index("b_line") if "b_line" in names else 0)

spec_f, spec_g = _with_levels(specs[first]), _with_levels(specs[second])

# ---------- Actions ----------
c1, c2, c3 = st.columns(3)
run_order = c1.button("Compare F and G", type="primary")
run_lemma = c2.button("Bounded vs diverging diagonals (B = F, C = G)")
run_experiment = c3.button("Separate F and G by an idempotent")

try:
    if run_order:
        with st.spinner("Computing control profiles..."):
            F, G = family_from_spec(spec_f), family_from_spec(spec_g)
            st.session_state["desk_state"] = {
                "kind": "order",
                "profile": profile_table(F, G),
                "forward": check_controls(F, G, opts),
                "equivalence": check_equivalent(F, G, opts),
                "idempotent": is_idempotent(F, opts).outcome if is_validated(F) else "n/a (function family)",
            }
    if run_lemma:
        with st.spinner("Building the separating metric..."):
            report = verify_lemma_main(family_from_spec(spec_f), family_from_spec(spec_g), opts=opts)
            st.session_state["desk_state"] = {"kind": "lemma", "report": report}
    if run_experiment:
        with st.spinner("Running the separation experiment..."):
            report = fundamentality_experiment(family_from_spec(spec_f), family_from_spec(spec_g), opts)
            st.session_state["desk_state"] = {"kind": "experiment", "report": report}
except DoublesError as e:
    st.error(f"{type(e).__name__}: {e}")
    st.session_state["desk_state"] = None

# ---------- Render (always) ----------
state = st.session_state.get("desk_state")
if state and state["kind"] == "order":
    forward = state["forward"]
    st.subheader(f"controls({spec_f.name} ⊢ {spec_g.name}): {forward.outcome}")
    if isinstance(forward, Holds):
        phi = forward.certificate
        st.success("φ = identity" if phi.is_identity() else f"φ with {len(phi.breakpoints)} breakpoints, tail slope {phi.tail_slope}")
    elif isinstance(forward, Fails):
        st.warning(f"Witness: {len(forward.witness)} pairs with F < {forward.witness.bound_C}")
        st.dataframe(witness_frame(forward.witness), use_container_width=True)
    else:
        st.info(forward.reason)

    st.markdown("---")
    st.markdown(f"**Coarse equivalence:** {state['equivalence'].outcome} · **F idempotent:** {state['idempotent']}")

    with st.expander("Control profile rho(t) per level"):
        st.dataframe(state["profile"], use_container_width=True)
        st.download_button(
            "Download profile CSV",
            state["profile"].to_csv().encode("utf-8"),
            file_name=f"profile_{spec_f.name}_{spec_g.name}.csv",
        )
    with st.expander("Verdict JSON"):
        st.code(json.dumps(verdict_to_dict(forward), indent=2))

elif state and state["kind"] == "lemma":
    report = state["report"]
    st.subheader(f"sup diag ABA* = {report.sup_diag_aba} (bound {report.aba_bound})")
    if not report.closed_form_ok:
        st.warning("A diagonal value exceeds its closed-form bound.")
    frame = lemma_frame(report)
    st.dataframe(frame, use_container_width=True)
    st.line_chart(frame.set_index("k")[["diag_aba", "diag_aca"]])
    st.markdown(f"**ABA* ~ ACA*:** {report.equivalence_verdict.outcome}")
    with st.expander("Report JSON"):
        st.code(json.dumps(lemma_report_to_dict(report), indent=2))

elif state and state["kind"] == "experiment":
    report = state["report"]
    st.subheader(f"Separation: {report.outcome}")
    if report.note:
        st.info(report.note)
    if report.witness is not None:
        st.markdown(f"Failing direction: **{report.failing_direction}** · C = {report.witness.bound_C}")
        st.dataframe(sparse_frame(report.witness), use_container_width=True)
    with st.expander("Report JSON"):
        st.code(json.dumps(experiment_to_dict(report), indent=2))
