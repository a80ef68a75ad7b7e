# app.py — desk dashboard for safe-rounding interval iteration

import io
from fractions import Fraction

import pandas as pd
import streamlit as st

import bench
from exact_oracle import SchedulerLimitExceeded, exact_reachability
from interval_iteration import SolveConfig, Variant
from mdp_model import ModelError, build_counterexample, parse_model, serialize_model
from pctl_check import PropertyError, check, parse_property
from regression_models import build_catalogue, verify
from run_report import RunReport, hex_float
from safe_rounding import Precision, RoundingStrategy, hardware_rounding_available

st.set_page_config(page_title="Safe Interval Iteration", page_icon="🎲", layout="centered")

# Sidebar: solver settings
with st.sidebar:
    st.markdown("# Safe Interval Iteration")
    st.markdown("Guaranteed reachability bounds for MDPs under floating-point rounding.")
    variant = Variant(st.selectbox("Algorithm", [v.value for v in Variant], index=3))
    precision = Precision(st.selectbox("Precision", [p.value for p in Precision], index=1))
    strategy = RoundingStrategy(st.selectbox("Rounding", [s.value for s in RoundingStrategy]))
    epsilon_text = st.text_input("Relative precision ε", "1/1000000")
    check_all = st.checkbox("Stop on all states", value=False)
    st.markdown("---")
    if hardware_rounding_available():
        st.success("Hardware rounding control available")
    else:
        st.warning("No hardware rounding control; nudging instead")

st.title("🎲 Safe-rounding model checker")

try:
    epsilon = Fraction(epsilon_text)
except (ValueError, ZeroDivisionError):
    st.error(f"ε must be a rational number, got {epsilon_text!r}")
    st.stop()

check_tab, bench_tab, catalogue_tab = st.tabs(["Check", "Bench", "Regression models"])

# ───── Check a property ────────────────────────────────────
with check_tab:
    col1, col2 = st.columns([1, 1])
    with col1:
        n = st.number_input("Counterexample n", min_value=0, max_value=50, value=1)
    with col2:
        gamma_text = st.text_input("γ", "1/1000000")
    if st.button("Generate counterexample"):
        try:
            st.session_state.model_text = serialize_model(build_counterexample(int(n), Fraction(gamma_text)))
        except (ModelError, ValueError, ZeroDivisionError) as e:
            st.error(str(e))
    uploaded = st.file_uploader("…or upload a model file", type=["txt", "mdp"])
    if uploaded is not None:
        st.session_state.model_text = uploaded.getvalue().decode("utf-8")
    model_text = st.text_area("Model", st.session_state.get("model_text", ""), height=240)
    property_text = st.text_input("Property", 'P<=1/2 [ F "plus" ]')
    refine = st.checkbox("On unknown, retry once with ε/100")
    with_oracle = st.checkbox("Also compute the exact value (small models only)")

    if st.button("Run check", type="primary"):
        try:
            m = parse_model(model_text)
            prop = parse_property(property_text)
            cfg = SolveConfig(variant=variant, epsilon=epsilon, precision=precision, strategy=strategy,
                              check_all_states=True if check_all else None)
            outcome = check(m, prop, cfg, refine=refine)
            report = RunReport.from_result(
                "dashboard", prop.text, outcome.result,
                outcome.verdict.value if outcome.verdict else None, outcome.refined)
            if report.verdict:
                st.metric("Verdict", report.verdict.upper())
            st.table(pd.DataFrame({
                "bound": ["lower", "upper"],
                "hex": [hex_float(report.lower), hex_float(report.upper)],
                "decimal": [repr(report.lower), repr(report.upper)],
            }))
            st.write(f"{report.sweeps} sweeps ({report.termination}), "
                     f"{report.mode_switches} mode switches, {report.wall_time:.4f}s")
            if report.fallback:
                st.info("Hardware rounding was unavailable; the run used nudged arithmetic.")
            if not report.safe:
                st.warning(f"{variant.value} is unsafe: the midpoint {report.midpoint!r} carries no guarantee.")
            if with_oracle:
                exact = exact_reachability(m, m.goal_states(prop.label), prop.opt)
                st.write(f"Exact value: `{exact.value}`")
        except (ModelError, PropertyError, SchedulerLimitExceeded, ValueError) as e:
            st.error(str(e))

# ───── Bench grid ──────────────────────────────────────────
with bench_tab:
    variants = st.multiselect("Variants", [v.value for v in Variant], default=["sr-iii", "sr-sii"])
    strategies = st.multiselect("Strategies", [s.value for s in RoundingStrategy], default=["hardware"])
    precisions = st.multiselect("Precisions", [p.value for p in Precision], default=["double"])
    reps = st.slider("Repetitions", 1, 9, 3)
    if st.button("Run bench"):
        with st.spinner("Running grid…"):
            df = bench.run_grid(bench.catalogue_cases(), [Variant(v) for v in variants],
                                [RoundingStrategy(s) for s in strategies],
                                [Precision(p) for p in precisions], repetitions=reps, epsilon=epsilon,
                                timeout=60.0)
        st.dataframe(bench.summarize(df))
        if len(variants) == 2:
            st.dataframe(bench.compare(df, *variants))
        buf = io.StringIO()
        bench.write_csv(bench.with_summary(df), buf)
        st.download_button("💾 Download CSV", data=buf.getvalue(), file_name="bench.csv", mime="text/csv")

# ───── Regression catalogue ────────────────────────────────
with catalogue_tab:
    st.dataframe(pd.DataFrame([{"Model": r.id, "Family": r.family, "Opt": r.opt,
                                "Expected": str(r.expected), "Description": r.description}
                               for r in build_catalogue()]))
    if st.button("Verify catalogue"):
        cfg = SolveConfig(variant=variant, epsilon=epsilon, precision=precision, strategy=strategy)
        findings = verify(cfg)
        st.dataframe(pd.DataFrame(findings))
        failures = [f for f in findings if f.get("Detail") != "contains exact value"]
        if failures and variant.safe:
            st.error(f"{len(failures)} model(s) not contained")
        elif not failures:
            st.success("Every interval contains its exact value")
