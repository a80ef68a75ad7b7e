# test_bench.py — benchmark grid, summaries and CSV round trip
import io

import pandas as pd
import pytest

import bench
from interval_iteration import Variant
from mdp_model import parse_model
from regression_models import lookup
from safe_rounding import Precision, RoundingStrategy, hardware_rounding_available

needs_hardware = pytest.mark.skipif(not hardware_rounding_available(),
                                    reason="no hardware rounding control on this platform")

SLOW = parse_model(
    "mdp 3 0\nlabel goal 1\n"
    "state 0:\n  1/2 -> 0, 1/4 -> 1, 1/4 -> 2\n"
    "state 1:\n  1/1 -> 1\n"
    "state 2:\n  1/1 -> 2\n")


def _case(model_id):
    entry = lookup(model_id)
    m = entry.build()
    return bench.BenchCase(entry.id, m, m.goal_states(entry.label), entry.opt)


def _grid(cases, variants, reps=1, **kw):
    return bench.run_grid(cases, variants, [RoundingStrategy.NUDGE], [Precision.DOUBLE],
                          repetitions=reps, **kw)


def test_empty_grid_has_header_only():
    df = bench.run_grid([], list(Variant), list(RoundingStrategy), list(Precision))
    assert list(df.columns) == bench.COLUMNS
    assert df.empty
    buf = io.StringIO()
    bench.write_csv(df, buf)
    assert buf.getvalue().strip() == ",".join(bench.COLUMNS)


def test_grid_rows_in_order():
    df = _grid([_case("coin"), _case("ce_n1_g1_10")], [Variant.SR_III, Variant.SR_SII], reps=2)
    assert len(df) == 8
    assert list(df["model"]) == ["coin"] * 4 + ["ce_n1_g1_10"] * 4
    assert list(df["rep"]) == [1, 2] * 4
    assert set(df["status"]) == {"converged"}
    assert (df["time_s"] >= 0).all()


def test_unsafe_variants_agree_bit_for_bit():
    df = _grid(bench.catalogue_cases(), [Variant.III, Variant.SII])
    iii = df[df["variant"] == "iii"].reset_index(drop=True)
    sii = df[df["variant"] == "sii"].reset_index(drop=True)
    for col in ("sweeps", "lower_hex", "upper_hex"):
        assert list(iii[col]) == list(sii[col])


@needs_hardware
def test_hardware_mode_switch_columns():
    df = bench.run_grid([_case("ce_n3_g1_3")], [Variant.SR_SII, Variant.III],
                        [RoundingStrategy.HARDWARE], [Precision.DOUBLE])
    sii, iii = df.iloc[0], df.iloc[1]
    assert sii["mode_switches"] == 2 * sii["sweeps"] + 2
    assert iii["mode_switches"] == 0


def test_nudge_reports_no_mode_switches():
    df = _grid([_case("ce_n3_g1_3")], [Variant.SR_III, Variant.SR_SII])
    assert list(df["mode_switches"]) == [0, 0]


def test_timeout_row():
    case = bench.BenchCase("slow", SLOW, SLOW.goal_states("goal"), "max")
    df = _grid([case], [Variant.SR_SII], epsilon=1e-12, timeout=0.0)
    (row,) = df.to_dict("records")
    assert row["status"] == bench.TIMEOUT_STATUS
    assert row["sweeps"] == 1
    assert row["lower_hex"] == ""


def test_error_row_does_not_stop_the_grid():
    broken = bench.BenchCase("empty_goal", SLOW, frozenset(), "max")
    df = _grid([broken, _case("coin")], [Variant.SR_SII])
    assert df.loc[0, "status"].startswith("error:")
    assert df.loc[1, "status"] == "converged"


def test_parallel_grid_matches_serial():
    cases = bench.catalogue_cases()
    serial = _grid(cases, [Variant.SR_SII])
    parallel = _grid(cases, [Variant.SR_SII], jobs=4)
    for col in ("model", "sweeps", "lower_hex", "upper_hex", "status"):
        assert list(serial[col]) == list(parallel[col])


def test_csv_round_trip(tmp_path):
    df = _grid([_case("ce_n1_g1_1000000"), _case("coin")], [Variant.SR_SII, Variant.III])
    path = tmp_path / "bench.csv"
    bench.write_csv(df, path)
    back = bench.read_csv(path)
    assert list(back["lower_hex"]) == list(df["lower_hex"])
    assert list(back["sweeps"]) == list(df["sweeps"])
    assert list(back["time_s"]) == list(df["time_s"])
    assert back.loc[0, "lower"] == 0.5
    assert back.loc[0, "upper"].hex() == df.loc[0, "upper_hex"]


def test_read_csv_requires_columns():
    with pytest.raises(ValueError, match="lacks columns"):
        bench.read_csv(io.StringIO("model,variant\nx,iii\n"))


def test_summarize_takes_median_time():
    df = _grid([_case("coin")], [Variant.SR_SII], reps=3)
    df["time_s"] = [3.0, 1.0, 2.0]
    summary = bench.summarize(df)
    assert len(summary) == 1
    row = summary.iloc[0]
    assert row["rep"] == "median"
    assert row["time_s"] == 2.0
    assert row["sweeps"] == df.loc[0, "sweeps"]


def test_summarize_drops_timeouts():
    case = bench.BenchCase("slow", SLOW, SLOW.goal_states("goal"), "max")
    df = _grid([case], [Variant.SR_SII], epsilon=1e-12, timeout=0.0)
    assert bench.summarize(df).empty


def test_compare_ratio():
    df = _grid([_case("coin")], [Variant.SR_III, Variant.SR_SII], reps=2)
    df["time_s"] = [4.0, 4.0, 2.0, 2.0]
    table = bench.compare(df, "sr-iii", "sr-sii")
    assert list(table.columns) == ["model", "strategy", "precision", "time_sr-iii", "time_sr-sii", "ratio"]
    assert table["ratio"].tolist() == [2.0]


def test_random_cases_are_seeded():
    a = bench.random_cases(3, 4)
    b = bench.random_cases(3, 4)
    assert [c.model for c in a] == [c.model for c in b]
    assert [c.name for c in a] == [f"random_3_{i}" for i in range(4)]


@pytest.mark.slow
def test_catalogue_grid_completes():
    df = bench.run_grid(bench.catalogue_cases(), list(Variant), list(RoundingStrategy),
                        list(Precision), repetitions=3, timeout=60.0)
    assert not df["status"].str.startswith("error").any()
    assert isinstance(bench.summarize(df), pd.DataFrame)
