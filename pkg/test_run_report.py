# test_run_report.py — report rendering and hex round trips
from fractions import Fraction

import pytest

from interval_iteration import SolveConfig, Variant, solve
from mdp_model import build_counterexample
from run_report import RunReport, hex_float, parse_hex, render_structured, render_text, report_from_structured
from safe_rounding import next_down, next_up

CE = build_counterexample(1, Fraction(1, 10 ** 6))


def _report(variant=Variant.SR_SII, **kw):
    result = solve(CE, CE.goal_states("plus"), "max", SolveConfig(variant=variant))
    return RunReport.from_result("ce.txt", 'Pmax=? [ F "plus" ]', result, **kw)


@pytest.mark.parametrize("x", [0.5, next_up(0.5), next_down(1.0), 0.0, 5e-324, 1 / 3])
def test_hex_round_trip(x):
    assert parse_hex(hex_float(x)) == x


def test_hex_accepts_surrounding_space():
    assert parse_hex("  0x1.0000000000000p-1\n") == 0.5


def test_text_report_safe():
    text = render_text(_report(verdict="unknown"))
    lines = text.splitlines()
    assert lines[0] == "model:       ce.txt"
    assert "verdict:     unknown" in lines
    assert "upper:       0x1.0000000000001p-1  (0.5000000000000001)" in lines
    assert "midpoint" not in text
    assert "stalled:     false" in lines


def test_text_report_unsafe_adds_midpoint():
    report = _report(Variant.III)
    assert not report.safe
    text = render_text(report)
    assert "midpoint:    0x1.0000000000000p-1  (0.5)" in text
    assert "WARNING: unsafe variant" in text


def test_structured_round_trip():
    report = _report(verdict="unknown", refined=True)
    back = report_from_structured(render_structured(report))
    assert back == report
    assert back.upper == next_up(0.5)


def test_unsafe_structured_round_trip():
    report = _report(Variant.SII)
    assert report_from_structured(render_structured(report)) == report
    assert report.to_dict()["midpoint_hex"] == "0x1.0000000000000p-1"
