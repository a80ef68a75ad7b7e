# test_pctl_check.py — three-valued verdicts, property parsing and end-to-end checks
from fractions import Fraction

import numpy as np
import pytest

from exact_oracle import exact_reachability
from interval_iteration import SolveConfig, ValueVectors, Variant
from mdp_model import build_counterexample
from pctl_check import (PropertyError, Verdict, check, evaluate, evaluate_opt_for, parse_property,
                        satisfying_states)
from safe_rounding import next_up

HALF = Fraction(1, 2)
CE = build_counterexample(1, Fraction(1, 10 ** 6))


@pytest.mark.parametrize("lower, upper, comparator, c, verdict", [
    (0.25, 0.25, "<=", HALF, Verdict.TRUE),
    (0.6, 0.7, "<=", HALF, Verdict.FALSE),
    (0.5, next_up(0.5), "<=", HALF, Verdict.UNKNOWN),
    (0.5, 0.5, "<=", HALF, Verdict.TRUE),
    (0.5, 0.5, "<", HALF, Verdict.FALSE),
    (0.5, next_up(0.5), ">=", HALF, Verdict.TRUE),
    (0.5, next_up(0.5), ">", HALF, Verdict.UNKNOWN),
    (0.2, 0.3, ">", HALF, Verdict.FALSE),
])
def test_evaluate(lower, upper, comparator, c, verdict):
    assert evaluate(lower, upper, comparator, c) is verdict


def test_evaluate_uses_exact_float_values():
    # the double nearest 1/10 lies just above it
    assert evaluate(0.1, 0.1, "<=", Fraction(1, 10)) is Verdict.FALSE
    assert evaluate(0.1, 0.1, ">", Fraction(1, 10)) is Verdict.TRUE


def test_evaluate_rejects_empty_interval():
    with pytest.raises(ValueError, match="empty interval"):
        evaluate(0.7, 0.6, "<=", HALF)


def test_opt_follows_comparator():
    assert evaluate_opt_for("<=") == evaluate_opt_for("<") == "max"
    assert evaluate_opt_for(">=") == evaluate_opt_for(">") == "min"
    with pytest.raises(PropertyError):
        evaluate_opt_for("==")


def test_satisfying_states():
    vectors = ValueVectors(np.array([0.25, 0.6, 0.5]), np.array([0.25, 0.7, next_up(0.5)]))
    assert satisfying_states(vectors, "<=", HALF) == (Verdict.TRUE, Verdict.FALSE, Verdict.UNKNOWN)


@pytest.mark.parametrize("text, label, opt, comparator, bound", [
    ('P<=1/2 [ F "plus" ]', "plus", "max", "<=", HALF),
    ('P>0.25 [F "goal"]', "goal", "min", ">", Fraction(1, 4)),
    ('P < 1 / 3 [ F "a" ]', "a", "max", "<", Fraction(1, 3)),
    ('  P>=0 [ F "done" ]  ', "done", "min", ">=", Fraction(0)),
])
def test_parse_threshold(text, label, opt, comparator, bound):
    prop = parse_property(text)
    assert (prop.label, prop.opt, prop.comparator, prop.bound) == (label, opt, comparator, bound)
    assert not prop.is_query


def test_parse_query():
    prop = parse_property('Pmin=? [ F "goal" ]')
    assert prop.is_query and prop.opt == "min" and prop.label == "goal"


@pytest.mark.parametrize("text, message", [
    ('P<=1/2 [ G "plus" ]', "nested or non-reachability"),
    ('P<=1/2 [ F P>0 [ F "a" ] ]', "nested or non-reachability"),
    ('P<=1/2 [ !"a" U "b" ]', "nested or non-reachability"),
    ('P<=1/0 [ F "a" ]', "invalid probability bound"),
    ('P<=3/2 [ F "plus" ]', r"probability bound 3/2 outside \[0, 1\]"),
    ('P>1.5 [ F "plus" ]', r"outside \[0, 1\]"),
    ('Q<=1 [ F "a" ]', "cannot parse"),
    ('P<=1/2 [ F plus ]', "cannot parse"),
])
def test_parse_errors(text, message):
    with pytest.raises(PropertyError, match=message):
        parse_property(text)


def test_safe_check_is_unknown_on_counterexample():
    outcome = check(CE, parse_property('P<=1/2 [ F "plus" ]'))
    assert outcome.verdict is Verdict.UNKNOWN
    assert outcome.result.lower == 0.5 and outcome.result.upper == next_up(0.5)
    assert not outcome.refined


def test_unsafe_check_claims_a_false_truth():
    outcome = check(CE, parse_property('P<=1/2 [ F "plus" ]'), SolveConfig(variant=Variant.III))
    assert outcome.verdict is Verdict.TRUE
    assert exact_reachability(CE, CE.goal_states("plus"), "max").value > HALF


def test_refine_retries_once():
    outcome = check(CE, parse_property('P<=1/2 [ F "plus" ]'), refine=True)
    assert outcome.refined
    assert outcome.verdict is Verdict.UNKNOWN


def test_refine_not_needed_for_definite_verdict():
    outcome = check(CE, parse_property('P<=3/4 [ F "plus" ]'), refine=True)
    assert outcome.verdict is Verdict.TRUE and not outcome.refined


def test_trivial_lower_bound_holds():
    assert check(CE, parse_property('P>=0 [ F "plus" ]')).verdict is Verdict.TRUE


def test_query_has_no_verdict():
    outcome = check(CE, parse_property('Pmax=? [ F "plus" ]'))
    assert outcome.verdict is None
    exact = Fraction(1, 2) + Fraction(1, 10 ** 18)
    assert Fraction(outcome.result.lower) <= exact <= Fraction(outcome.result.upper)


def test_unknown_label_raises():
    with pytest.raises(ValueError, match="unknown label"):
        check(CE, parse_property('P<=1/2 [ F "nope" ]'))


@pytest.mark.parametrize("variant", [Variant.SR_III, Variant.SR_SII])
def test_safe_verdicts_never_contradict_the_oracle(variant, quick_suite, exact_value):
    cfg = SolveConfig(variant=variant)
    for i, m in enumerate(quick_suite):
        high, low = exact_value(i, "max"), exact_value(i, "min")
        # exact value on the threshold: the property holds, so FALSE would be unsound
        assert check(m, parse_property(f'P<={high} [ F "goal" ]'), cfg).verdict is not Verdict.FALSE
        assert check(m, parse_property(f'P<{high} [ F "goal" ]'), cfg).verdict is not Verdict.TRUE
        assert check(m, parse_property(f'P>={low} [ F "goal" ]'), cfg).verdict is not Verdict.FALSE
        assert check(m, parse_property(f'P>{low} [ F "goal" ]'), cfg).verdict is not Verdict.TRUE
        # a tenth away from the exact value the verdict is definite
        loose = min(high + Fraction(1, 10), Fraction(1))
        assert check(m, parse_property(f'P<={loose} [ F "goal" ]'), cfg).verdict is Verdict.TRUE
        if low >= Fraction(1, 10):
            assert check(m, parse_property(f'P>={low - Fraction(1, 10)} [ F "goal" ]'), cfg).verdict \
                is Verdict.TRUE
