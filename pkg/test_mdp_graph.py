# test_mdp_graph.py — Prob0/Prob1 sets and MEC collapse against the exact oracle
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from exact_oracle import exact_reachability, schedulers, _reachability
from mdp_graph import collapse_mecs, mec_decomposition, prob0, prob1, qualitative_sets
from mdp_model import Mdp, build_counterexample, counterexample_layout, make_transition, parse_model, random_mdp

CE = build_counterexample(1, Fraction(1, 10))
AT = counterexample_layout(1)


def _per_state_exact(m, goal, opt):
    """Optimal exact value of every state, by enumeration."""
    pick = max if opt == "max" else min
    per_scheduler = [_reachability(m, frozenset(goal), c) for c in schedulers(m, goal)]
    return [pick(v[s] for v in per_scheduler) for s in range(m.state_count)]


def _random_models(count, seed, max_states):
    rng = np.random.default_rng(seed)
    return [random_mdp(rng, max_states=max_states) for _ in range(count)]


def _reweighted(m, rng):
    """Same supports, fresh positive probabilities."""
    rows = []
    for ts in m.transitions:
        row = []
        for t in ts:
            weights = rng.integers(1, 6, size=len(t.branches)).tolist()
            total = sum(weights)
            row.append(make_transition((b.target, Fraction(w, total)) for b, w in zip(t.branches, weights)))
        rows.append(tuple(row))
    return Mdp(m.state_count, m.initial, tuple(rows), m.labels)


def test_counterexample_prob_sets():
    goal = {AT["plus"]}
    assert prob0(CE, goal, "max") == {AT["minus"]}
    assert prob1(CE, goal, "max") == {AT["plus"]}
    assert qualitative_sets(CE, goal, "min").s0 == {AT["minus"]}


def test_goal_everything_has_empty_prob0():
    everything = set(range(CE.state_count))
    assert prob0(CE, everything, "max") == frozenset()
    assert prob0(CE, everything, "min") == frozenset()


def test_absorbing_goal_in_prob1():
    m = parse_model("mdp 2 0\nstate 0:\n  1/2 -> 0, 1/2 -> 1\nstate 1:\n  1/1 -> 1\n")
    assert 1 in prob1(m, {1}, "max")
    assert 1 in prob1(m, {1}, "min")
    assert prob1(m, {1}, "min") == {0, 1}


def test_min_sets_differ_from_max():
    # state 0 may loop forever (min 0) or go to goal (max 1)
    m = parse_model("mdp 2 0\nstate 0:\n  1/1 -> 0\n  1/1 -> 1\nstate 1:\n  1/1 -> 1\n")
    assert prob0(m, {1}, "min") == {0}
    assert prob1(m, {1}, "max") == {0, 1}
    assert prob1(m, {1}, "min") == {1}


def test_opt_validated():
    with pytest.raises(ValueError, match="opt"):
        prob0(CE, {0}, "avg")


@pytest.mark.parametrize("opt", ["max", "min"])
def test_prob_sets_agree_with_oracle(opt):
    for m in _random_models(50, 3, 6):
        goal = m.goal_states("goal")
        exact = _per_state_exact(m, goal, opt)
        assert prob0(m, goal, opt) == {s for s, v in enumerate(exact) if v == 0}
        assert prob1(m, goal, opt) == {s for s, v in enumerate(exact) if v == 1}


def test_counterexample_mecs_are_the_two_sinks():
    part = mec_decomposition(build_counterexample(3, Fraction(1, 3)))
    at = counterexample_layout(3)
    assert [mec.states for mec in part.mecs] == [frozenset({at["plus"]}), frozenset({at["minus"]})]


def test_single_absorbing_state_is_one_mec():
    m = parse_model("mdp 1 0\nstate 0:\n  1/1 -> 0\n")
    part = mec_decomposition(m)
    assert [mec.states for mec in part.mecs] == [frozenset({0})]
    assert part.quotient_map == (0,)


def test_random_mecs_are_closed_and_strongly_connected():
    for m in _random_models(50, 5, 8):
        part = mec_decomposition(m)
        for mec in part.mecs:
            graph = nx.DiGraph()
            graph.add_nodes_from(mec.states)
            for s, kept in mec.retained.items():
                assert kept
                for k in kept:
                    targets = m.transitions[s][k].targets()
                    assert set(targets) <= mec.states
                    graph.add_edges_from((s, t) for t in targets)
            assert nx.is_strongly_connected(graph)


def test_counterexample_collapse_keeps_shape():
    collapsed, quotient = collapse_mecs(CE, {AT["plus"]})
    assert quotient == tuple(range(CE.state_count))
    assert collapsed.transitions[AT["sI"]] == CE.transitions[AT["sI"]]
    assert collapsed.initial == CE.initial


def test_two_state_mec_with_exit_collapses_to_one_state():
    m = parse_model(
        "mdp 3 0\nlabel goal 2\n"
        "state 0:\n  1/1 -> 1\n"
        "state 1:\n  1/1 -> 0\n  1/1 -> 2\n"
        "state 2:\n  1/1 -> 2\n")
    collapsed, quotient = collapse_mecs(m, {2})
    assert quotient == (0, 0, 1)
    assert collapsed.state_count == 2
    assert len(collapsed.transitions[0]) == 1
    assert collapsed.transitions[0][0].targets() == [1]
    assert collapsed.goal_states("goal") == {1}


def test_collapse_preserves_max_value():
    for m in _random_models(50, 9, 6):
        goal = m.goal_states("goal")
        collapsed, quotient = collapse_mecs(m, goal)
        before = exact_reachability(m, goal, "max").value
        after = exact_reachability(collapsed, {quotient[g] for g in goal}, "max").value
        assert before == after
        assert collapsed.initial == quotient[m.initial]


@pytest.mark.parametrize("opt", ["max", "min"])
def test_prob_sets_depend_only_on_supports(opt):
    rng = np.random.default_rng(13)
    for m in _random_models(50, 12, 8):
        goal = m.goal_states("goal")
        other = _reweighted(m, rng)
        assert [t.targets() for ts in other.transitions for t in ts] == \
            [t.targets() for ts in m.transitions for t in ts]
        assert prob0(other, goal, opt) == prob0(m, goal, opt)
        assert prob1(other, goal, opt) == prob1(m, goal, opt)


def test_collapse_leaves_only_singleton_end_components():
    # a non-maximal MEC would survive the collapse as a larger end component
    for m in _random_models(100, 14, 8):
        goal = m.goal_states("goal")
        collapsed, quotient = collapse_mecs(m, goal)
        assert all(len(mec.states) == 1 for mec in mec_decomposition(collapsed).mecs)
        part = mec_decomposition(m)
        for mec in part.mecs:
            assert len({quotient[s] for s in mec.states}) == 1


def test_mecs_are_disjoint():
    for m in _random_models(50, 15, 8):
        seen = set()
        for mec in mec_decomposition(m).mecs:
            assert not seen & mec.states
            seen |= mec.states
