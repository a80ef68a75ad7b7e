# mdp_graph.py — qualitative preprocessing: Prob0/Prob1 sets and maximal end components
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Literal, Set, Tuple

import networkx as nx

from mdp_model import Branch, Mdp, Transition

logger = logging.getLogger(__name__)

Opt = Literal["max", "min"]


@dataclass(frozen=True)
class QualitativeSets:
    s0: FrozenSet[int]
    s1: FrozenSet[int]


@dataclass(frozen=True)
class Mec:
    states: FrozenSet[int]
    # per member state: indices of the transitions that stay inside the component
    retained: Dict[int, FrozenSet[int]]


@dataclass(frozen=True)
class MecPartition:
    mecs: Tuple[Mec, ...]
    quotient_map: Tuple[int, ...]


def _check_opt(opt: str) -> None:
    if opt not in ("max", "min"):
        raise ValueError(f"opt must be 'max' or 'min', got {opt!r}")


def _predecessors(m: Mdp) -> List[Set[int]]:
    pre: List[Set[int]] = [set() for _ in range(m.state_count)]
    for s, ts in enumerate(m.transitions):
        for t in ts:
            for b in t.branches:
                pre[b.target].add(s)
    return pre


def _reach_some(m: Mdp, goal: FrozenSet[int]) -> Set[int]:
    """States with a path to goal under some choice of transitions."""
    pre = _predecessors(m)
    seen = set(goal)
    stack = list(goal)
    while stack:
        for p in pre[stack.pop()]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def _reach_all(m: Mdp, goal: FrozenSet[int]) -> Set[int]:
    """States from which every scheduler reaches goal with positive probability."""
    r = set(goal)
    while True:
        new = {s for s in range(m.state_count) if s not in r
               and all(any(b.target in r for b in t.branches) for t in m.transitions[s])}
        if not new:
            return r
        r |= new


def prob0(m: Mdp, goal: Iterable[int], opt: Opt) -> FrozenSet[int]:
    """States whose optimal probability of reaching goal is exactly 0."""
    _check_opt(opt)
    goal = frozenset(goal)
    reach = _reach_some(m, goal) if opt == "max" else _reach_all(m, goal)
    return frozenset(range(m.state_count)) - reach


def prob1(m: Mdp, goal: Iterable[int], opt: Opt) -> FrozenSet[int]:
    """States whose optimal probability of reaching goal is exactly 1."""
    _check_opt(opt)
    goal = frozenset(goal)
    if opt == "max":
        u = set(range(m.state_count))
        while True:
            r = set(goal)
            while True:
                new = {s for s in u if s not in r and any(
                    all(b.target in u for b in t.branches) and any(b.target in r for b in t.branches)
                    for t in m.transitions[s])}
                if not new:
                    break
                r |= new
            if r == u:
                return frozenset(u)
            u = r
    # min: grow the set of states where some scheduler misses goal with positive probability
    escape = set(prob0(m, goal, "min"))
    while True:
        new = {s for s in range(m.state_count) if s not in escape and s not in goal
               and any(any(b.target in escape for b in t.branches) for t in m.transitions[s])}
        if not new:
            return frozenset(range(m.state_count)) - escape
        escape |= new


def qualitative_sets(m: Mdp, goal: Iterable[int], opt: Opt) -> QualitativeSets:
    goal = frozenset(goal)
    return QualitativeSets(prob0(m, goal, opt), prob1(m, goal, opt))


# ───── End components ──────────────────────────────────────
def mec_decomposition(m: Mdp) -> MecPartition:
    """Maximal end components by iterated SCC decomposition with transition pruning."""
    allowed: Dict[int, Set[int]] = {s: set(range(len(ts))) for s, ts in enumerate(m.transitions)}
    candidates = set(range(m.state_count))
    while True:
        graph = nx.DiGraph()
        graph.add_nodes_from(candidates)
        for s in candidates:
            for k in allowed[s]:
                graph.add_edges_from((s, b.target) for b in m.transitions[s][k].branches)
        scc_of = {s: i for i, comp in enumerate(nx.strongly_connected_components(graph)) for s in comp}
        changed = False
        for s in sorted(candidates):
            keep = {k for k in allowed[s]
                    if all(b.target in candidates and scc_of.get(b.target) == scc_of[s]
                           for b in m.transitions[s][k].branches)}
            if keep != allowed[s]:
                allowed[s] = keep
                changed = True
        emptied = {s for s in candidates if not allowed[s]}
        if emptied:
            candidates -= emptied
            changed = True
        if not changed:
            break

    groups: Dict[int, Set[int]] = {}
    for s in candidates:
        groups.setdefault(scc_of[s], set()).add(s)
    mecs = tuple(sorted(
        (Mec(frozenset(g), {s: frozenset(allowed[s]) for s in sorted(g)}) for g in groups.values()),
        key=lambda mec: min(mec.states)))

    owner = {s: i for i, mec in enumerate(mecs) for s in mec.states}
    quotient: List[int] = []
    assigned: Dict[Tuple[str, int], int] = {}
    for s in range(m.state_count):
        key = ("mec", owner[s]) if s in owner else ("state", s)
        if key not in assigned:
            assigned[key] = len(assigned)
        quotient.append(assigned[key])
    logger.debug("MEC decomposition: %d components over %d states", len(mecs), m.state_count)
    return MecPartition(mecs, tuple(quotient))


def collapse_mecs(m: Mdp, goal: Iterable[int]) -> Tuple[Mdp, Tuple[int, ...]]:
    """Collapse every MEC into one state that keeps only the transitions leaving it.

    Collapsed states that contain a goal state, or that have no exits left,
    become absorbing.
    """
    goal = frozenset(goal)
    part = mec_decomposition(m)
    q = part.quotient_map
    count = max(q) + 1 if q else 0
    in_mec = {s for mec in part.mecs for s in mec.states}
    goal_classes = {q[g] for g in goal}

    rows: List[List[Transition]] = [[] for _ in range(count)]
    for s, ts in enumerate(m.transitions):
        cs = q[s]
        if cs in goal_classes:
            continue
        for t in ts:
            if s in in_mec and all(q[b.target] == cs for b in t.branches):
                continue
            merged: Dict[int, Fraction] = {}
            for b in t.branches:
                merged[q[b.target]] = merged.get(q[b.target], Fraction(0)) + b.prob
            rows[cs].append(Transition(tuple(Branch(c, p) for c, p in merged.items())))
    for cs in range(count):
        if not rows[cs]:
            rows[cs].append(Transition((Branch(cs, Fraction(1)),)))

    labels = {name: frozenset(q[s] for s in states) for name, states in m.labels.items()}
    collapsed = Mdp(count, q[m.initial], tuple(tuple(r) for r in rows), labels)
    logger.debug("collapsed %d states into %d", m.state_count, count)
    return collapsed, q
