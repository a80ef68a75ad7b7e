# exact_oracle.py — exact rational reference solver (scheduler enumeration + Gaussian elimination)
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx

from mdp_graph import Opt, prob0
from mdp_model import Mdp, Transition

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULER_LIMIT = 10 ** 6

SchedulerAssignment = Tuple[int, ...]


class SchedulerLimitExceeded(RuntimeError):
    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} memoryless schedulers exceed the oracle limit of {limit}")


@dataclass(frozen=True)
class ExactResult:
    value: Fraction
    witness: SchedulerAssignment

    def __post_init__(self):
        if not 0 <= self.value <= 1:
            raise ValueError(f"reachability probability out of range: {self.value}")


def _solve(rows: Dict[int, Dict[int, Fraction]], rhs: Dict[int, Fraction]) -> Dict[int, Fraction]:
    """Gauss-Jordan elimination over Fractions on a sparse square system."""
    order = sorted(rows)
    for pivot in order:
        k = next((r for r in order if r >= pivot and rows[r].get(pivot, 0) != 0), None)
        if k is None:
            raise ArithmeticError(f"singular system at column {pivot}")
        if k != pivot:
            rows[k], rows[pivot] = rows[pivot], rows[k]
            rhs[k], rhs[pivot] = rhs[pivot], rhs[k]
        prow = rows[pivot]
        lead = prow[pivot]
        for r in order:
            f = rows[r].get(pivot, 0)
            if r == pivot or f == 0:
                continue
            f = f / lead
            row = rows[r]
            for c, a in prow.items():
                value = row.get(c, 0) - f * a
                if value:
                    row[c] = value
                else:
                    row.pop(c, None)
            rhs[r] -= f * rhs[pivot]
    return {r: rhs[r] / rows[r][r] for r in order}


def _reachability(m: Mdp, goal: frozenset, choice: SchedulerAssignment) -> List[Fraction]:
    dtmc = Mdp(m.state_count, m.initial,
               tuple((m.transitions[s][choice[s]],) for s in range(m.state_count)), m.labels)
    zero = prob0(dtmc, goal, "max")
    values = [Fraction(0)] * m.state_count
    for g in goal:
        values[g] = Fraction(1)
    unknown = [s for s in range(m.state_count) if s not in goal and s not in zero]
    index = {s: i for i, s in enumerate(unknown)}
    rows: Dict[int, Dict[int, Fraction]] = {}
    rhs: Dict[int, Fraction] = {}
    for s in unknown:
        row = {index[s]: Fraction(1)}
        b = Fraction(0)
        for br in dtmc.transitions[s][0].branches:
            if br.target in goal:
                b += br.prob
            elif br.target in index:
                j = index[br.target]
                row[j] = row.get(j, Fraction(0)) - br.prob
        rows[index[s]] = {c: a for c, a in row.items() if a}
        rhs[index[s]] = b
    for i, v in _solve(rows, rhs).items():
        values[unknown[i]] = v
    return values


def exact_dtmc_reachability(m: Mdp, goal: Iterable[int]) -> Tuple[Fraction, ...]:
    """Exact per-state probability of reaching goal in a DTMC."""
    if not m.is_dtmc():
        raise ValueError("exact_dtmc_reachability needs exactly one transition per state")
    return tuple(_reachability(m, frozenset(goal), (0,) * m.state_count))


def scheduler_count(m: Mdp, goal: Iterable[int] = ()) -> int:
    goal = frozenset(goal)
    return math.prod(len(ts) for s, ts in enumerate(m.transitions) if s not in goal)


def schedulers(m: Mdp, goal: Iterable[int] = ()) -> Iterable[SchedulerAssignment]:
    """All memoryless deterministic schedulers; goal states keep their first transition."""
    goal = frozenset(goal)
    choices = [range(1) if s in goal else range(len(ts)) for s, ts in enumerate(m.transitions)]
    return itertools.product(*choices)


def exact_reachability(m: Mdp, goal: Iterable[int], opt: Opt,
                       scheduler_limit: int = DEFAULT_SCHEDULER_LIMIT) -> ExactResult:
    if opt not in ("max", "min"):
        raise ValueError(f"opt must be 'max' or 'min', got {opt!r}")
    goal = frozenset(goal)
    count = scheduler_count(m, goal)
    if count > scheduler_limit:
        raise SchedulerLimitExceeded(count, scheduler_limit)
    better = (lambda a, b: a > b) if opt == "max" else (lambda a, b: a < b)
    best: Optional[ExactResult] = None
    for choice in schedulers(m, goal):
        value = _reachability(m, goal, choice)[m.initial]
        if best is None or better(value, best.value):
            best = ExactResult(value, choice)
    logger.debug("oracle %s over %d schedulers: %s", opt, count, best.value)
    return best


def is_acyclic(m: Mdp) -> bool:
    """No cycles besides self-loops of absorbing states."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(m.state_count))
    for s, ts in enumerate(m.transitions):
        absorbing = all(t.targets() == [s] for t in ts)
        graph.add_edges_from((s, b.target) for t in ts for b in t.branches
                             if not (absorbing and b.target == s))
    return nx.is_directed_acyclic_graph(graph)


def _expect(t: Transition, v: List[Fraction]) -> Fraction:
    return sum((b.prob * v[b.target] for b in t.branches), Fraction(0))


def exact_value_iteration(m: Mdp, goal: Iterable[int], steps: Optional[int] = None,
                          opt: Opt = "max") -> Tuple[Fraction, ...]:
    """Finite unrolling of value iteration in rationals.

    On acyclic models `steps = state_count` (the default) reaches the exact
    fixpoint, which makes this a cross-check for the linear-solve oracle.
    """
    goal = frozenset(goal)
    if steps is None:
        if not is_acyclic(m):
            raise ValueError("unbounded unrolling needs an acyclic model; pass steps explicitly")
        steps = m.state_count
    pick = max if opt == "max" else min
    v = [Fraction(1) if s in goal else Fraction(0) for s in range(m.state_count)]
    for _ in range(steps):
        v = [v[s] if s in goal else pick(_expect(t, v) for t in m.transitions[s])
             for s in range(m.state_count)]
    return tuple(v)
