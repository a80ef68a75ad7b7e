# mdp_model.py — exact-rational explicit-state MDPs: data model, validation, text format, generators
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class ModelError(ValueError):
    """Raised for malformed model text or an invalid model."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Branch:
    target: int
    prob: Fraction


@dataclass(frozen=True)
class Transition:
    branches: Tuple[Branch, ...]

    def total(self) -> Fraction:
        return sum((b.prob for b in self.branches), Fraction(0))

    def targets(self) -> List[int]:
        return [b.target for b in self.branches]


@dataclass(frozen=True)
class ModelStats:
    states: int
    transitions: int
    branches: int


@dataclass(frozen=True)
class Violation:
    state: Optional[int]
    transition: Optional[int]
    message: str

    def __str__(self) -> str:
        where = []
        if self.state is not None:
            where.append(f"state {self.state}")
        if self.transition is not None:
            where.append(f"transition {self.transition}")
        return f"{', '.join(where)}: {self.message}" if where else self.message


@dataclass(frozen=True, eq=True)
class Mdp:
    """Explicit MDP. State order is part of the contract: solvers sweep states by index."""

    state_count: int
    initial: int
    transitions: Tuple[Tuple[Transition, ...], ...]
    labels: Mapping[str, FrozenSet[int]] = field(default_factory=dict)

    def is_dtmc(self) -> bool:
        return all(len(ts) == 1 for ts in self.transitions)

    def stats(self) -> ModelStats:
        return ModelStats(
            states=self.state_count,
            transitions=sum(len(ts) for ts in self.transitions),
            branches=sum(len(t.branches) for ts in self.transitions for t in ts),
        )

    def goal_states(self, label: str) -> FrozenSet[int]:
        if label not in self.labels:
            known = ", ".join(sorted(self.labels)) or "none"
            raise ModelError(f"unknown label {label!r} (known labels: {known})")
        return self.labels[label]


def make_transition(pairs: Iterable[Tuple[int, Fraction]]) -> Transition:
    """Build a transition from (target, prob) pairs, dropping zero-probability branches."""
    return Transition(tuple(Branch(t, Fraction(p)) for t, p in pairs if Fraction(p) != 0))


# ───── Validation ──────────────────────────────────────────
def _sum_message(total: Fraction) -> str:
    if total < 1:
        return f"distribution sums to {total}, not 1 (deficit {1 - total})"
    return f"distribution sums to {total}, not 1 (excess {total - 1})"


def validate(m: Mdp) -> List[Violation]:
    """Return every invariant violation of `m`; an empty list means the model is valid."""
    violations: List[Violation] = []
    if m.state_count < 1:
        violations.append(Violation(None, None, "model has no states"))
    if len(m.transitions) != m.state_count:
        violations.append(Violation(None, None,
                                    f"{len(m.transitions)} transition lists for {m.state_count} states"))
    if not 0 <= m.initial < m.state_count:
        violations.append(Violation(None, None, f"initial state {m.initial} out of range"))
    for name, states in m.labels.items():
        bad = sorted(s for s in states if not 0 <= s < m.state_count)
        if bad:
            violations.append(Violation(None, None, f"label {name!r} names unknown states {bad}"))
    for s, ts in enumerate(m.transitions):
        if not ts:
            violations.append(Violation(s, None, f"empty transition set at state {s}"))
        for k, t in enumerate(ts):
            if not t.branches:
                violations.append(Violation(s, k, "transition has no branches"))
                continue
            targets = t.targets()
            if len(set(targets)) != len(targets):
                violations.append(Violation(s, k, "duplicate branch targets"))
            for b in t.branches:
                if not 0 <= b.target < m.state_count:
                    violations.append(Violation(s, k, f"branch target {b.target} out of range"))
                if not 0 < b.prob <= 1:
                    violations.append(Violation(s, k, f"branch probability {b.prob} outside (0, 1]"))
            total = t.total()
            if total != 1:
                violations.append(Violation(s, k, _sum_message(total)))
    return violations


def make_goal_absorbing(m: Mdp, goal: Iterable[int]) -> Mdp:
    """Replace the transitions of every goal state by a single probability-1 self-loop."""
    goal = frozenset(goal)
    loop = lambda s: (Transition((Branch(s, Fraction(1)),)),)
    transitions = tuple(loop(s) if s in goal else ts for s, ts in enumerate(m.transitions))
    if transitions == m.transitions:
        return m
    return Mdp(m.state_count, m.initial, transitions, dict(m.labels))


# ───── Text format ─────────────────────────────────────────
_HEADER = re.compile(r"^mdp\s+(\d+)\s+(\d+)$")
_LABEL = re.compile(r'^label\s+([A-Za-z_][\w\-]*)((?:\s+\d+)*)$')
_STATE = re.compile(r"^state\s+(\d+)\s*:$")
_BRANCH = re.compile(r"^(\d+)\s*/\s*(\d+)\s*->\s*(\d+)$")
_DECIMAL = re.compile(r"\d*\.\d+|\d+\.\d*|\d+[eE][-+]?\d+")


def _parse_branch(text: str, state_count: int, lineno: int) -> Tuple[int, Fraction]:
    part = text.strip()
    match = _BRANCH.match(part)
    if not match:
        if _DECIMAL.search(part.split("->")[0]):
            raise ModelError(f"decimal probability in {part!r} rejected; write it as num/den", lineno)
        raise ModelError(f"cannot parse branch {part!r}; expected '<num>/<den> -> <state>'", lineno)
    num, den, target = (int(g) for g in match.groups())
    if den == 0:
        raise ModelError(f"zero denominator in {part!r}", lineno)
    if target >= state_count:
        raise ModelError(f"branch target {target} is not a state (state count {state_count})", lineno)
    return target, Fraction(num, den)


def parse_model(text: str) -> Mdp:
    """Parse the explicit line-oriented model format; probabilities stay exact rationals."""
    state_count: Optional[int] = None
    initial = 0
    labels: Dict[str, FrozenSet[int]] = {}
    rows: Dict[int, List[Transition]] = {}
    current: Optional[int] = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if state_count is None:
            header = _HEADER.match(line)
            if not header:
                raise ModelError("expected header 'mdp <state_count> <initial>'", lineno)
            state_count, initial = int(header.group(1)), int(header.group(2))
            if state_count < 1:
                raise ModelError("model must have at least one state", lineno)
            if initial >= state_count:
                raise ModelError(f"initial state {initial} out of range", lineno)
            continue
        if line.startswith("label"):
            label = _LABEL.match(line)
            if not label:
                raise ModelError(f"cannot parse label line {line!r}", lineno)
            name, idx = label.group(1), [int(i) for i in label.group(2).split()]
            bad = [i for i in idx if i >= state_count]
            if bad:
                raise ModelError(f"label {name!r} names unknown states {bad}", lineno)
            labels[name] = frozenset(idx)
            current = None
            continue
        if line.startswith("state"):
            state = _STATE.match(line)
            if not state:
                raise ModelError(f"cannot parse state line {line!r}", lineno)
            current = int(state.group(1))
            if current >= state_count:
                raise ModelError(f"state {current} out of range (state count {state_count})", lineno)
            if current in rows:
                raise ModelError(f"state {current} declared twice", lineno)
            rows[current] = []
            continue
        if current is None:
            raise ModelError(f"transition line outside a state block: {line!r}", lineno)
        pairs = [_parse_branch(part, state_count, lineno) for part in line.split(",")]
        targets = [t for t, _ in pairs]
        if len(set(targets)) != len(targets):
            raise ModelError("duplicate branch targets in one transition", lineno)
        transition = make_transition(pairs)
        total = transition.total()
        if total != 1:
            raise ModelError(_sum_message(total), lineno)
        rows[current].append(transition)

    if state_count is None:
        raise ModelError("empty model text")
    m = Mdp(state_count, initial, tuple(tuple(rows.get(s, ())) for s in range(state_count)), labels)
    problems = validate(m)
    if problems:
        raise ModelError("; ".join(str(p) for p in problems))
    logger.debug("parsed model: %s", m.stats())
    return m


def serialize_model(m: Mdp) -> str:
    """Deterministic text rendering; parse_model(serialize_model(m)) == m."""
    lines = [f"mdp {m.state_count} {m.initial}"]
    for name in sorted(m.labels):
        lines.append(" ".join(["label", name, *(str(s) for s in sorted(m.labels[name]))]))
    for s, ts in enumerate(m.transitions):
        lines.append(f"state {s}:")
        for t in ts:
            lines.append("  " + ", ".join(
                f"{b.prob.numerator}/{b.prob.denominator} -> {b.target}" for b in t.branches))
    return "\n".join(lines) + "\n"


def load_model(path: str) -> Mdp:
    with open(path, "r", encoding="utf-8") as f:
        return parse_model(f.read())


# ───── Generators ──────────────────────────────────────────
def counterexample_layout(n: int) -> Dict[str, int]:
    """State indices of the counterexample family: the chain back-to-front, then s_I, s+, s-.

    Ordering the chain s_n, ..., s_0 before s_I lets one ascending Gauss-Seidel
    sweep carry the value of s+ all the way back to the initial state.
    """
    layout = {f"s{i}": n - i for i in range(n + 1)}
    layout.update({"sI": n + 1, "plus": n + 2, "minus": n + 3})
    return layout


def build_counterexample(n: int, gamma: Fraction) -> Mdp:
    """The rounding counterexample chain: p(s_I) = 1/2 + gamma^(n+2)."""
    gamma = Fraction(gamma)
    if n < 0:
        raise ModelError(f"chain length must be >= 0, got {n}")
    if not 0 < gamma < Fraction(1, 2):
        raise ModelError(f"gamma must lie in (0, 1/2), got {gamma}")
    at = counterexample_layout(n)
    half = Fraction(1, 2)
    rows: List[Tuple[Transition, ...]] = [()] * (n + 4)
    rows[at["sI"]] = (make_transition([(at["plus"], half), (at["s0"], gamma), (at["minus"], half - gamma)]),)
    for i in range(n):
        rows[at[f"s{i}"]] = (make_transition([(at[f"s{i + 1}"], gamma), (at["minus"], 1 - gamma)]),)
    rows[at[f"s{n}"]] = (make_transition([(at["plus"], gamma), (at["minus"], 1 - gamma)]),)
    rows[at["plus"]] = (make_transition([(at["plus"], 1)]),)
    rows[at["minus"]] = (make_transition([(at["minus"], 1)]),)
    return Mdp(n + 4, at["sI"], tuple(rows), {"plus": frozenset({at["plus"]})})


def _composition(rng: np.random.Generator, total: int, parts: int) -> List[int]:
    cuts = sorted(rng.choice(np.arange(1, total), size=parts - 1, replace=False).tolist()) if parts > 1 else []
    bounds = [0, *cuts, total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def random_mdp(rng: np.random.Generator, max_states: int = 8, max_transitions: int = 3,
               max_branches: int = 4, max_den: int = 10) -> Mdp:
    """Seeded random MDP with rational probabilities of denominator <= max_den and a nonempty 'goal' label."""
    n = int(rng.integers(2, max_states + 1))
    rows = []
    for _ in range(n):
        ts = []
        for _ in range(int(rng.integers(1, max_transitions + 1))):
            k = int(rng.integers(1, min(max_branches, n, max_den) + 1))
            targets = rng.choice(n, size=k, replace=False).tolist()
            den = int(rng.integers(k, max_den + 1))
            ts.append(make_transition(
                (int(t), Fraction(w, den)) for t, w in zip(targets, _composition(rng, den, k))))
        rows.append(tuple(ts))
    goal = rng.choice(n, size=int(rng.integers(1, max(1, n // 3) + 1)), replace=False).tolist()
    return Mdp(n, int(rng.integers(0, n)), tuple(rows), {"goal": frozenset(int(g) for g in goal)})


