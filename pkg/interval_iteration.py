# interval_iteration.py — interval iteration solvers (III, SII, SR-III, SR-SII) with stall detection
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from mdp_graph import Opt, QualitativeSets, collapse_mecs, qualitative_sets
from mdp_model import Mdp, make_goal_absorbing
from safe_rounding import (Arithmetic, Direction, Precision, RoundingKernel, RoundingStrategy,
                           rational_to_float)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = Fraction(1, 10 ** 6)
DEFAULT_MAX_SWEEPS = 10 ** 8


class Variant(enum.Enum):
    III = "iii"
    SII = "sii"
    SR_III = "sr-iii"
    SR_SII = "sr-sii"

    @property
    def safe(self) -> bool:
        return self in (Variant.SR_III, Variant.SR_SII)

    @property
    def interleaved(self) -> bool:
        return self in (Variant.III, Variant.SR_III)


class Termination(enum.Enum):
    CONVERGED = "converged"
    STALLED = "stalled"
    SWEEP_LIMIT = "sweep_limit"


class SolveError(RuntimeError):
    pass


class SweepLimitExceeded(SolveError):
    """Raised by front ends that refuse a result cut off by max_sweeps."""

    def __init__(self, result: "SolveResult"):
        self.result = result
        super().__init__(f"no convergence within {result.sweeps} sweeps; "
                         f"partial interval [{result.lower!r}, {result.upper!r}]")


class SolveTimeout(SolveError):
    def __init__(self, seconds: float, sweeps: int):
        self.seconds = seconds
        self.sweeps = sweeps
        super().__init__(f"iteration exceeded {seconds:g}s after {sweeps} sweeps")


@dataclass(frozen=True)
class SolveConfig:
    variant: Variant = Variant.SR_SII
    epsilon: Fraction = DEFAULT_EPSILON
    precision: Precision = Precision.DOUBLE
    strategy: RoundingStrategy = RoundingStrategy.HARDWARE
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    # None: stop on the initial state only
    check_all_states: Optional[bool] = None
    time_limit: Optional[float] = None
    trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")


@dataclass
class ValueVectors:
    l: np.ndarray
    u: np.ndarray
    changed: bool = False

    def copy(self) -> "ValueVectors":
        return ValueVectors(self.l.copy(), self.u.copy(), self.changed)


@dataclass(frozen=True)
class SolveResult:
    lower: float
    upper: float
    sweeps: int
    stalled: bool
    mode_switches: int
    full_vectors: ValueVectors
    termination: Termination
    variant: Variant
    precision: Precision
    strategy: RoundingStrategy
    fallback: bool = False
    updated_states: int = 0
    iteration_seconds: float = 0.0
    trace: Tuple[Tuple[np.ndarray, np.ndarray], ...] = field(default=(), repr=False)

    @property
    def midpoint(self) -> float:
        """The classic point estimate; carries no guarantee under rounding."""
        return (self.lower + self.upper) / 2


# ───── Building blocks ─────────────────────────────────────
def initialize(m: Mdp, q: QualitativeSets, precision: Precision = Precision.DOUBLE) -> ValueVectors:
    l = np.zeros(m.state_count, dtype=precision.dtype)
    u = np.ones(m.state_count, dtype=precision.dtype)
    l[sorted(q.s1)] = 1
    u[sorted(q.s0)] = 0
    return ValueVectors(l, u)


Row = Tuple[Tuple[int, ...], Tuple[float, ...]]


def _rows(m: Mdp, s: int, precision: Precision, direction: Direction, stride: int = 1,
          offset: int = 0) -> Tuple[Row, ...]:
    return tuple(
        (tuple(stride * b.target + offset for b in t.branches),
         tuple(rational_to_float(b.prob, precision, direction) for b in t.branches))
        for t in m.transitions[s])


def _bellman(rows: Sequence[Row], v: Sequence[float], maximize: bool, ar: Arithmetic) -> float:
    add, mul = ar.add, ar.mul
    best = None
    for targets, probs in rows:
        acc = 0.0
        # explicit accumulation in branch order: builtin sum() is compensated
        for t, p in zip(targets, probs):
            acc = add(acc, mul(p, v[t]))
        if best is None or (acc > best if maximize else acc < best):
            best = acc
    return best


def bellman(m: Mdp, s: int, v: Sequence[float], opt: Opt, direction: Direction,
            precision: Precision = Precision.DOUBLE, kernel: Optional[RoundingKernel] = None) -> float:
    """One rounded Bellman update of state s against the value vector v."""
    kernel = kernel or RoundingKernel(precision=precision)
    rows = _rows(m, s, precision, direction)
    values = [float(x) for x in v]
    if kernel.strategy is RoundingStrategy.HARDWARE and direction is not Direction.NEAREST:
        with kernel.direction(direction):
            return _bellman(rows, values, opt == "max", kernel.arithmetic(direction))
    return _bellman(rows, values, opt == "max", kernel.arithmetic(direction))


def _relative_ok(l: float, u: float, eps: float, ar: Arithmetic) -> bool:
    width = ar.sub(u, l)
    if width == 0:
        return True  # zero-width interval, including 0/0
    return ar.div(width, l) <= eps  # l = 0 gives +inf


def check_convergence(l_sI: float, u_sI: float, epsilon: float, direction: Direction,
                      precision: Precision = Precision.DOUBLE,
                      kernel: Optional[RoundingKernel] = None) -> bool:
    """(u - l) / l <= epsilon with subtraction and division rounded in `direction`."""
    kernel = kernel or RoundingKernel(precision=precision)
    if kernel.strategy is RoundingStrategy.HARDWARE and direction is not Direction.NEAREST:
        with kernel.direction(direction):
            return _relative_ok(l_sI, u_sI, epsilon, kernel.arithmetic(direction))
    return _relative_ok(l_sI, u_sI, epsilon, kernel.arithmetic(direction))


# ───── Prepared problem ────────────────────────────────────
@dataclass(frozen=True)
class _Problem:
    model: Mdp
    quotient: Tuple[int, ...]
    sets: QualitativeSets
    maximize: bool
    updated: Tuple[int, ...]


def _prepare(m: Mdp, goal: Iterable[int], opt: Opt) -> _Problem:
    goal = frozenset(goal)
    if not goal:
        raise ValueError("goal set is empty")
    m = make_goal_absorbing(m, goal)
    if opt == "max":
        m, quotient = collapse_mecs(m, goal)
        goal = frozenset(quotient[g] for g in goal)
    else:
        quotient = tuple(range(m.state_count))
    sets = qualitative_sets(m, goal, opt)
    updated = tuple(s for s in range(m.state_count) if s not in sets.s0 and s not in sets.s1)
    logger.debug("preprocessing: %d states, |S0|=%d, |S1|=%d, %d to iterate",
                 m.state_count, len(sets.s0), len(sets.s1), len(updated))
    return _Problem(m, quotient, sets, opt == "max", updated)


class _Sweeper:
    """Runs sweeps of one variant over a prepared problem, in place on its storage."""

    def __init__(self, problem: _Problem, cfg: SolveConfig, kernel: RoundingKernel):
        self.p = problem
        self.cfg = cfg
        self.kernel = kernel
        m, prec = problem.model, cfg.precision
        lo_dir, up_dir = (Direction.DOWN, Direction.UP) if cfg.variant.safe else (Direction.NEAREST,) * 2
        self.lo_dir, self.up_dir = lo_dir, up_dir
        self.lo_ar, self.up_ar = kernel.arithmetic(lo_dir), kernel.arithmetic(up_dir)
        self.check_ar = self.up_ar
        self.eps = rational_to_float(cfg.epsilon, prec, Direction.DOWN if cfg.variant.safe else Direction.NEAREST)
        stride = 2 if cfg.variant.interleaved else 1
        self.lo_rows = {s: _rows(m, s, prec, lo_dir, stride, 0) for s in problem.updated}
        self.up_rows = {s: _rows(m, s, prec, up_dir, stride, 1 if stride == 2 else 0) for s in problem.updated}
        self.hardware = cfg.variant.safe and kernel.strategy is RoundingStrategy.HARDWARE

    # storage: one interleaved list [l0, u0, l1, u1, ...] or two lists
    def load(self, l: Sequence[float], u: Sequence[float]) -> None:
        if self.cfg.variant.interleaved:
            self.lu = [float(x) for pair in zip(l, u) for x in pair]
        else:
            self.lo, self.up = [float(x) for x in l], [float(x) for x in u]

    def bounds(self) -> Tuple[List[float], List[float]]:
        if self.cfg.variant.interleaved:
            return self.lu[0::2], self.lu[1::2]
        return list(self.lo), list(self.up)

    def sweep(self) -> bool:
        return self._interleaved() if self.cfg.variant.interleaved else self._sequential()

    def _interleaved(self) -> bool:
        lu, maximize, changed = self.lu, self.p.maximize, False
        switch = self.kernel.switch if self.hardware else None
        for s in self.p.updated:
            if switch:
                switch(Direction.DOWN)
            new = _bellman(self.lo_rows[s], lu, maximize, self.lo_ar)
            if new > lu[2 * s]:
                lu[2 * s], changed = new, True
            if switch:
                switch(Direction.UP)
            new = _bellman(self.up_rows[s], lu, maximize, self.up_ar)
            if new < lu[2 * s + 1]:
                lu[2 * s + 1], changed = new, True
        return changed

    def _sequential(self) -> bool:
        maximize, changed = self.p.maximize, False
        if self.hardware:
            self.kernel.switch(Direction.DOWN)
        lo = self.lo
        for s in self.p.updated:
            new = _bellman(self.lo_rows[s], lo, maximize, self.lo_ar)
            if new > lo[s]:
                lo[s], changed = new, True
        if self.hardware:
            self.kernel.switch(Direction.UP)
        up = self.up
        for s in self.p.updated:
            new = _bellman(self.up_rows[s], up, maximize, self.up_ar)
            if new < up[s]:
                up[s], changed = new, True
        return changed

    def converged(self) -> bool:
        l, u = self.bounds()
        states = range(len(l)) if self.cfg.check_all_states else (self.p.model.initial,)
        return all(_relative_ok(l[s], u[s], self.eps, self.check_ar) for s in states)


def _expand(problem: _Problem, values: Sequence[float], precision: Precision) -> np.ndarray:
    return np.array([values[c] for c in problem.quotient], dtype=precision.dtype)


def _iterate(problem: _Problem, cfg: SolveConfig, l0: Sequence[float], u0: Sequence[float],
             max_sweeps: int) -> SolveResult:
    kernel = RoundingKernel(cfg.strategy, cfg.precision)
    sweeper = _Sweeper(problem, cfg, kernel)
    sweeper.load(l0, u0)
    sweeps, changed, trace = 0, True, []
    deadline = None if cfg.time_limit is None else time.perf_counter() + cfg.time_limit
    start = time.perf_counter()

    def loop() -> Termination:
        nonlocal sweeps, changed
        initial = problem.model.initial
        l, u = sweeper.bounds()
        states = range(len(l)) if cfg.check_all_states else (initial,)
        if all(l[s] == u[s] for s in states):
            return Termination.CONVERGED
        while True:
            changed = sweeper.sweep()
            sweeps += 1
            if cfg.trace:
                lo, up = sweeper.bounds()
                trace.append((_expand(problem, lo, cfg.precision), _expand(problem, up, cfg.precision)))
            if sweeper.converged():
                return Termination.CONVERGED
            if not changed:
                return Termination.STALLED
            if sweeps >= max_sweeps:
                return Termination.SWEEP_LIMIT
            if deadline is not None and time.perf_counter() > deadline:
                raise SolveTimeout(cfg.time_limit, sweeps)

    if sweeper.hardware:
        with kernel.direction(Direction.UP if cfg.variant.interleaved else Direction.DOWN):
            termination = loop()
    else:
        termination = loop()
    elapsed = time.perf_counter() - start

    lo, up = sweeper.bounds()
    vectors = ValueVectors(_expand(problem, lo, cfg.precision), _expand(problem, up, cfg.precision),
                           changed if sweeps else False)
    initial = problem.model.initial
    return SolveResult(
        lower=lo[initial], upper=up[initial], sweeps=sweeps,
        stalled=termination is Termination.STALLED, mode_switches=kernel.mode_switches,
        full_vectors=vectors, termination=termination, variant=cfg.variant,
        precision=cfg.precision, strategy=kernel.strategy, fallback=kernel.fallback,
        updated_states=len(problem.updated), iteration_seconds=elapsed, trace=tuple(trace))


def solve(m: Mdp, goal: Iterable[int], opt: Opt, cfg: SolveConfig = SolveConfig()) -> SolveResult:
    """Interval iteration from the initial state; SR variants bracket the exact value."""
    problem = _prepare(m, goal, opt)
    start = initialize(problem.model, problem.sets, cfg.precision)
    result = _iterate(problem, cfg, start.l.tolist(), start.u.tolist(), cfg.max_sweeps)
    log = logger.warning if result.termination is Termination.SWEEP_LIMIT else logger.info
    log("%s %s: [%s, %s] after %d sweeps (%s, %d mode switches)", cfg.variant.value, opt,
        result.lower.hex(), result.upper.hex(), result.sweeps, result.termination.value,
        result.mode_switches)
    return result


def sweep_once(m: Mdp, goal: Iterable[int], opt: Opt, cfg: SolveConfig,
               vectors: ValueVectors) -> ValueVectors:
    """Run exactly one more sweep starting from a previous result's vectors."""
    problem = _prepare(m, goal, opt)
    count = problem.model.state_count
    l0, u0 = [0.0] * count, [0.0] * count
    for s, c in enumerate(problem.quotient):
        l0[c], u0[c] = float(vectors.l[s]), float(vectors.u[s])
    kernel = RoundingKernel(cfg.strategy, cfg.precision)
    sweeper = _Sweeper(problem, cfg, kernel)
    sweeper.load(l0, u0)
    if sweeper.hardware:
        with kernel.direction(Direction.UP):
            changed = sweeper.sweep()
    else:
        changed = sweeper.sweep()
    lo, up = sweeper.bounds()
    return ValueVectors(_expand(problem, lo, cfg.precision), _expand(problem, up, cfg.precision), changed)


