# pctl_check.py — three-valued evaluation of top-level P~c [ F label ] properties
from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Tuple

from interval_iteration import SolveConfig, SolveResult, ValueVectors, solve
from mdp_graph import Opt
from mdp_model import Mdp

logger = logging.getLogger(__name__)

COMPARATORS = ("<=", "<", ">=", ">")
REFINE_FACTOR = 100


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


class PropertyError(ValueError):
    pass


@dataclass(frozen=True)
class PropertySpec:
    """Either a threshold check (comparator + bound) or a value query (opt only)."""
    text: str
    label: str
    opt: Opt
    comparator: Optional[str] = None
    bound: Optional[Fraction] = None

    @property
    def is_query(self) -> bool:
        return self.comparator is None


@dataclass(frozen=True)
class CheckOutcome:
    prop: PropertySpec
    verdict: Optional[Verdict]
    result: SolveResult
    refined: bool = False


def evaluate_opt_for(comparator: str) -> Opt:
    if comparator not in COMPARATORS:
        raise PropertyError(f"unknown comparator {comparator!r}")
    return "max" if comparator in ("<=", "<") else "min"


def evaluate(lower: float, upper: float, comparator: str, c: Fraction) -> Verdict:
    """Compare the interval [lower, upper] against c using the floats' exact values."""
    if comparator not in COMPARATORS:
        raise PropertyError(f"unknown comparator {comparator!r}")
    lo, hi, c = Fraction(lower), Fraction(upper), Fraction(c)
    if lo > hi:
        raise ValueError(f"empty interval [{lower!r}, {upper!r}]")
    if comparator == "<=":
        holds, fails = hi <= c, lo > c
    elif comparator == "<":
        holds, fails = hi < c, lo >= c
    elif comparator == ">=":
        holds, fails = lo >= c, hi < c
    else:
        holds, fails = lo > c, hi <= c
    if holds:
        return Verdict.TRUE
    return Verdict.FALSE if fails else Verdict.UNKNOWN


def satisfying_states(vectors: ValueVectors, comparator: str, c: Fraction) -> Tuple[Verdict, ...]:
    """Per-state verdicts; the TRUE entries form the satisfaction set."""
    return tuple(evaluate(float(l), float(u), comparator, c) for l, u in zip(vectors.l, vectors.u))


# ───── Property syntax ─────────────────────────────────────
_BOUND = r"(\d+(?:\s*/\s*\d+)?|\d*\.\d+)"
_THRESHOLD = re.compile(r'^P\s*(<=|<|>=|>)\s*' + _BOUND + r'\s*\[\s*F\s+"([^"]+)"\s*\]$')
_QUERY = re.compile(r'^P(max|min)\s*=\s*\?\s*\[\s*F\s+"([^"]+)"\s*\]$')


def _bound(text: str) -> Fraction:
    try:
        value = Fraction(text.replace(" ", ""))
    except (ValueError, ZeroDivisionError) as e:
        raise PropertyError(f"invalid probability bound {text!r}") from e
    if not 0 <= value <= 1:
        raise PropertyError(f"probability bound {value} outside [0, 1]")
    return value


def parse_property(text: str) -> PropertySpec:
    src = text.strip()
    m = _QUERY.match(src)
    if m:
        return PropertySpec(src, m.group(2), m.group(1))
    m = _THRESHOLD.match(src)
    if m:
        comparator, bound = m.group(1), _bound(m.group(2))
        return PropertySpec(src, m.group(3), evaluate_opt_for(comparator), comparator, bound)
    if src.count("P") > 1 or re.search(r"[!&|]|\bU\b|\bX\b|\bG\b", src):
        raise PropertyError(f"nested or non-reachability formulas are not supported: {src!r}")
    raise PropertyError(f'cannot parse property {src!r}; expected P<=c [ F "label" ] or Pmax=? [ F "label" ]')


# ───── End-to-end check ────────────────────────────────────
def check(m: Mdp, prop: PropertySpec, cfg: SolveConfig = SolveConfig(), refine: bool = False) -> CheckOutcome:
    """Solve for the property's opt and judge the initial state.

    Threshold checks stop on all states unless the config says otherwise.
    With `refine`, an Unknown verdict triggers one retry at epsilon / 100.
    """
    goal = m.goal_states(prop.label)
    if cfg.check_all_states is None:
        cfg = replace(cfg, check_all_states=not prop.is_query)
    result = solve(m, goal, prop.opt, cfg)
    if prop.is_query:
        return CheckOutcome(prop, None, result)
    verdict = evaluate(result.lower, result.upper, prop.comparator, prop.bound)
    if verdict is Verdict.UNKNOWN and refine:
        tighter = replace(cfg, epsilon=cfg.epsilon / REFINE_FACTOR)
        logger.info("verdict unknown at epsilon=%s; retrying once at %s", cfg.epsilon, tighter.epsilon)
        result = solve(m, goal, prop.opt, tighter)
        verdict = evaluate(result.lower, result.upper, prop.comparator, prop.bound)
        return CheckOutcome(prop, verdict, result, refined=True)
    return CheckOutcome(prop, verdict, result)
