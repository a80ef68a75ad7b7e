# regression_models.py — named regression models with their exact reachability values
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from interval_iteration import SolveConfig, solve
from mdp_graph import Opt
from mdp_model import Mdp, build_counterexample, parse_model

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegressionModel:
    id: str
    family: str
    description: str
    build: Callable[[], Mdp]
    label: str
    opt: Opt
    expected: Fraction


_COIN = """
mdp 3 0
label goal 1
state 0:
  1/2 -> 1, 1/2 -> 2
state 1:
  1/1 -> 1
state 2:
  1/1 -> 2
"""

_GEOMETRIC = """
mdp 2 0
label goal 1
state 0:
  1/2 -> 0, 1/2 -> 1
state 1:
  1/1 -> 1
"""

_CHOICE = """
mdp 3 0
label goal 1
state 0:
  1/1 -> 1
  1/2 -> 1, 1/2 -> 2
state 1:
  1/1 -> 1
state 2:
  1/1 -> 2
"""

# states 0 and 1 form an end component; state 1 may leave it
_MEC_EXIT = """
mdp 4 0
label goal 2
state 0:
  1/1 -> 1
state 1:
  1/1 -> 0
  1/2 -> 2, 1/2 -> 3
state 2:
  1/1 -> 2
state 3:
  1/1 -> 3
"""


def _counterexample(n: int, gamma: Fraction) -> RegressionModel:
    return RegressionModel(
        id=f"ce_n{n}_g{gamma.numerator}_{gamma.denominator}",
        family="counterexample",
        description=f"rounding counterexample chain, n={n}, gamma={gamma}",
        build=lambda: build_counterexample(n, gamma),
        label="plus",
        opt="max",
        expected=Fraction(1, 2) + gamma ** (n + 2),
    )


def build_catalogue() -> List[RegressionModel]:
    models: List[RegressionModel] = []

    # ───────── Counterexample family ─────────
    for n, gamma in ((0, Fraction(1, 4)), (1, Fraction(1, 10)), (3, Fraction(1, 3)),
                     (1, Fraction(1, 10 ** 6))):
        models.append(_counterexample(n, gamma))

    # ───────── Small hand-written models ─────────
    models.append(RegressionModel(
        id="coin", family="dtmc", description="fair coin into goal or sink",
        build=lambda: parse_model(_COIN), label="goal", opt="max", expected=Fraction(1, 2)))
    models.append(RegressionModel(
        id="geometric", family="dtmc", description="self-loop 1/2, goal 1/2",
        build=lambda: parse_model(_GEOMETRIC), label="goal", opt="min", expected=Fraction(1)))
    models.append(RegressionModel(
        id="choice_max", family="mdp", description="sure transition vs. coin flip, maximized",
        build=lambda: parse_model(_CHOICE), label="goal", opt="max", expected=Fraction(1)))
    models.append(RegressionModel(
        id="choice_min", family="mdp", description="sure transition vs. coin flip, minimized",
        build=lambda: parse_model(_CHOICE), label="goal", opt="min", expected=Fraction(1, 2)))
    models.append(RegressionModel(
        id="mec_exit_max", family="mdp", description="2-state end component with one exit",
        build=lambda: parse_model(_MEC_EXIT), label="goal", opt="max", expected=Fraction(1, 2)))
    models.append(RegressionModel(
        id="mec_exit_min", family="mdp", description="2-state end component, staying forever",
        build=lambda: parse_model(_MEC_EXIT), label="goal", opt="min", expected=Fraction(0)))

    return models


def lookup(model_id: str) -> RegressionModel:
    for entry in build_catalogue():
        if entry.id == model_id:
            return entry
    raise KeyError(f"no regression model named {model_id!r}")


def verify(cfg: SolveConfig = SolveConfig(),
           models: Optional[List[RegressionModel]] = None) -> List[Dict[str, str]]:
    """Solve every catalogue entry and report whether its interval contains the exact value."""
    findings: List[Dict[str, str]] = []
    for entry in models if models is not None else build_catalogue():
        finding = {"Model": entry.id, "Family": entry.family, "Opt": entry.opt,
                   "Expected": str(entry.expected)}
        try:
            m = entry.build()
            result = solve(m, m.goal_states(entry.label), entry.opt, cfg)
            inside = Fraction(result.lower) <= entry.expected <= Fraction(result.upper)
            finding.update({
                "Lower": result.lower.hex(),
                "Upper": result.upper.hex(),
                "Sweeps": str(result.sweeps),
                "Detail": "contains exact value" if inside else "exact value outside interval",
            })
        except Exception as e:
            logger.warning("regression model %s failed: %s", entry.id, e)
            finding["Detail"] = f"[Engine Error] {e}"
        findings.append(finding)
    return findings
