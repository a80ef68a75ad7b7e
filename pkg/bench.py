# bench.py — benchmark grid over variants × rounding strategies × precisions, CSV in and out
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence

import numpy as np
import pandas as pd

from interval_iteration import DEFAULT_EPSILON, SolveConfig, SolveTimeout, Variant, solve
from mdp_graph import Opt
from mdp_model import Mdp, random_mdp
from regression_models import build_catalogue
from safe_rounding import Precision, RoundingStrategy

logger = logging.getLogger(__name__)

COLUMNS = ["model", "variant", "strategy", "precision", "rep", "sweeps", "mode_switches",
           "lower_hex", "upper_hex", "time_s", "status"]
TIMEOUT_STATUS = "TO"


@dataclass(frozen=True)
class BenchCase:
    name: str
    model: Mdp
    goal: FrozenSet[int]
    opt: Opt


def catalogue_cases() -> List[BenchCase]:
    cases = []
    for entry in build_catalogue():
        m = entry.build()
        cases.append(BenchCase(entry.id, m, m.goal_states(entry.label), entry.opt))
    return cases


def random_cases(seed: int, count: int, opt: Opt = "max") -> List[BenchCase]:
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(count):
        m = random_mdp(rng)
        cases.append(BenchCase(f"random_{seed}_{i}", m, m.goal_states("goal"), opt))
    return cases


# ───── Grid ────────────────────────────────────────────────
def _cell(case: BenchCase, variant: Variant, strategy: RoundingStrategy, precision: Precision,
          rep: int, epsilon: Fraction, timeout: Optional[float]) -> Dict[str, object]:
    row: Dict[str, object] = {"model": case.name, "variant": variant.value, "strategy": strategy.value,
                              "precision": precision.value, "rep": rep, "sweeps": None,
                              "mode_switches": None, "lower_hex": "", "upper_hex": "",
                              "time_s": None}
    cfg = SolveConfig(variant=variant, epsilon=epsilon, precision=precision, strategy=strategy,
                      time_limit=timeout)
    try:
        result = solve(case.model, case.goal, case.opt, cfg)
        row.update(sweeps=result.sweeps, mode_switches=result.mode_switches,
                   lower_hex=result.lower.hex(), upper_hex=result.upper.hex(),
                   time_s=result.iteration_seconds, status=result.termination.value)
    except SolveTimeout as e:
        row.update(sweeps=e.sweeps, time_s=e.seconds, status=TIMEOUT_STATUS)
    except Exception as e:
        row["status"] = f"error:{e}"
    logger.info("bench %s %s/%s/%s rep %d: %s", case.name, variant.value, strategy.value,
                precision.value, rep, row["status"])
    return row


def run_grid(cases: Sequence[BenchCase], variants: Sequence[Variant],
             strategies: Sequence[RoundingStrategy], precisions: Sequence[Precision],
             repetitions: int = 1, epsilon: Fraction = DEFAULT_EPSILON,
             timeout: Optional[float] = None, jobs: int = 1) -> pd.DataFrame:
    """One row per (model, variant, strategy, precision, repetition), in grid order."""
    cells = list(itertools.product(cases, variants, strategies, precisions, range(1, repetitions + 1)))
    args = [(*cell, Fraction(epsilon), timeout) for cell in cells]
    if jobs > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda a: _cell(*a), args))
    else:
        rows = [_cell(*a) for a in args]
    df = pd.DataFrame(rows, columns=COLUMNS)
    for col in ("sweeps", "mode_switches"):
        df[col] = pd.to_numeric(df[col]).astype("Int64")
    df["time_s"] = pd.to_numeric(df["time_s"]).astype("float64")
    return df


# ───── Summaries ───────────────────────────────────────────
_KEYS = ["model", "variant", "strategy", "precision"]


def summarize(df: pd.DataFrame) -> pd.DataFrame:
    """Median-of-repetitions rows (rep = "median") over the non-timeout, non-error cells.

    Sweeps, counters and bounds are deterministic per cell; only time is aggregated.
    """
    ok = df[~df["status"].astype(str).str.startswith("error") & (df["status"] != TIMEOUT_STATUS)]
    ok = ok[ok["rep"].astype(str) != "median"]
    if ok.empty:
        return pd.DataFrame(columns=COLUMNS)
    summary = (ok.groupby(_KEYS, sort=False)
               .agg(sweeps=("sweeps", "first"), mode_switches=("mode_switches", "first"),
                    lower_hex=("lower_hex", "first"), upper_hex=("upper_hex", "first"),
                    time_s=("time_s", "median"), status=("status", "first"))
               .reset_index())
    summary["rep"] = "median"
    summary = summary.astype({"sweeps": "Int64", "mode_switches": "Int64"})
    return summary[COLUMNS]


def with_summary(df: pd.DataFrame) -> pd.DataFrame:
    """Per-repetition rows followed by their median rows."""
    summary = summarize(df)
    if summary.empty:
        return df
    return pd.concat([df, summary], ignore_index=True)[COLUMNS]


def compare(df: pd.DataFrame, a: str, b: str) -> pd.DataFrame:
    """Per model/strategy/precision median iteration time of variant a against variant b."""
    med = summarize(df)
    keys = ["model", "strategy", "precision"]
    left = med[med["variant"] == a][keys + ["time_s"]].rename(columns={"time_s": f"time_{a}"})
    right = med[med["variant"] == b][keys + ["time_s"]].rename(columns={"time_s": f"time_{b}"})
    out = left.merge(right, on=keys, how="inner")
    out["ratio"] = out[f"time_{a}"] / out[f"time_{b}"]
    return out


# ───── CSV ─────────────────────────────────────────────────
def write_csv(df: pd.DataFrame, path_or_buf) -> None:
    df.to_csv(path_or_buf, index=False, columns=COLUMNS)


def read_csv(path_or_buf) -> pd.DataFrame:
    """Parse a bench CSV back; adds float `lower`/`upper` columns decoded from the hex fields."""
    df = pd.read_csv(path_or_buf, dtype=str, keep_default_na=False)
    missing = set(COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"bench CSV lacks columns {sorted(missing)}")
    for col in ("sweeps", "mode_switches"):
        df[col] = pd.to_numeric(df[col].where(df[col] != ""), errors="coerce").round().astype("Int64")
    df["time_s"] = pd.to_numeric(df["time_s"].where(df["time_s"] != ""), errors="coerce")
    df["lower"] = [float.fromhex(h) if h else np.nan for h in df["lower_hex"]]
    df["upper"] = [float.fromhex(h) if h else np.nan for h in df["upper_hex"]]
    return df
