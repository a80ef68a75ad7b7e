# run_report.py — RunReport record and its text / structured renderings
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from interval_iteration import SolveResult


def hex_float(x: float) -> str:
    return float(x).hex()


def parse_hex(text: str) -> float:
    """Inverse of hex_float; bit-exact."""
    return float.fromhex(text.strip())


@dataclass(frozen=True)
class RunReport:
    model: str
    property: str
    lower: float
    upper: float
    sweeps: int
    stalled: bool
    mode_switches: int
    wall_time: float
    variant: str
    precision: str
    strategy: str
    termination: str
    verdict: Optional[str] = None
    fallback: bool = False
    refined: bool = False
    safe: bool = True

    @classmethod
    def from_result(cls, model: str, prop: str, result: SolveResult,
                    verdict: Optional[str] = None, refined: bool = False) -> "RunReport":
        return cls(
            model=model, property=prop, lower=result.lower, upper=result.upper,
            sweeps=result.sweeps, stalled=result.stalled, mode_switches=result.mode_switches,
            wall_time=result.iteration_seconds, variant=result.variant.value,
            precision=result.precision.value, strategy=result.strategy.value,
            termination=result.termination.value, verdict=verdict, fallback=result.fallback,
            refined=refined, safe=result.variant.safe)

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["lower_hex"], d["upper_hex"] = hex_float(self.lower), hex_float(self.upper)
        if not self.safe:
            d["midpoint_hex"] = hex_float(self.midpoint)
        return d


def render_text(report: RunReport) -> str:
    parts = [
        f"model:       {report.model}",
        f"property:    {report.property}",
    ]
    if report.verdict is not None:
        parts.append(f"verdict:     {report.verdict}")
    parts += [
        f"lower:       {hex_float(report.lower)}  ({report.lower!r})",
        f"upper:       {hex_float(report.upper)}  ({report.upper!r})",
    ]
    if not report.safe:
        parts += [
            f"midpoint:    {hex_float(report.midpoint)}  ({report.midpoint!r})",
            "WARNING: unsafe variant; neither the interval nor the midpoint is guaranteed under rounding",
        ]
    parts += [
        f"algorithm:   {report.variant} / {report.precision} / {report.strategy}"
        + (" (hardware unavailable, nudged)" if report.fallback else ""),
        f"sweeps:      {report.sweeps} ({report.termination})",
        f"stalled:     {str(report.stalled).lower()}",
        f"mode switch: {report.mode_switches}",
        f"time (s):    {report.wall_time:.6f}",
    ]
    if report.refined:
        parts.append("refined:     retried once with epsilon / 100")
    return "\n".join(parts)


def render_structured(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)


def report_from_structured(text: str) -> RunReport:
    """Rebuild a report from render_structured output; bounds come from the hex fields."""
    d = json.loads(text)
    d["lower"], d["upper"] = parse_hex(d.pop("lower_hex")), parse_hex(d.pop("upper_hex"))
    d.pop("midpoint_hex", None)
    return RunReport(**d)
