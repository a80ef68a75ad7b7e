# safe_rounding.py — directed floating-point arithmetic: hardware rounding modes or one-ULP nudging
from __future__ import annotations

import enum
import logging
import math
import platform
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterator, NamedTuple, Optional, Tuple, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
INF = math.inf


class Direction(enum.Enum):
    DOWN = "down"
    UP = "up"
    NEAREST = "nearest"


class Precision(enum.Enum):
    SINGLE = "single"
    DOUBLE = "double"

    @property
    def dtype(self):
        return np.float32 if self is Precision.SINGLE else np.float64

    @property
    def max_finite(self) -> float:
        return float(np.finfo(self.dtype).max)


class RoundingStrategy(enum.Enum):
    HARDWARE = "hardware"
    NUDGE = "nudge"


class RoundingUnavailable(RuntimeError):
    """The platform does not let us change the floating-point rounding mode."""


# ───── Floating-point environment (fenv.h via ctypes) ──────
# FE_* macro values per architecture family
_FE_CODES = {
    "x86": {Direction.NEAREST: 0x000, Direction.DOWN: 0x400, Direction.UP: 0x800},
    "arm": {Direction.NEAREST: 0x000000, Direction.UP: 0x400000, Direction.DOWN: 0x800000},
    "ppc": {Direction.NEAREST: 0, Direction.UP: 2, Direction.DOWN: 3},
}
_MACHINES = {
    "x86_64": "x86", "amd64": "x86", "i386": "x86", "i686": "x86", "x86": "x86",
    "aarch64": "arm", "arm64": "arm", "ppc64le": "ppc", "ppc64": "ppc",
}


@dataclass(frozen=True)
class _FenvBackend:
    name: str
    get_mode: Callable[[], int]
    set_mode: Callable[[int], bool]
    codes: Dict[Direction, int]


def _load_libm() -> _FenvBackend:
    from ctypes import cdll
    from ctypes.util import find_library

    family = _MACHINES.get(platform.machine().lower())
    if family is None:
        raise RoundingUnavailable(f"unknown FE_* constants for machine {platform.machine()!r}")
    path = find_library("m") or "libm.so.6"
    libm = cdll.LoadLibrary(path)
    return _FenvBackend(
        name=f"libm fesetround ({family})",
        get_mode=lambda: int(libm.fegetround()),
        set_mode=lambda code: libm.fesetround(code) == 0,
        codes=_FE_CODES[family],
    )


def _load_msvcrt() -> _FenvBackend:
    from ctypes import cdll

    msvcrt = cdll.msvcrt
    mask = 0x0300  # _MCW_RC
    return _FenvBackend(
        name="msvcrt _controlfp",
        get_mode=lambda: msvcrt._controlfp(0, 0) & mask,
        set_mode=lambda code: msvcrt._controlfp(code, mask) & mask == code,
        codes={Direction.NEAREST: 0x000, Direction.DOWN: 0x100, Direction.UP: 0x200},
    )


def _probe(backend: _FenvBackend) -> bool:
    # operands come from a list so nothing is folded at compile time
    one, tiny = [1.0, 2.0 ** -60]
    saved = backend.get_mode()
    try:
        if not backend.set_mode(backend.codes[Direction.DOWN]):
            return False
        down = one + tiny
        if not backend.set_mode(backend.codes[Direction.UP]):
            return False
        up = one + tiny
    finally:
        backend.set_mode(saved)
    return down == 1.0 and up == math.nextafter(1.0, INF)


_backend_lock = threading.Lock()
_backend: Optional[_FenvBackend] = None
_backend_error: Optional[str] = None


def _fenv() -> _FenvBackend:
    global _backend, _backend_error
    with _backend_lock:
        if _backend is None and _backend_error is None:
            errors = []
            for loader in (_load_libm, _load_msvcrt):
                try:
                    candidate = loader()
                except Exception as e:  # missing library or symbol
                    errors.append(f"{loader.__name__}: {e}")
                    continue
                if _probe(candidate):
                    _backend = candidate
                    logger.debug("hardware rounding control via %s", candidate.name)
                    break
                errors.append(f"{candidate.name}: mode change had no effect on a runtime addition")
            else:
                _backend_error = "; ".join(errors) or "no backend"
        if _backend is None:
            raise RoundingUnavailable(_backend_error)
        return _backend


def hardware_rounding_available() -> bool:
    try:
        _fenv()
    except RoundingUnavailable:
        return False
    return True


# ───── ULP helpers ─────────────────────────────────────────
def next_up(x: float, precision: Precision = Precision.DOUBLE) -> float:
    if precision is Precision.DOUBLE:
        return math.nextafter(x, INF)
    return float(np.nextafter(np.float32(x), np.float32(INF)))


def next_down(x: float, precision: Precision = Precision.DOUBLE) -> float:
    if precision is Precision.DOUBLE:
        return math.nextafter(x, -INF)
    return float(np.nextafter(np.float32(x), np.float32(-INF)))


def _ordinal(x: float, precision: Precision) -> int:
    if precision is Precision.DOUBLE:
        bits = int(np.array(x, dtype=np.float64).view(np.int64))
        return bits if bits >= 0 else -(bits + 2 ** 63)
    bits = int(np.array(x, dtype=np.float32).view(np.int32))
    return bits if bits >= 0 else -(bits + 2 ** 31)


def ulp_distance(a: float, b: float, precision: Precision = Precision.DOUBLE) -> int:
    """Number of representable steps between a and b in the given precision."""
    return abs(_ordinal(a, precision) - _ordinal(b, precision))


def _is_even(x: float, precision: Precision) -> bool:
    return _ordinal(abs(x), precision) % 2 == 0


# ───── Exact rational conversion ───────────────────────────
def rational_to_float(q: Fraction, precision: Precision = Precision.DOUBLE,
                      direction: Direction = Direction.NEAREST) -> float:
    """Round the exact rational q to the precision's grid in the given direction.

    Computed with exact comparisons, so the result does not depend on the
    hardware rounding mode that happens to be active.
    """
    q = Fraction(q)
    x = float(q)
    if precision is Precision.SINGLE:
        x = float(np.float32(x))
    while Fraction(x) > q:
        x = next_down(x, precision)
    while Fraction(next_up(x, precision)) <= q:
        x = next_up(x, precision)
    if Fraction(x) == q or direction is Direction.DOWN:
        return x
    up = next_up(x, precision)
    if direction is Direction.UP:
        return up
    below, above = q - Fraction(x), Fraction(up) - q
    if below != above:
        return x if below < above else up
    return x if _is_even(x, precision) else up


# ───── Arithmetic tables ───────────────────────────────────
class Arithmetic(NamedTuple):
    add: Callable[[float, float], float]
    sub: Callable[[float, float], float]
    mul: Callable[[float, float], float]
    div: Callable[[float, float], float]


def _div_by_zero(a: float) -> float:
    if a > 0:
        return INF
    if a < 0:
        return -INF
    return math.nan


def _plain_div64(a: float, b: float) -> float:
    return a / b if b != 0 else _div_by_zero(a)


def _f32(x: float) -> np.float32:
    return np.float32(x)


# the mode-dependent operations; their direction is whatever the hardware mode is
_PLAIN = {
    Precision.DOUBLE: Arithmetic(
        add=lambda a, b: a + b,
        sub=lambda a, b: a - b,
        mul=lambda a, b: a * b,
        div=_plain_div64,
    ),
    Precision.SINGLE: Arithmetic(
        add=lambda a, b: float(_f32(a) + _f32(b)),
        sub=lambda a, b: float(_f32(a) - _f32(b)),
        mul=lambda a, b: float(_f32(a) * _f32(b)),
        div=lambda a, b: float(_f32(a) / _f32(b)) if b != 0 else _div_by_zero(a),
    ),
}

# Error-free transformations, exact under round-to-nearest.
_SPLITTER = 134217729.0  # 2**27 + 1
_TINY = 2.0 ** -960
_HUGE = 2.0 ** 995
_SMALL = 2.0 ** -500
_fma = getattr(math, "fma", None)


def _two_sum_error(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a: float) -> Tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod_error(a: float, b: float, p: float) -> Optional[float]:
    """Exact a*b - p, or None when the operands are outside the range where it is exact."""
    if not _TINY <= abs(p) or not math.isfinite(p):
        return None
    if _fma is not None:
        return _fma(a, b, -p)
    if abs(p) > _HUGE or not _SMALL <= abs(a) <= _HUGE or not _SMALL <= abs(b) <= _HUGE:
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _overflowed(r: float, direction: Direction) -> float:
    top = Precision.DOUBLE.max_finite
    if direction is Direction.DOWN and r == INF:
        return top
    if direction is Direction.UP and r == -INF:
        return -top
    return r


def _nudge(r: float, error_sign: Optional[float], direction: Direction) -> float:
    """Step r one ULP toward `direction` if the exact value lies beyond it (unknown sign: always step)."""
    if direction is Direction.DOWN:
        return math.nextafter(r, -INF) if error_sign is None or error_sign < 0 else r
    return math.nextafter(r, INF) if error_sign is None or error_sign > 0 else r


def _nudged_add(direction: Direction) -> Callable[[float, float], float]:
    def add(a: float, b: float) -> float:
        s = a + b
        if math.isinf(s):
            return _overflowed(s, direction)
        return _nudge(s, _two_sum_error(a, b, s), direction)
    return add


def _nudged_mul(direction: Direction) -> Callable[[float, float], float]:
    def mul(a: float, b: float) -> float:
        p = a * b
        if a == 0 or b == 0:
            return p
        if math.isinf(p):
            return _overflowed(p, direction)
        return _nudge(p, _two_prod_error(a, b, p), direction)
    return mul


def _nudged_div(direction: Direction) -> Callable[[float, float], float]:
    def div(a: float, b: float) -> float:
        if b == 0:
            return _div_by_zero(a)
        q = a / b
        if a == 0:
            return q
        if math.isinf(q):
            return _overflowed(q, direction)
        e = _two_prod_error(q, b, q * b) if _TINY <= abs(b) else None
        if e is None:
            return _nudge(q, None, direction)
        remainder = (a - q * b) - e  # exact: a - q*b is representable
        return _nudge(q, remainder if b > 0 else -remainder, direction)
    return div


def _nudged(direction: Direction) -> Arithmetic:
    add = _nudged_add(direction)
    return Arithmetic(add=add, sub=lambda a, b: add(a, -b),
                      mul=_nudged_mul(direction), div=_nudged_div(direction))


def _to_single(x: float, direction: Direction) -> float:
    top = Precision.SINGLE.max_finite
    if math.isnan(x):
        return x
    if abs(x) > top:
        if direction is Direction.DOWN and x > 0:
            return top
        if direction is Direction.UP and x < 0:
            return -top
        return math.copysign(INF, x)
    f = float(np.float32(x))
    if direction is Direction.DOWN and f > x:
        return next_down(f, Precision.SINGLE)
    if direction is Direction.UP and f < x:
        return next_up(f, Precision.SINGLE)
    return f


def _nudged_single(direction: Direction) -> Arithmetic:
    wide = _nudged(direction)
    wrap = lambda op: (lambda a, b: _to_single(op(a, b), direction))
    return Arithmetic(*(wrap(op) for op in wide))


def _nudge_table(precision: Precision) -> Dict[Direction, Arithmetic]:
    build = _nudged if precision is Precision.DOUBLE else _nudged_single
    return {
        Direction.NEAREST: _PLAIN[precision],
        Direction.DOWN: build(Direction.DOWN),
        Direction.UP: build(Direction.UP),
    }


# ───── Kernel ──────────────────────────────────────────────
class RoundingKernel:
    """Directed arithmetic for one thread and one solve.

    Under HARDWARE the basic operations round in the active hardware mode,
    which `direction()` scopes and `switch()` changes; every mode change is
    counted in `mode_switches`. Under NUDGE the direction is a property of
    the operation itself and no mode is ever changed.
    """

    def __init__(self, strategy: RoundingStrategy = RoundingStrategy.HARDWARE,
                 precision: Precision = Precision.DOUBLE, allow_fallback: bool = True):
        self.precision = precision
        self.mode_switches = 0
        self.fallback = False
        if strategy is RoundingStrategy.HARDWARE and not hardware_rounding_available():
            if not allow_fallback:
                raise RoundingUnavailable(_backend_error)
            logger.warning("hardware rounding control unavailable (%s); falling back to nudge", _backend_error)
            strategy = RoundingStrategy.NUDGE
            self.fallback = True
        self.strategy = strategy
        self._active = Direction.NEAREST
        if strategy is RoundingStrategy.HARDWARE:
            self._tables = {d: _PLAIN[precision] for d in Direction}
        else:
            self._tables = _nudge_table(precision)

    @property
    def active(self) -> Direction:
        return self._active

    def _set(self, direction: Direction) -> None:
        backend = _fenv()
        if not backend.set_mode(backend.codes[direction]):
            raise RoundingUnavailable(f"could not set rounding mode {direction.value}")
        self._active = direction
        self.mode_switches += 1

    @contextmanager
    def direction(self, direction: Direction) -> Iterator["RoundingKernel"]:
        """Round in `direction` inside the block; the previous mode is restored on exit."""
        if self.strategy is RoundingStrategy.NUDGE:
            previous, self._active = self._active, direction
            try:
                yield self
            finally:
                self._active = previous
            return
        previous = self._active
        self._set(direction)
        try:
            yield self
        finally:
            self._set(previous)

    def switch(self, direction: Direction) -> None:
        """Change direction inside an open `direction()` scope (one counted mode change)."""
        if self.strategy is RoundingStrategy.NUDGE:
            self._active = direction
        else:
            self._set(direction)

    def arithmetic(self, direction: Direction) -> Arithmetic:
        """Operation table for `direction`.

        Under HARDWARE the table only rounds in `direction` while that mode is
        active; use `add`/`sub`/`mul`/`div` for one-off operations.
        """
        return self._tables[direction]

    def _apply(self, op: str, a: float, b: float, direction: Direction) -> float:
        table = self._tables[direction]
        if self.strategy is RoundingStrategy.HARDWARE and direction is not self._active:
            with self.direction(direction):
                return getattr(table, op)(a, b)
        return getattr(table, op)(a, b)

    def add(self, a: float, b: float, direction: Direction) -> float:
        return self._apply("add", a, b, direction)

    def sub(self, a: float, b: float, direction: Direction) -> float:
        return self._apply("sub", a, b, direction)

    def mul(self, a: float, b: float, direction: Direction) -> float:
        return self._apply("mul", a, b, direction)

    def div(self, a: float, b: float, direction: Direction) -> float:
        return self._apply("div", a, b, direction)

    def convert(self, q: Fraction, direction: Direction) -> float:
        return rational_to_float(q, self.precision, direction)


_local = threading.local()


def default_kernel(strategy: RoundingStrategy = RoundingStrategy.HARDWARE,
                   precision: Precision = Precision.DOUBLE) -> RoundingKernel:
    """Per-thread shared kernel for the free functions below."""
    kernels = getattr(_local, "kernels", None)
    if kernels is None:
        kernels = _local.kernels = {}
    key = (strategy, precision)
    if key not in kernels:
        kernels[key] = RoundingKernel(strategy, precision)
    return kernels[key]


def r_add(a: float, b: float, direction: Direction, precision: Precision = Precision.DOUBLE,
          strategy: RoundingStrategy = RoundingStrategy.HARDWARE) -> float:
    return default_kernel(strategy, precision).add(a, b, direction)


def r_sub(a: float, b: float, direction: Direction, precision: Precision = Precision.DOUBLE,
          strategy: RoundingStrategy = RoundingStrategy.HARDWARE) -> float:
    return default_kernel(strategy, precision).sub(a, b, direction)


def r_mul(a: float, b: float, direction: Direction, precision: Precision = Precision.DOUBLE,
          strategy: RoundingStrategy = RoundingStrategy.HARDWARE) -> float:
    return default_kernel(strategy, precision).mul(a, b, direction)


def r_div(a: float, b: float, direction: Direction, precision: Precision = Precision.DOUBLE,
          strategy: RoundingStrategy = RoundingStrategy.HARDWARE) -> float:
    return default_kernel(strategy, precision).div(a, b, direction)


def with_direction(direction: Direction, body: Callable[[], T],
                   kernel: Optional[RoundingKernel] = None) -> T:
    kernel = kernel or default_kernel()
    with kernel.direction(direction):
        return body()
