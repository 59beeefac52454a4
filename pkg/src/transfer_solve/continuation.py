"""Extend a converged solution from ``S_J`` to the whole strip.

Points left of ``-J`` are read off a lattice cache at the converged level.
Anything to the right is pushed forward with the equation itself,
``y(s) = F(s - k, y(s - k), ..., y(s - 1))``, memoized on the same lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DomainEscape, OutsideStrip, TransferError, check_finite, lattice_points
from .fexpr import EvalError
from .solver import LatticeCache, SolutionHandle


@dataclass(frozen=True)
class EvalGrid:
    re_lo: float
    re_hi: float
    re_step: float
    im_lo: float
    im_hi: float
    im_step: float

    def __post_init__(self):
        if self.re_lo > self.re_hi or self.im_lo > self.im_hi:
            raise ValueError("grid needs lo <= hi")
        if not (self.re_step > 0 and self.im_step > 0):
            raise ValueError("grid steps must be positive")

    def points(self) -> list[complex]:
        """Row-major: imaginary part outer, real part inner."""
        res = lattice_points(self.re_lo, self.re_hi, self.re_step)
        ims = lattice_points(self.im_lo, self.im_hi, self.im_step)
        return [complex(x, y) for y in ims for x in res]


@dataclass(frozen=True)
class GridRow:
    s: complex
    y: complex | None
    residual: float | None
    error: TransferError | None = None


def _class_base(h: SolutionHandle, s: complex) -> complex:
    """Rightmost point of ``s + Z`` strictly left of ``-J``, canonically rounded."""
    J = h.problem.cutoff.J
    r = round((-J - s.real) % 1.0, 12)
    if r == 0.0 or r == 1.0:
        r = 1.0
    return complex(-J - r, s.imag)


def lattice_for(h: SolutionHandle, s: complex) -> tuple[LatticeCache, int]:
    """Pick (or create) the cache serving ``s`` and return ``s``'s offset on it.

    The cache built by :func:`solve` serves every point at or left of its
    base; any other point uses the canonical base of its lattice class.
    """
    home = h.cache
    m = home.offset_of(s)
    if m is not None and m >= 0:
        return home, m
    base = _class_base(h, s)
    if home.offset_of(base) == 0:
        return home, m
    with home._lock:
        cache = h.caches.get(base)
        if cache is None:
            cache = h.caches[base] = LatticeCache(h.problem, base)
    return cache, cache.offset_of(s)


def _forward(h: SolutionHandle, cache: LatticeCache, m: int) -> complex:
    p = h.problem
    k, F = p.k, p.F

    def y(off: int) -> complex:
        if off >= 0:
            return cache.value(h.level, off, direct=True)
        return cache.forward[off]

    with cache._lock:
        start = min(cache.forward, default=0)
        for off in range(start - 1, m - 1, -1):
            s = cache.point(off)
            if not p.strip.contains(s):
                raise OutsideStrip(f"{s!r} is outside the strip")
            try:
                v = F(s - k, [y(off + k - i) for i in range(k)])
            except EvalError as exc:
                raise DomainEscape(f"forward step failed at s={s!r}: {exc}", s) from exc
            check_finite(v, f"forward value at s={s!r}")
            if not p.domain.contains(v):
                raise DomainEscape(f"forward value {v!r} at s={s!r} left the domain", s)
            cache.forward[off] = v
    return cache.forward[m]


def evaluate(h: SolutionHandle, s: complex) -> complex:
    s = complex(s)
    p = h.problem
    if not p.strip.contains(s):
        raise OutsideStrip(f"{s!r} is outside the strip |Im s| < {p.strip.half_height}")
    cache, m = lattice_for(h, s)
    if m >= 0:
        return cache.value(h.level, m, direct=True)
    return _forward(h, cache, m)


def evaluate_grid(h: SolutionHandle, g: EvalGrid) -> list[GridRow]:
    """Evaluate every grid point; failures become error rows."""
    from .verify import residual

    p = h.problem
    rows = []
    for s in g.points():
        try:
            y = evaluate(h, s)
        except TransferError as exc:
            rows.append(GridRow(s, None, None, exc))
            continue
        res = None
        if p.strip.contains(s + p.k):
            try:
                res = residual(h, s)
            except TransferError as exc:
                rows.append(GridRow(s, y, None, exc))
                continue
        rows.append(GridRow(s, y, res))
    return rows
