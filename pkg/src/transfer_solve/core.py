"""Shared geometry, tolerances, sampling and the error taxonomy.

Compact sets are stood in for by finite deterministic samples. Every sup
norm computed here is therefore a lower bound on the true supremum over
the continuum; callers that turn a sampled norm into a Lipschitz bound
apply a safety factor of 2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class TransferError(Exception):
    """Base class for every error raised by this package."""

    kind = "error"


class NonFiniteValue(TransferError):
    kind = "non_finite"


class DomainEscape(TransferError):
    kind = "domain_escape"

    def __init__(self, message: str, point: complex | None = None):
        super().__init__(message)
        self.point = point


class OutsideStrip(TransferError):
    kind = "outside_strip"


class TruncationLimit(TransferError):
    kind = "truncation_limit"


class HypothesisFailure(TransferError):
    kind = "hypothesis_failure"

    def __init__(self, message: str, lam: float | None = None, J: float | None = None):
        super().__init__(message)
        self.lam = lam
        self.J = J


class NoConvergence(TransferError):
    kind = "no_convergence"


class ContractionViolation(TransferError):
    kind = "contraction_violation"


def check_finite(v: complex, where: str = "") -> complex:
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise NonFiniteValue(f"non-finite value {v!r}" + (f" at {where}" if where else ""))
    return v


def as_complex(v) -> complex:
    """Accept a complex, a real, or a ``[re, im]`` pair."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"expected [re, im], got {v!r}")
        v = complex(float(v[0]), float(v[1]))
    v = complex(v)
    return check_finite(v)


@dataclass(frozen=True)
class Strip:
    """The horizontal strip ``|Im s| < half_height``."""

    half_height: float

    def __post_init__(self):
        if not self.half_height > 0:
            raise ValueError("strip half_height must be positive")

    def contains(self, s: complex) -> bool:
        return abs(s.imag) < self.half_height


@dataclass(frozen=True)
class LeftCutoff:
    """``S_J``: the part of the strip with ``Re s < -J``."""

    J: float

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError("cutoff J must be positive")

    def contains(self, s: complex) -> bool:
        return s.real < -self.J


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    def contains(self, v: complex) -> bool:
        return abs(v - self.center) < self.radius


@dataclass(frozen=True)
class Rect:
    lo: complex
    hi: complex

    def __post_init__(self):
        if not (self.lo.real < self.hi.real and self.lo.imag < self.hi.imag):
            raise ValueError("rectangle needs lo < hi in both coordinates")

    def contains(self, v: complex) -> bool:
        return (self.lo.real < v.real < self.hi.real
                and self.lo.imag < v.imag < self.hi.imag)


# Relative pull-in that keeps sample points strictly interior.
_INSET = 1e-9


@dataclass(frozen=True)
class DomainSpec:
    shape: Disk | Rect
    anchor: complex

    def __post_init__(self):
        if not self.shape.contains(self.anchor):
            raise ValueError(f"anchor {self.anchor!r} is not inside the domain")

    def contains(self, v: complex) -> bool:
        return self.shape.contains(v)

    @property
    def diameter(self) -> float:
        if isinstance(self.shape, Disk):
            return 2.0 * self.shape.radius
        return abs(self.shape.hi - self.shape.lo)

    def grid_sample(self, n: int = 32) -> "CompactSample":
        """Concentric polar grid (disk) or tensor grid (rectangle), ``n x n``."""
        if isinstance(self.shape, Disk):
            c, r = self.shape.center, self.shape.radius * (1 - _INSET)
            radii = r * np.arange(1, n + 1) / n
            theta = 2 * np.pi * np.arange(n) / n
            pts = (c + radii[:, None] * np.exp(1j * theta[None, :])).ravel()
            pts = np.concatenate([[c], pts])
            label = f"disk grid {n}x{n}"
        else:
            lo, hi = self.shape.lo, self.shape.hi
            dx, dy = (hi.real - lo.real) * _INSET, (hi.imag - lo.imag) * _INSET
            xs = np.linspace(lo.real + dx, hi.real - dx, n)
            ys = np.linspace(lo.imag + dy, hi.imag - dy, n)
            pts = (xs[None, :] + 1j * ys[:, None]).ravel()
            label = f"rect grid {n}x{n}"
        return CompactSample(tuple(complex(p) for p in pts) + (self.anchor,), label)

    def boundary_sample(self, n: int = 16) -> "CompactSample":
        """Points just inside the boundary.

        For a function holomorphic on the domain the modulus maximum sits on
        the boundary, so this small sample is the one used for sup norms.
        """
        if isinstance(self.shape, Disk):
            c, r = self.shape.center, self.shape.radius * (1 - _INSET)
            pts = [c + r * cmath.exp(2j * math.pi * t / n) for t in range(n)]
        else:
            lo, hi = self.shape.lo, self.shape.hi
            w, h = hi.real - lo.real, hi.imag - lo.imag
            lo = complex(lo.real + w * _INSET, lo.imag + h * _INSET)
            hi = complex(hi.real - w * _INSET, hi.imag - h * _INSET)
            corners = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)]
            per_side = max(1, n // 4)
            pts = []
            for a, b in zip(corners, corners[1:] + corners[:1]):
                pts.extend(a + (b - a) * t / per_side for t in range(per_side))
        return CompactSample(tuple(pts), f"boundary ring {len(pts)}")

    def to_dict(self) -> dict:
        d = {"anchor": [self.anchor.real, self.anchor.imag]}
        if isinstance(self.shape, Disk):
            d.update(type="disk", center=[self.shape.center.real, self.shape.center.imag],
                     radius=self.shape.radius)
        else:
            d.update(type="rect", lo=[self.shape.lo.real, self.shape.lo.imag],
                     hi=[self.shape.hi.real, self.shape.hi.imag])
        return d


@dataclass(frozen=True)
class CompactSample:
    points: tuple[complex, ...]
    description: str = ""

    def __post_init__(self):
        if not self.points:
            raise ValueError("a compact sample needs at least one point")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=complex)


def strip_sample(strip: Strip, cutoff: LeftCutoff, width: float = 2.0,
                 n_re: int = 5, n_im: int = 5) -> CompactSample:
    """Sample of ``S_J`` near its right edge, where decaying quantities peak."""
    a = strip.half_height * (1 - _INSET)
    res = -cutoff.J - np.linspace(0.0, width, n_re)
    ims = np.linspace(-a, a, n_im) if n_im > 1 else np.zeros(1)
    pts = (res[None, :] + 1j * ims[:, None]).ravel()
    return CompactSample(tuple(complex(p) for p in pts),
                         f"S_J edge band Re in [{-cutoff.J - width}, {-cutoff.J}]")


def vector_sample(base: CompactSample, k: int, budget: int = 256) -> np.ndarray:
    """Product sample ``base^k`` thinned so it has at most ``budget`` rows.

    Returns an array of shape ``(m, k)``.
    """
    pts = base.array()
    per_var = len(pts)
    while per_var > 1 and per_var ** k > budget:
        per_var -= 1
    if per_var < len(pts):
        idx = np.unique(np.round(np.arange(per_var) * len(pts) / per_var).astype(int))
        pts = pts[idx]
    mesh = np.meshgrid(*([pts] * k), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sup_norm_over(sample: Iterable[complex], f: Callable[[complex], complex]) -> float:
    """Max of ``|f(p)|`` over the sample points.

    This is a lower bound on the supremum over the underlying continuum.
    """
    best = 0.0
    for p in sample:
        v = complex(f(p))
        check_finite(v, f"sample point {p!r}")
        best = max(best, abs(v))
    return best


def in_domain(v: complex, d: DomainSpec) -> bool:
    return d.contains(v)


@dataclass(frozen=True)
class Tolerances:
    tail_eps: float = 1e-12
    iter_eps: float = 1e-12
    residual_tol: float = 1e-8
    max_trunc: int = 200
    max_levels: int = 64
    far_left_margin: float = 400.0
    lipschitz_target: float | None = None

    def __post_init__(self):
        for name in ("tail_eps", "iter_eps", "residual_tol", "far_left_margin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_trunc < 1 or self.max_levels < 1:
            raise ValueError("max_trunc and max_levels must be at least 1")
        if self.lipschitz_target is not None and not 0 < self.lipschitz_target < 1:
            raise ValueError("lipschitz_target must lie in (0, 1)")

    def for_order(self, k: int) -> "Tolerances":
        """Fill in the order-dependent default ``lipschitz_target = 1/(2k)``."""
        target = self.lipschitz_target
        if target is None:
            target = 1.0 / (2 * k)
        if not target < 1.0 / k:
            raise ValueError(f"lipschitz_target {target} must be below 1/k = {1.0 / k}")
        return Tolerances(self.tail_eps, self.iter_eps, self.residual_tol, self.max_trunc,
                          self.max_levels, self.far_left_margin, target)


def lattice_points(lo: float, hi: float, step: float) -> list[float]:
    """``lo, lo+step, ...`` up to ``hi`` inclusive, robust to rounding."""
    if not step > 0:
        raise ValueError("grid step must be positive")
    if hi < lo:
        raise ValueError("grid needs lo <= hi")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def pairwise_spread(values: Sequence[complex]) -> float:
    return max((abs(a - b) for i, a in enumerate(values) for b in values[i + 1:]), default=0.0)
