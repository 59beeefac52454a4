"""Seed, level iterates and the contraction iteration on the left half-strip.

Every argument the recursion touches is the base point minus a nonnegative
integer, so level values are memoized by ``(level, offset)`` on a lattice
anchored at one base point.
"""

from __future__ import annotations

import dataclasses
import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import fexpr
from .core import (CompactSample, ContractionViolation, DomainSpec, HypothesisFailure,
                   LeftCutoff, NoConvergence, OutsideStrip, Strip, Tolerances, strip_sample, vector_sample)
from .omega import CompositionSequence, compose_adaptive

MAX_CUTOFF = 2.0 ** 16


@dataclass(frozen=True)
class ProblemSpec:
    k: int
    expr: fexpr.Expr
    strip: Strip
    cutoff: LeftCutoff
    domain: DomainSpec
    parameters: tuple[complex, ...] = ()
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("order k must be at least 1")
        if fexpr.max_index(self.expr) > self.k:
            raise ValueError("expression refers to a z-variable beyond the order")
        params = tuple(complex(p) for p in self.parameters)
        if not params:
            params = (self.domain.anchor,) * (self.k - 1)
        if len(params) != self.k - 1:
            raise ValueError(f"order {self.k} needs {self.k - 1} parameters, got {len(params)}")
        for p in params:
            if not self.domain.contains(p):
                raise ValueError(f"parameter {p!r} is outside the domain")
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "tolerances", self.tolerances.for_order(self.k))

    @classmethod
    def from_text(cls, text: str, k: int, **kw) -> "ProblemSpec":
        return cls(k, fexpr.parse(text, k), **kw)

    @cached_property
    def F(self) -> fexpr.Compiled:
        return fexpr.compile_expr(self.expr, self.k)

    @property
    def anchor(self) -> complex:
        return self.domain.anchor

    def with_cutoff(self, J: float) -> "ProblemSpec":
        return dataclasses.replace(self, cutoff=LeftCutoff(J))

    def strip_sample(self) -> CompactSample:
        return strip_sample(self.strip, self.cutoff, width=float(self.k))

    def vector_sample(self) -> np.ndarray:
        return vector_sample(self.domain.boundary_sample(), self.k)


def estimate_lambda(p: ProblemSpec, strip_sample: CompactSample | None = None,
                    domain_sample: np.ndarray | None = None) -> float:
    """Twice the largest sampled ``|dF/dz_i|`` over ``S_J`` and the domain.

    ``domain_sample`` is an ``(m, k)`` array of z-vectors; by default the
    product of boundary rings, where the modulus of a holomorphic partial
    peaks.
    """
    S = (strip_sample or p.strip_sample()).array()
    Z = p.vector_sample() if domain_sample is None else np.asarray(domain_sample, dtype=complex)
    Z = Z.reshape(-1, p.k)
    d = fexpr.partials_many(p.F, S[:, None], Z[None, :, :])
    return 2.0 * float(np.max(np.abs(d)))


def ensure_contractive(p: ProblemSpec) -> ProblemSpec:
    """Double ``J`` until the Lipschitz estimate drops below the target."""
    target = p.tolerances.lipschitz_target
    q = p
    while True:
        lam = estimate_lambda(q)
        if lam < target:
            return q
        if q.cutoff.J * 2 > MAX_CUTOFF:
            raise HypothesisFailure(
                f"Lipschitz estimate {lam:.6g} stays >= {target:.6g} up to J={q.cutoff.J:g}",
                lam=lam, J=q.cutoff.J)
        q = q.with_cutoff(q.cutoff.J * 2)


def seed_sequence(p: ProblemSpec) -> CompositionSequence:
    F, k, params = p.F, p.k, p.parameters

    def gen(j: int):
        return lambda s, z: F(s - j * k, (z,) + params)

    return CompositionSequence(gen, p.domain, p.cutoff)


def seed_value(p: ProblemSpec, s: complex) -> complex:
    """``y_0(s)``: the infinite composition of ``F(s - jk, z, params)`` over ``z``."""
    tol = p.tolerances
    return compose_adaptive(seed_sequence(p), s, p.anchor, tol.tail_eps, tol.max_trunc)[0]


def far_left_offset(p: ProblemSpec, s0: complex) -> int:
    """Offset past which level values are replaced by the anchor.

    Smallest multiple of ``k`` whose sampled tail sum of
    ``sup |F(s0 - jk, z) - A|`` falls below ``tail_eps``, capped by
    ``far_left_margin``; never less than ``3k``.
    """
    tol = p.tolerances
    j_lim = max(1, int(math.ceil(tol.far_left_margin / p.k)))
    Z = p.vector_sample()
    shifts = s0 - p.k * np.arange(1, j_lim + 1)
    vals = fexpr.evaluate_many(p.F, shifts[:, None], Z[None, :, :])
    rho = np.max(np.abs(vals - p.anchor), axis=1)
    tail = np.cumsum(rho[::-1])[::-1]  # tail[j-1] = sum_{i >= j} rho_i
    ok = np.nonzero(tail < tol.tail_eps)[0]
    m_off = int(ok[0] + 1) * p.k if len(ok) else int(tol.far_left_margin)
    return max(m_off, 3 * p.k)


class LatticeCache:
    """Values ``y_n(s0 - m)`` keyed by ``(n, m)``.

    Inputs requested at offsets beyond ``m_off`` are the anchor by
    convention. Points asked for directly (``value(n, m, direct=True)``) are
    always computed, whatever their offset. Fills are serialized by a lock.
    """

    def __init__(self, p: ProblemSpec, s0: complex, m_off: int | None = None):
        self.p = p
        self.s0 = complex(s0)
        self.m_off = far_left_offset(p, self.s0) if m_off is None else m_off
        self.levels: list[dict[int, complex]] = []
        self.direct: dict[tuple[int, int], complex] = {}
        self.forward: dict[int, complex] = {}
        self.n_used: dict[tuple[int, int], int] = {}
        self._lock = threading.RLock()

    def point(self, m: int) -> complex:
        return self.s0 - m

    def offset_of(self, s: complex, tol: float = 1e-9) -> int | None:
        d = self.s0 - s
        m = round(d.real)
        if abs(d - m) > tol * max(1.0, abs(d)):
            return None
        return m

    def _level(self, n: int) -> dict[int, complex]:
        while len(self.levels) <= n:
            self.levels.append({})
        return self.levels[n]

    def value(self, n: int, m: int, direct: bool = False) -> complex:
        if m > self.m_off:
            if not direct:
                return self.p.anchor
            with self._lock:
                v = self.direct.get((n, m))
                if v is None:
                    v = self.direct[(n, m)] = self._compute(n, m)
                return v
        lvl = self._level(n)
        v = lvl.get(m)
        if v is None:
            with self._lock:
                v = lvl.get(m)
                if v is None:
                    v = lvl[m] = self._compute(n, m)
        return v

    def sequence(self, n: int) -> CompositionSequence:
        """``H_j(s, z) = F(s - jk, z, y_{n-1}(s - jk + 1), ..., y_{n-1}(s - jk + k - 1))``."""
        p = self.p
        if n == 0:
            return seed_sequence(p)
        F, k = p.F, p.k

        def gen(j: int):
            def term(s, z):
                m = self.offset_of(s)
                if m is None:
                    raise ValueError(f"{s!r} is not on the lattice of {self.s0!r}")
                base = m + j * k
                return F(s - j * k, (z,) + tuple(self.value(n - 1, base - i) for i in range(1, k)))
            return term

        return CompositionSequence(gen, p.domain, p.cutoff)

    def _compute(self, n: int, m: int) -> complex:
        tol = self.p.tolerances
        v, used = compose_adaptive(self.sequence(n), self.point(m), self.p.anchor,
                                   tol.tail_eps, tol.max_trunc)
        self.n_used[(n, m)] = used
        return v


def level_value(p: ProblemSpec, n: int, s: complex, cache: LatticeCache) -> complex:
    """``y_n(s)`` for a lattice point ``s = s0 - m``."""
    if n < 0:
        raise ValueError("level must be nonnegative")
    m = cache.offset_of(s)
    if m is None or m < 0:
        raise ValueError(f"{s!r} is not on the lattice s0 - m, m >= 0, of {cache.s0!r}")
    return cache.value(n, m, direct=True)


@dataclass
class SolutionHandle:
    problem: ProblemSpec
    level: int
    cache: LatticeCache
    lambda_est: float
    mu_est: float
    last_diff: float
    error_bound: float
    diffs: list[float] = field(default_factory=list)
    caches: dict = field(default_factory=dict, repr=False)

    @property
    def mu_predicted(self) -> float:
        lam, k = self.lambda_est, self.problem.k
        return (k - 1) * lam / (1 - lam)

    @property
    def ratios(self) -> list[float]:
        return [b / a for a, b in zip(self.diffs, self.diffs[1:]) if a > 0]


def _probe_offsets(p: ProblemSpec) -> range:
    return range(0, 2 * p.k + 1)


def iterate_levels(p: ProblemSpec, cache: LatticeCache) -> tuple[int, list[float]]:
    """Raise the level until the probe-set difference drops below ``iter_eps``."""
    tol = p.tolerances
    diffs: list[float] = []
    streak = 0
    probes = _probe_offsets(p)
    for n in range(1, tol.max_levels + 1):
        cur = [cache.value(n, m, direct=True) for m in probes]
        prev = [cache.value(n - 1, m, direct=True) for m in probes]
        d = max(abs(a - b) for a, b in zip(cur, prev))
        scale = max(abs(v) for v in cur)
        if diffs and diffs[-1] > 64 * np.finfo(float).eps * scale:
            streak = streak + 1 if d >= diffs[-1] else 0
            if streak >= 3:
                raise ContractionViolation(
                    f"level differences failed to shrink for three levels (n={n}, diff={d:.3g})")
        diffs.append(d)
        if d < tol.iter_eps:
            return n, diffs
    raise NoConvergence(f"level difference {diffs[-1]:.3g} still >= {tol.iter_eps:g} "
                        f"after {tol.max_levels} levels")


def measured_mu(diffs: Sequence[float]) -> float:
    ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a > 0]
    return max(ratios, default=0.0)


def solve(p: ProblemSpec, s0: complex) -> SolutionHandle:
    """Converge the level iteration on the lattice through ``s0``.

    ``p`` should already satisfy the contraction target (see
    :func:`ensure_contractive`); ``s0`` must lie in ``S_J``.
    """
    s0 = complex(s0)
    if not p.strip.contains(s0):
        raise OutsideStrip(f"{s0!r} is outside the strip |Im s| < {p.strip.half_height}")
    if not p.cutoff.contains(s0):
        raise ValueError(f"solve needs Re s0 < -J = {-p.cutoff.J}")
    lam = estimate_lambda(p)
    cache = LatticeCache(p, s0)
    level, diffs = iterate_levels(p, cache)
    mu = measured_mu(diffs)
    if mu >= 1:
        raise ContractionViolation(f"measured contraction ratio {mu:.3g} >= 1")
    last = diffs[-1]
    h = SolutionHandle(p, level, cache, lam, mu, last, mu / (1 - mu) * last, diffs)
    h.caches[cache.s0] = cache
    return h
