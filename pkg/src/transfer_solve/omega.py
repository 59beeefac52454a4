"""Finite and adaptively truncated infinite compositions.

``compose_finite(seq, a, b, s, z)`` is ``H_a(s, H_{a+1}(s, ... H_b(s, z)))``,
evaluated inner to outer so the Python stack depth stays constant.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Callable, Iterable

from .core import (CompactSample, DomainEscape, DomainSpec, LeftCutoff,
                   TruncationLimit, check_finite)

Term = Callable[[complex, complex], complex]

# Directions used to probe the disk of radius rho_{n+1} around the anchor.
_TAIL_PROBES = tuple(cmath.exp(2j * math.pi * m / 8) for m in range(8))


@dataclass(frozen=True)
class CompositionSequence:
    """Indexed family ``H_j(s, z)``, ``j >= 1``, mapping into ``domain``."""

    generator: Callable[[int], Term]
    domain: DomainSpec
    cutoff: LeftCutoff | None = None
    check_domain: bool = True
    rho_sample: CompactSample | None = field(default=None, compare=False)

    @property
    def anchor(self) -> complex:
        return self.domain.anchor

    def term(self, j: int) -> Term:
        if j < 1:
            raise ValueError("composition indices start at 1")
        return self.generator(j)

    def boundary(self) -> CompactSample:
        if self.rho_sample is not None:
            return self.rho_sample
        return self.domain.boundary_sample()


@dataclass(frozen=True)
class TailEstimate:
    rho: tuple[float, ...]
    partial_sums: tuple[float, ...]

    @classmethod
    def from_rho(cls, rho: Iterable[float]) -> "TailEstimate":
        rho = tuple(rho)
        return cls(rho, tuple(accumulate(rho)))


def _checked(seq: CompositionSequence, v: complex, j: int, s: complex) -> complex:
    check_finite(v, f"H_{j}(s={s!r})")
    if seq.check_domain and not seq.domain.contains(v):
        raise DomainEscape(f"H_{j} left the domain at s={s!r}: value {v!r}", v)
    return v


def compose_finite(seq: CompositionSequence, a: int, b: int, s: complex, z: complex) -> complex:
    if not 1 <= a <= b:
        raise ValueError(f"need 1 <= a <= b, got a={a}, b={b}")
    if seq.check_domain and not seq.domain.contains(z):
        raise DomainEscape(f"start value {z!r} is outside the domain", z)
    v = z
    for j in range(b, a - 1, -1):
        v = _checked(seq, complex(seq.term(j)(s, v)), j, s)
    return v


def estimate_rho(seq: CompositionSequence, j: int, strip_sample: Iterable[complex],
                 domain_sample: Iterable[complex]) -> float:
    """Sampled ``sup |H_j(s, z) - A|``."""
    h = seq.term(j)
    a = seq.anchor
    zs = list(domain_sample)
    if not zs:
        raise ValueError("domain sample is empty")
    best = 0.0
    for s in strip_sample:
        for z in zs:
            v = check_finite(complex(h(s, z)), f"H_{j}(s={s!r}, z={z!r})")
            best = max(best, abs(v - a))
    return best


def tail_estimate(seq: CompositionSequence, j_max: int, strip_sample: CompactSample,
                  domain_sample: CompactSample) -> TailEstimate:
    return TailEstimate.from_rho(estimate_rho(seq, j, strip_sample, domain_sample)
                                 for j in range(1, j_max + 1))


def _tail_spread(seq: CompositionSequence, n: int, s: complex, value: complex, rho: float) -> float:
    """How far ``phi_{1,n}`` moves over the disk the tail is confined to.

    The tail bound puts ``phi_{n+1,inf}(z)`` within ``rho_{n+1}`` of the
    anchor, so the truncation error is at most the spread of ``phi_{1,n}``
    over that disk (sampled on its rim and centre).
    """
    a = seq.anchor
    probes = [a] + [a + rho * d for d in _TAIL_PROBES]
    if any(not seq.domain.contains(t) for t in probes):
        return math.inf
    return max(abs(compose_finite(seq, 1, n, s, t) - value) for t in probes)


def compose_adaptive(seq: CompositionSequence, s: complex, z: complex, eps: float,
                     n_max: int) -> tuple[complex, int]:
    """Truncate the infinite composition at the first ``n`` passing both tests.

    (i)  ``|phi_{1,n}(z) - phi_{1,n-1}(z)| < eps``, with the empty composition
         taken to sit at the anchor for ``n = 1``;
    (ii) ``rho_{n+1} < eps``, or failing that, the spread of ``phi_{1,n}``
         over the disk ``|t - A| <= rho_{n+1}`` is below ``eps``.

    Returns ``(phi_{1,n}(z), n)``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    prev = seq.anchor
    boundary = seq.boundary()
    for n in range(1, n_max + 1):
        cur = compose_finite(seq, 1, n, s, z)
        if abs(cur - prev) < eps:
            rho = estimate_rho(seq, n + 1, (s,), boundary)
            if rho < eps or _tail_spread(seq, n, s, cur, rho) < eps:
                return cur, n
        prev = cur
    raise TruncationLimit(f"no truncation depth <= {n_max} met eps={eps:g} at s={s!r}")
