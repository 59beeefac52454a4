"""Numerical checks of the decay hypothesis and of the constructed solution.

All verdicts are drawn from finite samples: a "pass" means nothing in the
sample contradicts the claim, not that the claim is proven.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import fexpr
from .core import CompactSample, pairwise_spread, strip_sample
from .omega import CompositionSequence, compose_adaptive
from .solver import ProblemSpec, SolutionHandle, seed_sequence

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
SAMPLED_NOTE = "sampled, not proven"

PHI = (1 + math.sqrt(5)) / 2
PSI = (1 - math.sqrt(5)) / 2
_LOG_PHI = math.log(PHI)
_LOG_PSI = complex(math.log(-PSI), math.pi)  # principal branch of log(psi), psi < 0


@dataclass
class DecayVerdict:
    verdict: str
    rho: list[float]
    partial_sums: list[float]
    ratio: float | None
    reason: str
    note: str = SAMPLED_NOTE


def _decay_rho(p: ProblemSpec, j_max: int, strip: CompactSample, Z: np.ndarray) -> np.ndarray:
    S = strip.array()
    shifts = S[None, :] - np.arange(1, j_max + 1)[:, None]
    vals = fexpr.evaluate_many(p.F, shifts[:, :, None], Z[None, None, :, :])
    return np.max(np.abs(vals - p.anchor), axis=(1, 2))


def check_decay(p: ProblemSpec, j_max: int = 32, strip: CompactSample | None = None,
                domain_vectors: np.ndarray | None = None) -> DecayVerdict:
    """Sampled summability test for ``sum_j sup |F(s - j, z) - A|``.

    Pass when the tail ratio ``rho_{j+1}/rho_j`` settles below ``1 - 1e-3``,
    when the partial sums have stopped moving (tail below ``tail_eps``), or
    when the tail follows a power law ``(J + j)^-q`` with ``q > 1.1``. Fail
    when the terms do not shrink at all.
    """
    if j_max < 8:
        raise ValueError("j_max must be at least 8")
    strip = strip or p.strip_sample()
    Z = p.vector_sample() if domain_vectors is None else np.asarray(domain_vectors, complex)
    rho = _decay_rho(p, j_max, strip, Z.reshape(-1, p.k))
    sums = np.cumsum(rho)
    tail_eps = p.tolerances.tail_eps
    half = j_max // 2
    late = rho[half:]

    def verdict(v, ratio, why):
        return DecayVerdict(v, rho.tolist(), sums.tolist(), ratio, why)

    if np.all(late < tail_eps) and late.sum() < tail_eps:
        return verdict(PASS, None, "late terms below tail_eps; partial sums have settled")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = rho[half + 1:] / rho[half:-1]
    ratios = ratios[np.isfinite(ratios)]
    ratio = float(ratios[-1]) if len(ratios) else None
    if len(ratios) and np.all(ratios < 1 - 1e-3) and np.ptp(ratios) < 1e-2:
        return verdict(PASS, ratio, "geometric tail ratio settled below 1")
    if len(ratios) and np.all(ratios >= 1 - 1e-12) and late.min() > tail_eps:
        return verdict(FAIL, ratio, "terms do not shrink; the series diverges")
    # Power-law tail: fit log rho against log of the distance from the sample's right edge.
    dist = p.cutoff.J + np.arange(1, j_max + 1)
    x, y = np.log(dist[half:]), np.log(np.maximum(late, 1e-300))
    if np.all(late > 0):
        slope = float(np.polyfit(x, y, 1)[0])
        if -slope > 1.1 and np.all(np.diff(late) <= 0):
            return verdict(PASS, ratio, f"power-law tail with exponent {-slope:.3f} > 1")
    return verdict(INCONCLUSIVE, ratio, "tail behaviour not settled within j_max")


def residual_of(y: Callable[[complex], complex], p: ProblemSpec, s: complex) -> float:
    """``|y(s+k) - F(s, y(s), ..., y(s+k-1))|`` for any callable ``y``."""
    s = complex(s)
    args = [y(s + i) for i in range(p.k)]
    return abs(y(s + p.k) - p.F(s, args))


def residual(h: SolutionHandle, s: complex) -> float:
    from .continuation import evaluate
    return residual_of(lambda t: evaluate(h, t), h.problem, s)


def binet(s: complex) -> complex:
    """Binet's formula with principal branches, ``log psi = ln|psi| + i pi``."""
    s = complex(s)
    return (cmath.exp(s * _LOG_PHI) - cmath.exp(s * _LOG_PSI)) / (PHI - PSI)


def check_z_independence(p: ProblemSpec, s: complex, starts: Sequence[complex],
                         seq: CompositionSequence | None = None) -> float:
    """Spread of the composition limit across starting values (seed sequence by default)."""
    if len(starts) < 2:
        raise ValueError("need at least two starting values")
    seq = seq or seed_sequence(p)
    tol = p.tolerances
    vals = [compose_adaptive(seq, complex(s), complex(z), tol.tail_eps, tol.max_trunc)[0]
            for z in starts]
    return pairwise_spread(vals)


@dataclass
class AsymptoticReport:
    points: list[float]
    ratios: list[complex | None]
    spread_last: float | None


def default_model(p: ProblemSpec) -> Callable[[complex], complex]:
    """One-term expansion: set every unknown to the anchor, ``y(s) ~ F(s-k, A, ..., A)``."""
    args = [p.anchor] * p.k
    return lambda s: p.F(s - p.k, args)


def check_asymptotics(h: SolutionHandle, re_points: Iterable[float],
                      model: fexpr.Expr | Callable[[complex], complex] | None = None
                      ) -> AsymptoticReport:
    """Ratios ``y(r)/model(r)`` along the real axis."""
    from .continuation import evaluate

    p = h.problem
    if model is None:
        f = default_model(p)
    elif isinstance(model, fexpr.Expr):
        compiled = fexpr.compile_expr(model, p.k)
        f = lambda s: compiled(s, [0j] * p.k)
    else:
        f = model
    pts = [float(r) for r in re_points]
    ratios: list[complex | None] = []
    for r in pts:
        m = complex(f(complex(r, 0)))
        ratios.append(None if m == 0 else evaluate(h, complex(r, 0)) / m)
    tail = [r for r in ratios[-3:] if r is not None]
    spread = pairwise_spread(tail) if len(tail) >= 2 else None
    return AsymptoticReport(pts, ratios, spread)


def holomorphy_probe(y: SolutionHandle | Callable[[complex], complex], center: complex,
                     radius: float, m_points: int = 128) -> float:
    """``|trapezoid sum of the contour integral of y over |s - center| = radius|``."""
    if m_points < 64:
        raise ValueError("use at least 64 quadrature points")
    if isinstance(y, SolutionHandle):
        from .continuation import evaluate
        h = y
        y = lambda s: evaluate(h, s)
    total = 0j
    for j in range(m_points):
        w = cmath.exp(2j * math.pi * j / m_points)
        total += y(center + radius * w) * (1j * radius * w)
    return abs(total * (2 * math.pi / m_points))


@dataclass
class VerificationReport:
    hypothesis: DecayVerdict
    residual_stats: dict | None = None
    z_independence: dict | None = None
    contraction: dict | None = None
    asymptotics: dict | None = None
    holomorphy: dict | None = None
    note: str = SAMPLED_NOTE

    def to_dict(self) -> dict:
        return asdict(self)


def residual_probe_points(h: SolutionHandle) -> list[complex]:
    p = h.problem
    J, a = p.cutoff.J, p.strip.half_height
    res = [-J - 0.5 * t for t in range(11)]
    ims = [0.0, 0.5 * a, -0.5 * a]
    return [complex(x, y) for y in ims for x in res]


def verify_solution(h: SolutionHandle, j_max: int = 32,
                    model: fexpr.Expr | None = None) -> VerificationReport:
    """Run every check against a converged handle."""
    p = h.problem
    tol = p.tolerances
    J = p.cutoff.J
    report = VerificationReport(check_decay(p, j_max))

    res = [residual(h, s) for s in residual_probe_points(h)]
    report.residual_stats = {
        "max": max(res), "mean": sum(res) / len(res), "points": len(res),
        "tolerance": tol.residual_tol,
        "verdict": PASS if max(res) < tol.residual_tol else FAIL,
    }

    s_probe = complex(-J - 1, 0)
    r = p.domain.boundary_sample().points
    a = p.anchor
    starts = [a] + [a + 0.5 * (z - a) for z in (r[0], r[len(r) // 3])]
    spread = check_z_independence(p, s_probe, starts)
    report.z_independence = {"s": [s_probe.real, s_probe.imag], "spread": spread,
                             "verdict": PASS if spread < 100 * tol.tail_eps else FAIL}

    mu_pred = h.mu_predicted
    report.contraction = {
        "lambda": h.lambda_est, "mu_predicted": mu_pred, "mu_measured": h.mu_est,
        "levels": h.level, "error_bound": h.error_bound,
        "verdict": PASS if h.mu_est <= mu_pred + 0.1 and h.mu_est < 1 else FAIL,
    }

    pts = [-J - 2.0 * t for t in range(1, 6)]
    asym = check_asymptotics(h, pts, model)
    finite = [q for q in asym.ratios if q is not None]
    report.asymptotics = {
        "model": str(model) if model is not None else "F(s-k, A, ..., A)",
        "re_points": asym.points,
        "ratios": [None if q is None else [q.real, q.imag] for q in asym.ratios],
        "spread_last": asym.spread_last,
        "verdict": (INCONCLUSIVE if not finite or asym.spread_last is None
                    else PASS if abs(finite[-1] - 1) < 0.05 else INCONCLUSIVE),
    }

    center = complex(-J - 2, 0)
    radius = min(0.25, 0.5 * p.strip.half_height)
    defect = holomorphy_probe(h, center, radius)
    report.holomorphy = {"center": [center.real, center.imag], "radius": radius,
                         "defect": defect, "verdict": PASS if defect < 1e-8 else FAIL}
    return report
