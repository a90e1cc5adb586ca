"""Shared numerical kernels: special functions, log-space arithmetic and
adaptive quadrature.

Everything here is pure and stateless, so concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuadratureError",
    "QuadratureResult",
    "log_gamma",
    "log_sum_exp",
    "integrate_adaptive",
    "log_integrate",
    "empirical_quantile",
    "chi2_1_sf",
]


class QuadratureError(RuntimeError):
    """Raised when adaptive subdivision exhausts its panel budget."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.abs_error_estimate < 0:
            raise ValueError("abs_error_estimate must be >= 0")
        if self.evaluations < 1:
            raise ValueError("evaluations must be >= 1")


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0."""
    if x <= 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def log_sum_exp(values: Sequence[float]) -> float:
    """ln(sum(exp(v))) computed without overflow."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("log_sum_exp of an empty sequence")
    m = np.max(v)
    if not np.isfinite(m):
        # all -inf -> -inf; a +inf dominates
        return float(m)
    return float(m + np.log(np.sum(np.exp(v - m))))


# 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0,
])
_WGK = np.array([
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278,
])
_WG = np.array([
    0.1294849661688697, 0.2797053914892767,
    0.3818300505051189, 0.4179591836734694,
])

# full node/weight vectors on [-1, 1], ascending
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros_like(_KW)
_GW[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])

_ABS_FLOOR = 1e-300
_PANEL_BUDGET = 10_000


def _kronrod_panel(f, a: float, b: float):
    """Return (k15, err, evals) for one panel; f must accept ndarray."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    k15 = half * float(np.dot(_KW, fx))
    g7 = half * float(np.dot(_GW, fx))
    err = abs(k15 - g7)
    # QUADPACK-style sharpened estimate
    if err > 0:
        resasc = half * float(np.dot(_KW, np.abs(fx - k15 / (b - a))))
        if resasc > 0:
            err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return k15, err, fx.size


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    points: Sequence[float] | None = None,
) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod integration of f on (a, b).

    b may be +inf; the integral is then mapped onto (0, 1) with the
    substitution x = a + t/(1-t).  `points` are optional interior
    breakpoints seeding the initial subdivision; they are essential when
    the integrand is sharply peaked, since a single coarse panel can
    otherwise miss the peak entirely.

    Raises QuadratureError once the subdivision budget (10^4 panels) is
    exhausted without meeting max(rel_tol * |value|, 1e-300).
    """
    if not a < b:
        raise ValueError(f"need a < b, got ({a}, {b})")
    if math.isinf(b):
        base = a

        def g(t):
            t = np.asarray(t, dtype=float)
            u = 1.0 - t
            return np.asarray(f(base + t / u), dtype=float) / (u * u)

        inner = None
        if points is not None:
            pts = [(p - base) / (1.0 + (p - base)) for p in points
                   if p > base and math.isfinite(p)]
            inner = pts
        return _adapt(g, 0.0, 1.0, rel_tol, inner)
    inner = None
    if points is not None:
        inner = [p for p in points if a < p < b]
    return _adapt(f, a, b, rel_tol, inner)


def _adapt(f, a, b, rel_tol, points):
    import heapq

    edges = sorted(set([a, b] + (list(points) if points else [])))
    heap = []  # (-err, lo, hi, val)
    total = 0.0
    total_err = 0.0
    evals = 0
    n_panels = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err, ne = _kronrod_panel(f, lo, hi)
        evals += ne
        n_panels += 1
        total += val
        total_err += err
        heapq.heappush(heap, (-err, lo, hi, val))

    while total_err > max(rel_tol * abs(total), _ABS_FLOOR):
        if n_panels >= _PANEL_BUDGET:
            raise QuadratureError(
                f"quadrature did not converge within {_PANEL_BUDGET} panels "
                f"(value~{total:.6g}, error~{total_err:.3g})"
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1, n1 = _kronrod_panel(f, lo, mid)
        v2, e2, n2 = _kronrod_panel(f, mid, hi)
        evals += n1 + n2
        n_panels += 1
        total += v1 + v2 - val
        total_err += e1 + e2 - (-neg_err)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))

    return QuadratureResult(total, total_err, evals)


def log_integrate(
    log_f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    points: Sequence[float] | None = None,
    scan_points: Sequence[float] | None = None,
) -> tuple[float, QuadratureResult]:
    """Integrate exp(log_f) on (a, b) entirely in log space.

    Returns (log_value, result-in-shifted-units).  The integrand is first
    scanned on `scan_points` (plus `points`) to locate its rough maximum;
    the shift keeps the exponentiated integrand within double range even
    when log_f itself is far below -745.  log_value is -inf for an
    integrand that is zero everywhere on the scan.
    """
    scan = []
    if scan_points is not None:
        scan.extend(p for p in scan_points if a < p < b or (math.isinf(b) and p > a))
    if points is not None:
        scan.extend(p for p in points if a < p < b or (math.isinf(b) and p > a))
    if not scan:
        hi = b if math.isfinite(b) else a + 1e6
        scan = list(np.linspace(a, hi, 513)[1:-1])
    vals = np.asarray(log_f(np.asarray(scan, dtype=float)), dtype=float)
    shift = float(np.max(vals))
    if not np.isfinite(shift):
        return -math.inf, QuadratureResult(0.0, 0.0, len(scan))

    def f(x):
        lf = np.asarray(log_f(x), dtype=float)
        return np.exp(np.minimum(lf - shift, 700.0))

    res = integrate_adaptive(f, a, b, rel_tol, points=points)
    if res.value <= 0:
        return -math.inf, res
    return shift + math.log(res.value), res


def empirical_quantile(sample: Sequence[float], p: float) -> float:
    """Type-1 empirical quantile: the order statistic of rank ceil(n*p).

    Left-continuous inverse of the ecdf, so the result is always an
    element of the sample (matters for discrete data with ties).
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("empirical_quantile of an empty sample")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0,1), got {p}")
    rank = math.ceil(x.size * p)
    rank = min(max(rank, 1), x.size)
    return float(np.sort(x)[rank - 1])


def chi2_1_sf(x: float) -> float:
    """Survival function of chi-square with 1 df: P(Z^2 > x) = erfc(sqrt(x/2))."""
    if x < 0:
        raise ValueError(f"chi2_1_sf requires x >= 0, got {x}")
    return math.erfc(math.sqrt(0.5 * x))
