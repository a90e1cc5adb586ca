"""Poisson mixture distribution: exact pmf/survival by quadrature,
two-stage sampling, tail-ratio diagnostics and tail asymptotics.

Conventions
-----------
The survival function is P(X > n), which equals the mixed integral

    int_0^x0  lam^n e^-lam / n!  *  (1 - F(lam))  d lam

(integration by parts against the Poisson cdf).  All integrands are
evaluated in log space and exponentiated once, so n of several hundred
is routine; "tail exhausted" failures are raised loudly once the
survival mass drops below 1e-280.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from . import mixing
from .mixing import (
    D0E, D0F, D0H, DMinus, DPlus, GammaMix, MixingSpec, ScaledBeta,
    TailClass, UniformMix,
)
from .numerics import QuadratureResult, log_integrate

__all__ = [
    "MixtureModel", "TailRatioCurve", "TailExhaustedError",
    "tail_ratio_limit", "log_pmf_grid",
]

_LOG_FLOOR = math.log(1e-280)


class TailExhaustedError(RuntimeError):
    """Survival mass underflowed; carries the largest n still reliable."""

    def __init__(self, n: int, largest_reliable_n: int):
        super().__init__(
            f"survival underflowed at n={n}; "
            f"largest reliable n is {largest_reliable_n}"
        )
        self.largest_reliable_n = largest_reliable_n


@dataclass(frozen=True)
class TailRatioCurve:
    k: int
    points: tuple
    limit: float


def tail_ratio_limit(tail: TailClass, k: int) -> float:
    """Limit of survival(n+k)/survival(n) as n grows, per tail class."""
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if isinstance(tail, (DPlus, D0H)):
        return 1.0
    if isinstance(tail, D0E):
        return (1.0 + tail.beta) ** (-k)
    if isinstance(tail, (DMinus, D0F)):
        return 0.0
    raise TypeError(f"unknown tail class {tail!r}")


def _kernel_points(n: int, endpoint: float):
    """Breakpoints and scan grid resolving lam^n e^-lam around lam ~ n."""
    s = math.sqrt(n + 1.0)
    offsets = (-12, -8, -5, -3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 5, 8, 12)
    pts = [n + c * s for c in offsets]
    pts.append(n + 12 * s + 40.0)
    hi_cap = min(endpoint, n + 14 * s + 60.0)
    # coverage for density-dominated regions (small n, sharp mixing mode)
    pts.extend(np.geomspace(1e-8, max(1.0, hi_cap), 17))
    pts = sorted({p for p in pts if 0.0 < p < endpoint})
    scan = np.concatenate([
        np.linspace(max(1e-12, n - 14 * s), min(endpoint, n + 14 * s + 60.0), 101),
        np.geomspace(1e-10, max(1.0, hi_cap), 41),
    ])
    scan = scan[(scan > 0) & (scan < endpoint)]
    return pts, scan


@dataclass(frozen=True)
class MixtureModel:
    """Poisson mixture bound to a mixing spec.

    `use_quadrature` forces the integral route even for Gamma mixing,
    where the negative binomial closed form is otherwise used; keeping
    both routes gives an independent correctness witness.
    """

    spec: MixingSpec
    rel_tol: float = 1e-10
    use_quadrature: bool = False
    tail: TailClass = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.rel_tol <= 1e-4:
            raise ValueError(f"rel_tol must be in (0, 1e-4], got {self.rel_tol}")
        object.__setattr__(self, "tail", mixing.classify(self.spec))

    # -- exact evaluation ------------------------------------------------

    def _log_integral(self, n: int, log_weight) -> float:
        endpoint = mixing.support_endpoint(self.spec)
        pts, scan = _kernel_points(n, endpoint)
        lg = math.lgamma(n + 1.0)

        def log_f(lam):
            lam = np.asarray(lam, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = n * np.log(lam) - lam - lg + log_weight(lam)
            return np.where(np.isnan(out), -np.inf, out)

        upper = endpoint if math.isfinite(endpoint) else math.inf
        log_val, _res = log_integrate(
            log_f, 0.0, upper, rel_tol=self.rel_tol,
            points=pts, scan_points=scan,
        )
        return log_val

    def log_pmf(self, n: int) -> float:
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        if not self.use_quadrature:
            if isinstance(self.spec, GammaMix):
                return _nb_log_pmf(self.spec, n)
            if isinstance(self.spec, ScaledBeta):
                return _sb_log_pmf(self.spec, n)
        return self._log_integral(
            n, lambda lam: mixing.log_pdf(self.spec, lam))

    def log_survival(self, n: int) -> float:
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        if not self.use_quadrature:
            if isinstance(self.spec, GammaMix):
                return _nb_log_sf(self.spec, n)
            if isinstance(self.spec, ScaledBeta):
                return _sb_log_sf(self.spec, n)

        def log_w(lam):
            with np.errstate(divide="ignore"):
                return np.log(mixing.survival(self.spec, lam))

        return self._log_integral(n, log_w)

    def pmf(self, n: int) -> float:
        return math.exp(self.log_pmf(n))

    def survival(self, n: int) -> float:
        return math.exp(self.log_survival(n))

    # -- sampling --------------------------------------------------------

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Two-stage draw: lam_i from the mixing law, x_i ~ Poisson(lam_i)."""
        if size < 1:
            raise ValueError(f"size must be >= 1, got {size}")
        lam = mixing.sample(self.spec, rng, size)
        return rng.poisson(lam)

    # -- tail diagnostics ------------------------------------------------

    def tail_ratio(self, n: int, k: int = 1) -> float:
        """survival(n+k)/survival(n) via a log-space difference."""
        if k < 1:
            raise ValueError(f"k must be a positive integer, got {k}")
        ls_n = self.log_survival(n)
        if ls_n < _LOG_FLOOR:
            raise TailExhaustedError(n, self.largest_reliable_n(n))
        ls_nk = self.log_survival(n + k)
        if not math.isfinite(ls_nk):
            return 0.0
        return math.exp(ls_nk - ls_n)

    def largest_reliable_n(self, n_hint: int = 64) -> int:
        """Largest n with survival(n) >= 1e-280, by exponential + binary search."""
        def ok(n):
            return self.log_survival(n) >= _LOG_FLOOR

        if not ok(0):
            raise RuntimeError("survival underflows already at n=0")
        lo = 0
        hi = max(1, n_hint)
        while ok(hi):
            lo = hi
            hi *= 2
            if hi > 10_000_000:
                return lo  # effectively unbounded tail at this floor
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def tail_ratio_curve(self, k: int, n_grid: Sequence[int]) -> TailRatioCurve:
        pts = tuple((int(n), self.tail_ratio(int(n), k)) for n in n_grid)
        return TailRatioCurve(k, pts, tail_ratio_limit(self.tail, k))

    # -- asymptotic approximations --------------------------------------

    def asymptotic_pmf_willmot(self, n: int) -> float:
        """Exponential-tail pmf asymptotic C n^a (1+b)^-(n+a+1).

        Only specs whose density behaves like C x^a e^-bx qualify; of
        the supported families that is the Gamma, with C = rate^shape /
        Gamma(shape), a = shape - 1 and b = rate.
        """
        if not isinstance(self.spec, GammaMix):
            raise ValueError(
                "Willmot asymptotic requires an exponential-tail density; "
                f"got {mixing.family_name(self.spec)}"
            )
        if n < 1:
            raise ValueError("asymptotic defined for n >= 1")
        a = self.spec.alpha - 1.0
        b = self.spec.beta
        log_c = self.spec.alpha * math.log(b) - math.lgamma(self.spec.alpha)
        return math.exp(
            log_c + a * math.log(n) - (n + a + 1.0) * math.log1p(b))

    def _dminus_params(self, n: int):
        if not isinstance(self.tail, DMinus):
            raise ValueError(
                "finite-endpoint asymptotic requires a Weibull-domain "
                f"mixing law; got {mixing.family_name(self.spec)}"
            )
        if n < 1:
            raise ValueError("asymptotic defined for n >= 1")
        alpha, x0 = self.tail.alpha, self.tail.x0
        # slowly varying factor, exact from the mixing cdf
        log_c = math.log(
            mixing.survival(self.spec, x0 * n / (n + 1.0))) + alpha * math.log(n)
        return alpha, x0, log_c

    def asymptotic_survival_dminus(self, n: int) -> float:
        """Survival asymptotic G(a+1) C(n) n^-a x0^(n+1) e^-x0 / (n+1)!.

        Both slowly converging factors are evaluated at finite n rather
        than at their limits: the slowly varying C at the point
        x0*n/(n+1), and the exponential as exp(-x0*n/(n+1)).  Both tend
        to the limiting form but halve the pre-asymptotic bias at
        moderate n.
        """
        alpha, x0, log_c = self._dminus_params(n)
        return math.exp(
            math.lgamma(alpha + 1.0) + log_c - alpha * math.log(n)
            + (n + 1.0) * math.log(x0) - x0 * n / (n + 1.0)
            - math.lgamma(n + 2.0))

    def asymptotic_pmf_dminus(self, n: int) -> float:
        """Pmf asymptotic G(a+1) C(n) n^-a x0^n e^-x0 / n!.

        Same finite-n evaluation of the slow factors as the survival
        variant.
        """
        alpha, x0, log_c = self._dminus_params(n)
        return math.exp(
            math.lgamma(alpha + 1.0) + log_c - alpha * math.log(n)
            + n * math.log(x0) - x0 * n / (n + 1.0) - math.lgamma(n + 1.0))

    # -- export ----------------------------------------------------------

    def export_table(self, n_max: int, path=None) -> str:
        """CSV with columns n, pmf, survival, tail_ratio_k1.

        Returns the table text; also writes it to `path` when given.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "pmf", "survival", "tail_ratio_k1"])
        ls = self.log_survival(0)
        for n in range(n_max + 1):
            ls_next = self.log_survival(n + 1)
            ratio = math.exp(ls_next - ls) if math.isfinite(ls) else math.nan
            w.writerow([
                n, f"{self.pmf(n):.12g}", f"{math.exp(ls):.12g}",
                f"{ratio:.12g}",
            ])
            ls = ls_next
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _nb_log_pmf(spec: GammaMix, n: int) -> float:
    a, b = spec.alpha, spec.beta
    return (math.lgamma(n + a) - math.lgamma(a) - math.lgamma(n + 1.0)
            + a * (math.log(b) - math.log1p(b)) - n * math.log1p(b))


def _sb_log_pmf(spec: ScaledBeta, n: int) -> float:
    """Scaled-Beta mixture pmf without quadrature.

    The mixing integral is a Beta-weighted confluent series; after the
    Kummer transform it becomes a positive, fast-converging sum that
    stays accurate even when the Beta concentrates at the endpoint
    (small second shape parameter), where endpoint quadrature fails.
    """
    a, b, x0 = spec.alpha, spec.beta, spec.x0
    c = n + a + b
    term = 1.0
    total = 1.0
    k = 0
    while True:
        term *= (b + k) * x0 / ((c + k) * (k + 1.0))
        total += term
        k += 1
        if term < 1e-18 * total or k > 10_000:
            break
    return (n * math.log(x0) - math.lgamma(n + 1.0) - x0
            + special.betaln(n + a, b) - special.betaln(a, b)
            + math.log(total))


def _sb_log_sf(spec: ScaledBeta, n: int) -> float:
    """Survival as the tail sum of the series pmf.

    The finite endpoint makes the pmf decay super-exponentially, so the
    sum truncates quickly once past the mode at ~x0.
    """
    logs = []
    best = -math.inf
    m = n + 1
    while True:
        lp = _sb_log_pmf(spec, m)
        logs.append(lp)
        best = max(best, lp)
        if m > spec.x0 + 10.0 * math.sqrt(spec.x0) + 10.0 and lp < best - 60.0:
            break
        if m > n + 100_000:
            break
        m += 1
    arr = np.asarray(logs)
    mx = float(np.max(arr))
    if not math.isfinite(mx):
        return -math.inf
    return mx + math.log(float(np.sum(np.exp(arr - mx))))


def _nb_log_sf(spec: GammaMix, n: int) -> float:
    # P(X > n) = I_{1/(1+b)}(n+1, a) via the beta-function identity
    a, b = spec.alpha, spec.beta
    sf = special.betainc(n + 1.0, a, 1.0 / (1.0 + b))
    if sf <= 0.0:
        return -math.inf
    return math.log(sf)


# -- fast vectorized pmf for likelihood fitting --------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_N_PANELS = 24


def _density_bracket(spec: MixingSpec) -> tuple[float, float]:
    """Interval carrying essentially all mixing-density mass."""
    if isinstance(spec, mixing.Frechet):
        a, b = spec.alpha, spec.beta
        lo = b * math.exp(-math.log(-math.log(1e-12)) / a)
        hi = b * math.exp(-math.log(1e-9) / a)  # -ln q ~ 1e-9 at q=1-1e-9
        return lo, min(hi, 1e15)
    if isinstance(spec, mixing.Lognormal):
        return (math.exp(spec.mu - 8.0 * spec.sigma),
                math.exp(spec.mu + 8.0 * spec.sigma))
    if isinstance(spec, GammaMix):
        return (float(special.gammaincinv(spec.alpha, 1e-12)) / spec.beta,
                float(special.gammainccinv(spec.alpha, 1e-12)) / spec.beta)
    if isinstance(spec, UniformMix):
        return 1e-12, spec.x0
    if isinstance(spec, ScaledBeta):
        q = special.betaincinv(spec.alpha, spec.beta,
                               np.array([1e-12, 1.0 - 1e-12]))
        return float(q[0]) * spec.x0, float(q[1]) * spec.x0
    raise TypeError(f"unknown mixing spec {spec!r}")


def log_pmf_grid(spec: MixingSpec, ns: Sequence[int]) -> np.ndarray:
    """Log pmf at many n simultaneously, tuned for likelihood loops.

    Closed forms for Gamma (negative binomial) and Uniform (Poisson cdf
    identity); a fixed composite Gauss-Legendre rule centred on the
    Poisson kernel otherwise.  Accuracy is ample for optimization
    (~1e-8 relative); the adaptive route in MixtureModel remains the
    reference.
    """
    ns = np.asarray(ns, dtype=float)
    if np.any(ns < 0):
        raise ValueError("counts must be non-negative")
    if isinstance(spec, GammaMix):
        a, b = spec.alpha, spec.beta
        return (special.gammaln(ns + a) - math.lgamma(a)
                - special.gammaln(ns + 1.0)
                + a * (math.log(b) - math.log1p(b)) - ns * math.log1p(b))
    if isinstance(spec, UniformMix):
        with np.errstate(divide="ignore"):
            return np.log(special.gammainc(ns + 1.0, spec.x0)) \
                - math.log(spec.x0)

    endpoint = mixing.support_endpoint(spec)
    s = np.sqrt(ns + 1.0)
    lo = np.maximum(1e-12, ns - 12.0 * s)
    hi = ns + 12.0 * s + 40.0
    if math.isfinite(endpoint):
        hi = np.minimum(hi, endpoint * (1.0 - 1e-12))
        lo = np.minimum(lo, hi * 0.5)
    # kernel-centred edges (N, P+1) unioned with edges resolving the
    # mixing density's own scale; a sharply peaked density (large
    # Frechet shape, tiny lognormal sigma) is otherwise invisible to a
    # rule spaced for the Poisson kernel alone
    frac = np.linspace(0.0, 1.0, _N_PANELS + 1)
    kernel_edges = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    d_lo, d_hi = _density_bracket(spec)
    d_hi = min(d_hi, float(np.max(hi)))
    d_lo = min(max(d_lo, 1e-12), d_hi * 0.5)
    dens_edges = np.geomspace(d_lo, d_hi, 17)
    edges = np.sort(np.concatenate(
        [kernel_edges,
         np.broadcast_to(dens_edges, (ns.size, dens_edges.size))],
        axis=1), axis=1)
    left = edges[:, :-1]
    width = np.diff(edges, axis=1)
    lam = (left[:, :, None]
           + 0.5 * width[:, :, None] * (1.0 + _GL_NODES[None, None, :]))
    with np.errstate(divide="ignore"):
        logw = np.log(0.5 * width)[:, :, None] \
            + np.log(_GL_WEIGHTS)[None, None, :]
    lam_flat = lam.reshape(ns.size, -1)
    logw_flat = logw.reshape(ns.size, -1)
    logw_flat = np.where(np.isfinite(logw_flat), logw_flat, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = (ns[:, None] * np.log(lam_flat) - lam_flat
                - special.gammaln(ns + 1.0)[:, None]
                + mixing.log_pdf(spec, lam_flat) + logw_flat)
    logf = np.where(np.isnan(logf), -np.inf, logf)
    m = np.max(logf, axis=1)
    out = np.full(ns.size, -np.inf)
    good = np.isfinite(m)
    if np.any(good):
        out[good] = m[good] + np.log(
            np.sum(np.exp(logf[good] - m[good][:, None]), axis=1))
    return out
