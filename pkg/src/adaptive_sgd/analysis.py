"""Numerical checks of the variance bounds, descent envelopes and rate lemmas."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, OracleUnavailable
from .hilbert import InnerProductOperator, Point, dual_norm_sq, dual_pair
from .sop import ParetoSop, QuadraticAtomsSop, Sop, monte_carlo_moments

__all__ = [
    "RateFit",
    "BoundReport",
    "EnvelopeWarning",
    "v1_rotation_closed_form",
    "rotation_witness_probe",
    "pareto_witness_probe",
    "pareto_ratio_closed_form",
    "pareto_ratio_monte_carlo",
    "v1_empirical",
    "make_probes",
    "lemma1_constants",
    "lemma1_check",
    "adapted_bound_check",
    "descent_envelope",
    "theorem3_envelopes",
    "contraction_factor",
    "lemma_2log2_check",
    "lemma_2log2_sweep",
    "harmonic_k0",
    "harmonic_lemma_check",
    "rate_fit",
]

LN2 = math.log(2.0)


class EnvelopeWarning(UserWarning):
    """An envelope was evaluated outside the hypotheses that make it a bound."""


# --------------------------------------------------------------------------
# blow-up of the variance constant


def v1_rotation_closed_form(mu: float) -> float:
    """(1 - mu)^3 / (2 mu (2 - mu)^2): the V1 lower bound forced by the rotation pair."""
    if not 0 < mu <= 0.5:
        raise ContractError(f"mu must lie in (0, 1/2], got {mu}")
    return (1.0 - mu) ** 3 / (2.0 * mu * (2.0 - mu) ** 2)


def rotation_witness_probe(mu: float, V0: float = 1.0) -> Point:
    """w = s (1/mu, 0) with s chosen so that the variance there equals 2 V0.

    The variance along this ray is s^2 (1 - mu)^3 / mu and the mean gradient
    norm is s^2 (2 - mu)^2, so (Var - V0)/||F'||^2 equals the closed form.
    """
    if not 0 < mu <= 0.5:
        raise ContractError(f"mu must lie in (0, 1/2], got {mu}")
    s = math.sqrt(2.0 * V0 * mu / (1.0 - mu) ** 3)
    return Point(np.array([s / mu, 0.0]))


def pareto_witness_probe(sop: ParetoSop, V0: float = 1.0) -> Point:
    """w = (s, 0) with Var(xi) s^2 = 2 V0."""
    return Point(np.array([math.sqrt(2.0 * V0 / sop.xi_variance), 0.0]))


def pareto_ratio_closed_form(eps: float) -> float:
    """(Var - V0)/||F'||^2 at the Pareto probe: Var(xi) / (2 E[xi]^2) = 1/(2 eps (2 + eps))."""
    if not eps > 0:
        raise ContractError("eps must be positive")
    return 1.0 / (2.0 * eps * (2.0 + eps))


def pareto_ratio_monte_carlo(sop: ParetoSop, V0: float = 1.0, n_samples: int = 10**7, seed: int = 0):
    """Monte-Carlo version of the Pareto probe ratio; returns (ratio, variance, stderr).

    For shape close to 2 the fourth moment of xi is infinite, so the sample
    variance converges slowly and is typically far below its expectation.
    """
    w = pareto_witness_probe(sop, V0)
    mc = monte_carlo_moments(sop, w, n_samples, np.random.default_rng(np.random.SeedSequence([seed, 0x9A])),
                             chunk=1 << 16)
    grad_sq = dual_norm_sq(InnerProductOperator.identity(2), sop.mean_derivative(w))
    return (mc.variance - V0) / grad_sq, mc.variance, mc.variance_stderr


def v1_empirical(sop: Sop, V0: float, probe_points, H: InnerProductOperator | None = None) -> float:
    """sup over probes with Var > V0 of (Var - V0) / ||F'(w)||^2; -inf if none qualifies."""
    H = H or InnerProductOperator.identity(sop.n)
    best = -math.inf
    for w in probe_points:
        var = sop.exact_variance(w, H)
        if var <= V0:
            continue
        grad_sq = dual_norm_sq(H, sop.mean_derivative(w))
        if grad_sq <= 0:
            raise ContractError("probe point is a stationary point of the mean")
        best = max(best, (var - V0) / grad_sq)
    return best


# --------------------------------------------------------------------------
# variance bounds at probe points


def make_probes(centre: Point, n_probes: int = 100, radii=(1e-2, 1e2), seed: int = 0):
    """Points centre + r u with log-spaced radii and seeded random unit directions."""
    gen = np.random.default_rng(np.random.SeedSequence([seed, 0x9B]))
    n = centre.dim
    rs = np.logspace(math.log10(radii[0]), math.log10(radii[1]), n_probes)
    out = []
    for r in rs:
        u = gen.standard_normal(n)
        out.append(Point(centre.entries + r * u / np.linalg.norm(u)))
    return out


def lemma1_constants(sop: Sop, variant: str = "expected", n_probe: int = 1000, seed=None,
                     H: InnerProductOperator | None = None):
    """(V0, V1) for Var <= V0 + V1 ||F'||^2 from per-sample smoothness.

    ``variant="expected"`` uses V1 = 2 E[L_xi^2]/mu^2 - 1,
    ``variant="uniform"`` uses V1 = 2 Lmax/mu - 1; both with V0 = 2 E||f'(w*)||^2.
    """
    if variant not in ("expected", "uniform"):
        raise ContractError(f"unknown variant {variant!r}")
    mu = sop.strong_convexity
    m2, lmax = sop.smoothness_moments(n_probe, seed)
    V0 = 2.0 * sop.noise_at_minimizer(H)
    if variant == "expected":
        V1 = 2.0 * m2 / mu**2 - 1.0
    else:
        V1 = 2.0 * lmax / mu - 1.0
    return V0, V1


@dataclass(frozen=True)
class BoundReport:
    """Outcome of a bound check over probe points.

    ``observed``/``bound`` are per probe; ``stderr`` is zero for exact oracles.
    A probe passes when observed - n_se * stderr <= bound.
    """

    name: str
    observed: np.ndarray
    bound: np.ndarray
    stderr: np.ndarray
    n_se: float

    @property
    def passed_mask(self):
        return self.observed - self.n_se * self.stderr <= self.bound * (1 + 1e-12) + 1e-300

    @property
    def passed(self) -> bool:
        return bool(self.passed_mask.all())

    @property
    def n_failed(self) -> int:
        return int((~self.passed_mask).sum())

    @property
    def min_margin(self) -> float:
        """Smallest (bound - observed), the slack at the tightest probe."""
        return float(np.min(self.bound - self.observed))

    @property
    def worst(self):
        i = int(np.argmin(self.bound - self.observed))
        return float(self.bound[i]), float(self.observed[i])


def lemma1_check(sop: Sop, probes, variant: str = "expected", H=None, n_probe: int = 1000) -> BoundReport:
    """Exact variance against V0 + V1 ||F'(w)||^2 at every probe."""
    H = H or InnerProductOperator.identity(sop.n)
    V0, V1 = lemma1_constants(sop, variant, n_probe, H=H)
    obs, bnd = [], []
    for w in probes:
        obs.append(sop.exact_variance(w, H))
        bnd.append(V0 + V1 * dual_norm_sq(H, sop.mean_derivative(w)))
    obs = np.array(obs)
    return BoundReport(f"lemma1-{variant}", obs, np.array(bnd), np.zeros_like(obs), 0.0)


def _second_moment(sop, w, H, n_samples, gen):
    if isinstance(sop, QuadraticAtomsSop):
        return sop.second_moment(w, H), 0.0
    mc = monte_carlo_moments(sop, w, n_samples, gen, H)
    return mc.second_moment, mc.second_moment_stderr


def adapted_bound_check(sop: Sop, probes, n_samples: int = 10**5, seed: int = 0, n_se: float = 5.0,
                        H: InnerProductOperator | None = None, lmax: float | None = None):
    """E||f'(w)||^2 <= 4 Lmax D_w + 2 V0 and <= 4 Lmax <F'(w), w - w*> + 2 V0.

    V0 = E||f'(w*)||^2. Expectations are exact for finite atom families and
    Monte-Carlo otherwise (pass within ``n_se`` standard errors).
    Returns the two reports (gap form, pairing form).
    """
    H = H or InnerProductOperator.identity(sop.n)
    w_star = sop.minimizer()
    f_star = sop.mean_value(w_star)
    V0 = sop.noise_at_minimizer(H)
    if lmax is None:
        lmax = sop.smoothness_moments()[1]
    gen = np.random.default_rng(np.random.SeedSequence([seed, 0x9C]))
    obs, se, b_gap, b_pair = [], [], [], []
    for w in probes:
        m2, s = _second_moment(sop, w, H, n_samples, gen)
        obs.append(m2)
        se.append(s)
        b_gap.append(4.0 * lmax * (sop.mean_value(w) - f_star) + 2.0 * V0)
        b_pair.append(4.0 * lmax * dual_pair(sop.mean_derivative(w), w - w_star) + 2.0 * V0)
    obs, se = np.array(obs), np.array(se)
    return (
        BoundReport("adapted-gap", obs, np.array(b_gap), se, n_se),
        BoundReport("adapted-pairing", obs, np.array(b_pair), se, n_se),
    )


# --------------------------------------------------------------------------
# envelopes


def descent_envelope(mu, alpha, V0, dist0_sq, k, Lmax=None):
    """(1 - mu alpha)^k dist0_sq + 2 alpha V0 / mu (vectorised over k).

    The bound holds for 0 < alpha <= 1/(2 Lmax); with ``Lmax`` given, a step
    outside that range triggers an :class:`EnvelopeWarning`.
    """
    if not mu > 0:
        raise ContractError("mu must be positive")
    if Lmax is not None and not 0 < alpha <= 1.0 / (2.0 * Lmax) * (1 + 1e-12):
        warnings.warn(f"alpha={alpha:g} outside (0, 1/(2 Lmax)]", EnvelopeWarning, stacklevel=2)
    k = np.asarray(k, dtype=np.float64)
    out = (1.0 - mu * alpha) ** k * dist0_sq + 2.0 * alpha * V0 / mu
    return float(out) if out.ndim == 0 else out


def contraction_factor(mu, L, Lmax):
    """theta = 1 - mu^2 / (2 L Lmax)."""
    return 1.0 - mu * mu / (2.0 * L * Lmax)


def theorem3_envelopes(mu, L, Lmax, C, D0, k, k0=0):
    """(harmonic, linear) bounds on E[D_k]: (L/mu^2) C/(k - k0) and theta^k D0.

    The harmonic bound is +inf for k <= k0.
    """
    k = np.asarray(k, dtype=np.float64)
    with np.errstate(divide="ignore"):
        harmonic = np.where(k > k0, (L / mu**2) * C / np.maximum(k - k0, 1e-300), np.inf)
    linear = contraction_factor(mu, L, Lmax) ** k * D0
    if k.ndim == 0:
        return float(harmonic), float(linear)
    return harmonic, linear


# --------------------------------------------------------------------------
# technical lemmas


def lemma_2log2_sweep(K: int, rtol: float = 1e-12) -> np.ndarray:
    """Boolean array: (1/k) exp(-2 ln2/(k+1)) <= 1/(k+1) for k = 1..K."""
    if K < 1:
        raise ContractError("K must be >= 1")
    k = np.arange(1, K + 1, dtype=np.float64)
    lhs = np.exp(-2.0 * LN2 / (k + 1.0)) / k
    return lhs <= (1.0 / (k + 1.0)) * (1.0 + rtol)


def lemma_2log2_check(k: int, rtol: float = 1e-12) -> bool:
    """(1/k) exp(-2 ln2/(k+1)) <= 1/(k+1); equality holds at k = 1."""
    if k < 1:
        raise ContractError("k must be >= 1")
    return math.exp(-2.0 * LN2 / (k + 1)) / k <= (1.0 / (k + 1)) * (1.0 + rtol)


def harmonic_k0(c: float, d0: float) -> int:
    """floor(log(c d0 / (2 ln2)) / log 4), clamped at 0."""
    x = c * d0 / (2.0 * LN2)
    if x <= 1.0:
        return 0
    return max(0, math.floor(math.log(x) / math.log(4.0)))


def harmonic_lemma_check(c: float, d0: float, K: int, return_trajectory: bool = False):
    """Run d_{k+1} = d_k exp(-c d_k) and test d_k <= 2 ln2 / (c (k - k0)) for k0 < k <= K."""
    if not (c > 0 and d0 > 0):
        raise ContractError("c and d0 must be positive")
    d = np.empty(K + 1)
    d[0] = d0
    x = d0
    for k in range(K):
        x = x * math.exp(-c * x)
        d[k + 1] = x
    k0 = harmonic_k0(c, d0)
    ks = np.arange(k0 + 1, K + 1)
    ok = bool(np.all(d[ks] <= 2.0 * LN2 / (c * (ks - k0))))
    if return_trajectory:
        return ok, k0, d
    return ok


# --------------------------------------------------------------------------
# rate fits


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    axes: str


def rate_fit(k, values, window=None, axes: str = "loglog") -> RateFit:
    """Least-squares line through (log k, log v) or (k, log v) in the window.

    Natural logarithms; on semilog axes the slope is log of the per-step factor.
    """
    if axes not in ("loglog", "semilog"):
        raise ContractError(f"axes must be 'loglog' or 'semilog', got {axes!r}")
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if k.shape != v.shape:
        raise ContractError("k and values must have equal length")
    if window is None:
        window = (float(k.min()), float(k.max()))
    lo, hi = window
    if not lo < hi:
        raise ContractError(f"empty window {window}")
    m = (k >= lo) & (k <= hi)
    k, v = k[m], v[m]
    if k.size < 10:
        raise ContractError(f"need at least 10 points in the window, got {k.size}")
    if not np.all(v > 0) or (axes == "loglog" and not np.all(k > 0)):
        raise ContractError("log axes need positive data")
    x = np.log(k) if axes == "loglog" else k
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, (lo, hi), axes)
