"""Adaptive step size from the smoothed estimates, plus safeguards.

The proposed step is ``(g - max(var, 0)) / (L g)`` in the local phase and
``1 / L`` in the global phase, smoothed and clamped. Rejected steps trigger a
stochastic line search on the next iteration.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import ContractError, LineSearchError
from .estimators import SmoothedScalar, discount_factor, exp_smooth
from .hilbert import InnerProductOperator, Point, axpy, dual_pair, riesz_inverse
from .sop import Sample, SampleStream, Sop

__all__ = [
    "Phase",
    "PhasePolicy",
    "Limits",
    "ControllerState",
    "LineSearchResult",
    "raw_step",
    "propose_step",
    "line_search",
    "accept_step",
    "phase_of",
    "MAX_SHRINKS",
]

MAX_SHRINKS = 60


class Phase(str, enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class PhasePolicy:
    """Fraction of the iteration budget spent in the global phase."""

    switch_fraction: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.switch_fraction <= 1.0:
            raise ContractError(f"switch_fraction must lie in [0, 1], got {self.switch_fraction}")


def phase_of(k: int, budget: int, policy: PhasePolicy) -> Phase:
    if budget <= 0:
        raise ContractError("budget must be positive")
    return Phase.GLOBAL if k < policy.switch_fraction * budget else Phase.LOCAL


@dataclass(frozen=True)
class Limits:
    alpha_min: float = 1e-12
    alpha_max: float = 1e6
    L_min: float = 1e-12
    L_max: float = 1e12

    def __post_init__(self):
        if not (0 < self.alpha_min <= self.alpha_max and 0 < self.L_min <= self.L_max):
            raise ContractError(f"invalid limits {self}")

    def clamp_alpha(self, a):
        return min(max(a, self.alpha_min), self.alpha_max)

    def clamp_L(self, L):
        return min(max(L, self.L_min), self.L_max)


@dataclass
class ControllerState:
    L: SmoothedScalar
    var: SmoothedScalar
    g: SmoothedScalar
    alpha: SmoothedScalar
    k: int = 0
    phase: Phase = Phase.LOCAL
    line_search_pending: bool = False
    last_alpha: float = math.nan
    limits: Limits = field(default_factory=Limits)
    smooth_alpha: bool = True

    @classmethod
    def initial(cls, alpha0, g0, eta=0.7, limits=None, smooth_alpha=True):
        """State after the initial line search: L = 1/alpha0, var = 0, g = g0."""
        limits = limits or Limits()
        alpha0 = limits.clamp_alpha(alpha0)
        return cls(
            L=SmoothedScalar(limits.clamp_L(1.0 / alpha0), eta),
            var=SmoothedScalar(0.0, eta),
            g=SmoothedScalar(g0, eta),
            alpha=SmoothedScalar(alpha0, eta),
            limits=limits,
            smooth_alpha=smooth_alpha,
            last_alpha=alpha0,
        )


def raw_step(L: float, var: float, g: float, phase: Phase = Phase.LOCAL):
    """Unsmoothed step suggestion, or None when it must be disregarded."""
    if not L > 0:
        raise ContractError(f"L must be positive, got {L}")
    if phase == Phase.GLOBAL:
        return 1.0 / L
    if not g > 0:
        return None
    excess = g - max(var, 0.0)
    if excess <= 0:
        return None
    return excess / (L * g)


def propose_step(state: ControllerState) -> float:
    """Update ``state.alpha`` from the current estimates and return it."""
    suggestion = raw_step(state.L.value, state.var.value, state.g.value, state.phase)
    if suggestion is None:
        return state.alpha.value
    if state.smooth_alpha and state.k >= 1:
        new = exp_smooth(state.alpha.value, suggestion, discount_factor(state.k, state.alpha.eta))
    else:
        new = suggestion
    state.alpha.value = state.limits.clamp_alpha(new)
    state.alpha.count = max(state.alpha.count, state.k)
    return state.alpha.value


def accept_step(f_before: float, f_after: float) -> bool:
    """Accept unless the sampled objective increased (or is not finite)."""
    if not (math.isfinite(f_before) and math.isfinite(f_after)):
        return False
    return f_after <= f_before


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    w_next: Point
    sample: Sample
    f_curr: float
    f_next: float
    grad: Point
    grad_norm_sq: float
    trials: int


def line_search(sop: Sop, H: InnerProductOperator, alpha0: float, w: Point, eta_alpha: float,
                stream: SampleStream, max_shrinks: int = MAX_SHRINKS) -> LineSearchResult:
    """Shrink alpha until a freshly drawn sample decreases along its own gradient.

    Every trial draws a new sample. Raises :class:`LineSearchError` after
    ``max_shrinks`` shrinkages.
    """
    if not alpha0 > 0:
        raise ContractError(f"alpha0 must be positive, got {alpha0}")
    if not 0 < eta_alpha < 1:
        raise ContractError(f"eta_alpha must lie in (0, 1), got {eta_alpha}")
    alpha = float(alpha0)
    for trial in range(max_shrinks + 1):
        sample = stream.draw(sop)
        f_curr, d = sop.value_and_derivative(sample, w)
        grad = riesz_inverse(H, d)
        try:
            w_next = axpy(w, -alpha, grad)
            f_next = sop.value(sample, w_next)
        except (ContractError, FloatingPointError):
            f_next = math.inf
        if accept_step(f_curr, f_next):
            return LineSearchResult(alpha, w_next, sample, f_curr, f_next, grad, dual_pair(d, grad), trial + 1)
        alpha *= eta_alpha
    raise LineSearchError(
        f"line search failed after {max_shrinks} shrinkages (alpha0={alpha0:g}, last alpha={alpha / eta_alpha:g})",
        trials=max_shrinks + 1,
        alpha=alpha / eta_alpha,
    )
