"""Online observations of L, the local variance and E||f'||^2, and their smoothing."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractError, DegenerateDirection

__all__ = [
    "SmoothedScalar",
    "exp_smooth",
    "discount_factor",
    "observe_lipschitz",
    "observe_variance",
    "observe_grad_norm",
]


def exp_smooth(q: float, q_new: float, gamma: float) -> float:
    """gamma * q + (1 - gamma) * q_new.

    gamma = 0 is accepted: it is the first step of the time-dependent
    schedule, where the observation replaces the initial value.
    """
    if not 0.0 <= gamma < 1.0:
        raise ContractError(f"discount factor must lie in [0, 1), got {gamma}")
    return gamma * q + (1.0 - gamma) * q_new


def discount_factor(k: int, eta: float) -> float:
    """gamma_k = 1 - k^(-eta)."""
    if not 0.5 <= eta < 1.0:
        raise ContractError(f"eta must lie in [1/2, 1), got {eta}")
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    return 1.0 - k ** (-eta)


@dataclass
class SmoothedScalar:
    """An exponentially smoothed estimate driven by the gamma_k schedule."""

    value: float
    eta: float = 0.7
    count: int = 0

    def update(self, observation: float, k: int) -> float:
        if k < self.count:
            raise ContractError(f"smoothing index went backwards: {k} < {self.count}")
        self.value = exp_smooth(self.value, observation, discount_factor(k, self.eta))
        self.count = k
        return self.value


def observe_lipschitz(f_next: float, f_curr: float, alpha: float, grad_norm_sq: float) -> float:
    """Curvature seen along the step w_{k+1} = w_k - alpha grad f(w_k).

    2 (f(w_{k+1}) - f(w_k) + alpha ||grad||^2) / (alpha^2 ||grad||^2); on a
    quadratic this is the Rayleigh quotient of the Hessian along the gradient.
    """
    if not alpha > 0:
        raise ContractError(f"alpha must be positive, got {alpha}")
    if not grad_norm_sq > 0:
        raise DegenerateDirection("zero gradient: no curvature observation")
    denom = alpha * alpha * grad_norm_sq
    if not denom > 0:
        raise DegenerateDirection("step length underflows: no curvature observation")
    out = 2.0 * (f_next - f_curr + alpha * grad_norm_sq) / denom
    if not math.isfinite(out):
        raise DegenerateDirection("curvature observation is not finite")
    return out


def observe_variance(f_new_sample: float, f_old_sample: float, alpha_prev: float) -> float:
    """(f_{xi_{k+1}}(w_{k+1}) - f_{xi_k}(w_{k+1})) / alpha_k; may be negative."""
    if not alpha_prev > 0:
        raise ContractError(f"alpha_prev must be positive, got {alpha_prev}")
    return (f_new_sample - f_old_sample) / alpha_prev


def observe_grad_norm(grad_dual_norm_sq: float) -> float:
    if grad_dual_norm_sq < 0 or math.isnan(grad_dual_norm_sq):
        raise ContractError(f"squared norm must be non-negative, got {grad_dual_norm_sq}")
    return float(grad_dual_norm_sq)
