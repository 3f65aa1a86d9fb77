"""Score-function search over battery capacity.

Capacity is treated as a random design drawn per episode from a Gaussian
with learnable mean.  Blocks of (design, objective) pairs move the mean
along the score-function gradient estimate with a batch-mean baseline,
so no derivative of the objective itself is ever needed.

Designs are expressed in normalized units (multiples of a reference
capacity); clipping keeps every sampled design inside physical bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import TrainingError, ValidationError


@dataclass(frozen=True)
class DesignPolicy:
    """Gaussian over normalized capacity: N(mu, sigma^2) clipped to bounds."""

    mu: float
    sigma: float
    lower: float = 0.05
    upper: float = 2.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.lower < self.upper:
            raise ValidationError(
                f"need 0 < lower < upper, got [{self.lower}, {self.upper}]")
        if not self.lower <= self.mu <= self.upper:
            raise ValidationError(
                f"mu {self.mu} outside [{self.lower}, {self.upper}]")


def sample_design(policy: DesignPolicy, rng: np.random.Generator) -> float:
    """One normalized capacity draw, clipped into the policy's bounds."""
    omega = rng.normal(policy.mu, policy.sigma)
    return float(np.clip(omega, policy.lower, policy.upper))


def design_objective(total_reward: float, omega: float,
                     annuity_weight: float, unit_capacity_cost: float) -> float:
    """Yearly-equivalent profit minus capacity cost for one episode.

    total_reward is the episode's summed per-slot reward; annuity_weight
    scales it to the costing horizon; unit_capacity_cost is the yearly
    cost of one normalized capacity unit.
    """
    return annuity_weight * total_reward - unit_capacity_cost * omega


def score_gradient(policy: DesignPolicy, designs: np.ndarray,
                   objectives: np.ndarray) -> float:
    """Batch-mean-baseline estimate of dE[G]/d mu over one block.

    sum_i (omega_i - mu) / sigma^2 * (G_i - mean(G)).  With the batch mean
    as baseline the sum over an n-sample block has expectation
    (n - 1) * dE[G]/d mu; a constant block gives exactly zero.
    """
    designs = np.asarray(designs, dtype=float)
    objectives = np.asarray(objectives, dtype=float)
    if designs.shape != objectives.shape or designs.ndim != 1:
        raise ValidationError(
            f"designs {designs.shape} and objectives {objectives.shape} "
            "must be matching 1-d arrays")
    if len(designs) < 2:
        raise ValidationError("a gradient block needs at least 2 episodes")
    if not (np.isfinite(designs).all() and np.isfinite(objectives).all()):
        raise TrainingError("non-finite design block")
    # shifting by the first return cancels algebraically but keeps the
    # centering exact when the block is constant
    shifted = objectives - objectives[0]
    scores = (designs - policy.mu) / policy.sigma ** 2
    return float(np.dot(scores, shifted - shifted.mean()))


def update_mu(policy: DesignPolicy, designs: np.ndarray,
              objectives: np.ndarray, learning_rate: float
              ) -> tuple[DesignPolicy, float]:
    """Ascend the estimated gradient; mu stays inside the design bounds."""
    grad = score_gradient(policy, designs, objectives)
    mu = float(np.clip(policy.mu + learning_rate * grad,
                       policy.lower, policy.upper))
    return replace(policy, mu=mu), grad
