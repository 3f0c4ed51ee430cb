"""Gaussian weight prior and the unnormalized posterior energy.

Both inference backends work with the negative log of the unnormalized
posterior,

    E(w) = beta * E_D(w) + sum_g alpha_g * E_{W,g}(w),

where E_D is the half sum of squared residuals and E_{W,g} is half the
squared norm of the weights in group g. The evidence normalizer is never
computed: hyperparameter re-estimation and sampling both need only energy
values, energy differences, and gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import NetworkWeights, data_error, data_error_and_gradient, data_error_gradient

__all__ = [
    "Hyperparameters",
    "PosteriorEnergy",
    "PredictiveResult",
    "alpha_per_weight",
    "log_prior",
    "posterior_energy",
    "posterior_energy_gradient",
    "posterior_energy_and_gradient",
]


@dataclass(frozen=True, eq=False)
class Hyperparameters:
    """Data-error coefficient beta and per-group prior inverse variances.

    beta == 0 is permitted only as the degenerate prior-only case; any use
    that needs an observation-noise floor (predictive variances) requires
    beta > 0 and checks it at the point of use.
    """

    beta: float
    alphas: np.ndarray

    def __post_init__(self) -> None:
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ValueError("beta must be finite and non-negative")
        if alphas.ndim != 1 or len(alphas) == 0:
            raise ValueError("alphas must be a non-empty vector")
        if not np.all((alphas > 0) & np.isfinite(alphas)):
            raise ValueError("all alphas must be positive and finite")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "alphas", alphas)

    @property
    def n_groups(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class PosteriorEnergy:
    total: float
    data_term: float
    prior_term: float


@dataclass(frozen=True)
class PredictiveResult:
    """Point prediction with a one-standard-deviation (68%) band."""

    mean: float
    sigma: float
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (self.sigma >= 0 and np.isfinite(self.sigma)):
            raise ValueError("sigma must be non-negative and finite")

    @classmethod
    def from_mean_sigma(cls, mean: float, sigma: float) -> "PredictiveResult":
        mean, sigma = float(mean), float(sigma)
        return cls(mean=mean, sigma=sigma, lower=mean - sigma, upper=mean + sigma)


def alpha_per_weight(net: NetworkWeights, hp: Hyperparameters) -> np.ndarray:
    """Expand per-group alphas to a length-W vector following the net's
    group partition. Raises on group-count mismatch.
    """
    if hp.n_groups != net.n_groups:
        raise ValueError(
            f"hyperparameters carry {hp.n_groups} groups but the network has {net.n_groups}"
        )
    return hp.alphas[net.group_index]


def log_prior(net: NetworkWeights, hp: Hyperparameters) -> float:
    """Log density of the group-wise Gaussian prior, normalizer included.

    Per group g of size m_g: contribution -alpha_g/2 * sum w_i^2
    - (m_g/2) * ln(2*pi/alpha_g), so exp(log_prior) integrates to one over
    the full weight space.
    """
    aw = alpha_per_weight(net, hp)
    v = net.values
    quad = 0.5 * float((aw * v) @ v)
    log_z = 0.5 * float(net.group_sizes @ np.log(2.0 * np.pi / hp.alphas))
    return -(quad + log_z)


def posterior_energy(net: NetworkWeights, x, y, hp: Hyperparameters) -> PosteriorEnergy:
    """Unnormalized negative log posterior split into its two terms."""
    aw = alpha_per_weight(net, hp)
    data_term = hp.beta * data_error(net, x, y)
    v = net.values
    prior_term = 0.5 * float((aw * v) @ v)
    return PosteriorEnergy(
        total=data_term + prior_term, data_term=data_term, prior_term=prior_term
    )


def posterior_energy_gradient(net: NetworkWeights, x, y, hp: Hyperparameters) -> np.ndarray:
    """Gradient of the posterior energy: beta * dE_D/dw + alpha_g * w."""
    aw = alpha_per_weight(net, hp)
    return hp.beta * data_error_gradient(net, x, y) + aw * net.values


def posterior_energy_and_gradient(
    net: NetworkWeights, x, y, hp: Hyperparameters
) -> tuple[float, np.ndarray]:
    """Energy total and gradient in one call (optimizer hot path)."""
    aw = alpha_per_weight(net, hp)
    v = net.values
    e_d, g_d = data_error_and_gradient(net, x, y)
    total = hp.beta * e_d + 0.5 * float((aw * v) @ v)
    return total, hp.beta * g_d + aw * v
