"""Hybrid Monte Carlo backend: leapfrog trajectories over the posterior
energy, Metropolis acceptance on the Hamiltonian difference, burn-in
discarding, and predictive averaging over the retained weight samples.

The integrator core is target-agnostic (any energy/gradient pair on R^W),
so the physics contracts (reversibility, energy drift, free-particle
motion) are testable on stub targets independently of the network.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset, NormStats
from .mlp import FeatureVector, NetworkLayout, NetworkWeights, forward, init_weights
from .posterior import (
    Hyperparameters,
    PredictiveResult,
    posterior_energy,
    posterior_energy_gradient,
)

__all__ = [
    "HmcConfig",
    "HmcChain",
    "hamiltonian",
    "leapfrog",
    "metropolis_accept",
    "sample_chain",
    "run_chain",
    "predictive_mean_std",
    "predictive_batch",
]


@dataclass(frozen=True)
class HmcConfig:
    """Sampler settings. ``step_size`` is the base leapfrog step; each
    trajectory uses an equiprobable random direction, i.e. an effective
    step of +/- step_size over ``trajectory_length`` leapfrog steps.
    """

    n_samples: int
    burn_in: int
    step_size: float = 0.002
    trajectory_length: int = 50
    hp: Hyperparameters | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.step_size > 0 and np.isfinite(self.step_size)):
            raise ValueError("step_size must be positive")
        if self.trajectory_length < 1:
            raise ValueError("trajectory_length must be at least 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")


@dataclass(eq=False)
class HmcChain:
    """Retained post-burn-in weight samples plus acceptance statistics."""

    layout: NetworkLayout
    samples: np.ndarray
    accept_count: int
    propose_count: int
    train_seconds: float = 0.0
    hp: Hyperparameters | None = None
    norm: NormStats | None = None

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != self.layout.n_weights:
            raise ValueError("samples must be an (N, W) array matching the layout")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if not (0 <= self.accept_count <= self.propose_count):
            raise ValueError("need 0 <= accept_count <= propose_count")
        self.samples = samples

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.propose_count if self.propose_count else 0.0


def hamiltonian(net: NetworkWeights, momentum, x, y, hp: Hyperparameters) -> float:
    """Posterior energy plus kinetic term 0.5 * p'p."""
    p = np.asarray(momentum, dtype=float)
    if p.shape != (net.n_weights,):
        raise ValueError(f"momentum must have length {net.n_weights}")
    return posterior_energy(net, x, y, hp).total + 0.5 * float(p @ p)


def leapfrog(gradient, w0, p0, step_size: float, n_steps: int):
    """Integrate the candidate state with the standard leapfrog scheme:
    half momentum step, ``n_steps`` position/momentum steps, closing half
    step. ``step_size`` may carry a negative sign for reversed direction.
    Exactly n_steps + 1 gradient evaluations. A non-finite state aborts
    the trajectory and is returned as-is for the caller to reject.
    """
    w = np.array(w0, dtype=float)
    p = np.array(p0, dtype=float)
    g = gradient(w)
    if not np.all(np.isfinite(g)):
        return np.full_like(w, np.nan), p
    p = p - 0.5 * step_size * g
    for step in range(n_steps):
        w = w + step_size * p
        if not np.all(np.isfinite(w)):
            return w, p
        g = gradient(w)
        if not np.all(np.isfinite(g)):
            return np.full_like(w, np.nan), p
        if step < n_steps - 1:
            p = p - step_size * g
    p = p - 0.5 * step_size * g
    return w, p


def metropolis_accept(h_current: float, h_candidate: float, u: float) -> bool:
    """Accept iff u < min(1, exp(h_current - h_candidate)). A non-finite
    candidate Hamiltonian is rejected unconditionally.
    """
    if not np.isfinite(h_candidate):
        return False
    if not np.isfinite(h_current):
        raise ValueError("current Hamiltonian must be finite")
    if h_candidate <= h_current:
        return True
    return u < math.exp(h_current - h_candidate)


def sample_chain(energy, gradient, w0, cfg: HmcConfig, rng=None):
    """Run burn_in + n_samples trajectories over an arbitrary energy
    target, retaining every post-burn-in position (accepted or repeated on
    rejection). Returns (samples, accept_count, propose_count).
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    w = np.array(w0, dtype=float)
    e_current = float(energy(w))
    if not np.isfinite(e_current):
        raise ValueError("initial energy is not finite")

    total = cfg.burn_in + cfg.n_samples
    samples = np.empty((cfg.n_samples, len(w)))
    accept_count = 0
    for t in range(total):
        direction = 1.0 if rng.integers(0, 2) == 1 else -1.0
        p = rng.standard_normal(len(w))
        h_current = e_current + 0.5 * float(p @ p)
        w_star, p_star = leapfrog(
            gradient, w, p, direction * cfg.step_size, cfg.trajectory_length
        )
        if np.all(np.isfinite(w_star)):
            e_star = float(energy(w_star))
            h_star = e_star + 0.5 * float(p_star @ p_star)
        else:
            e_star = math.inf
            h_star = math.inf
        u = float(rng.random())
        if metropolis_accept(h_current, h_star, u):
            w = w_star
            e_current = e_star
            accept_count += 1
        if t >= cfg.burn_in:
            samples[t - cfg.burn_in] = w
    return samples, accept_count, total


def run_chain(layout: NetworkLayout, data: Dataset, cfg: HmcConfig) -> HmcChain:
    """Sample the posterior over network weights for a normalized dataset.
    Initial weights are drawn from the prior; momenta are refreshed from a
    standard Gaussian before every trajectory. Deterministic given
    cfg.seed.
    """
    if cfg.hp is None:
        raise ValueError("HmcConfig.hp must be set to sample a posterior")
    x = data.normalized_features()
    y = data.normalized_targets()
    hp = cfg.hp
    rng = np.random.default_rng(cfg.seed)
    net0 = init_weights(layout, hp.alphas, rng)

    def energy(values):
        return posterior_energy(net0.with_values(values), x, y, hp).total

    def gradient(values):
        return posterior_energy_gradient(net0.with_values(values), x, y, hp)

    start = time.perf_counter()
    samples, accepted, proposed = sample_chain(energy, gradient, net0.values, cfg, rng=rng)
    elapsed = time.perf_counter() - start
    return HmcChain(
        layout=layout,
        samples=samples,
        accept_count=accepted,
        propose_count=proposed,
        train_seconds=elapsed,
        hp=hp,
        norm=data.norm,
    )


def _sample_outputs(chain: HmcChain, xn: np.ndarray) -> np.ndarray:
    """Network outputs for each retained sample: shape (N, n_points)."""
    xn = np.atleast_2d(np.asarray(xn, dtype=float))
    template = NetworkWeights(chain.layout, chain.samples[0])
    outputs = np.empty((chain.n_samples, xn.shape[0]))
    for k in range(chain.n_samples):
        outputs[k] = forward(template.with_values(chain.samples[k]), xn)
    return outputs


def predictive_batch(chain: HmcChain, x) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and population standard deviations over the sample
    outputs, in currency units when normalization statistics are attached.
    """
    x = np.asarray(x, dtype=float)
    if chain.norm is not None:
        outputs = _sample_outputs(chain, chain.norm.normalize_features(x))
        outputs = chain.norm.denormalize_targets(outputs)
    else:
        outputs = _sample_outputs(chain, x)
    return outputs.mean(axis=0), outputs.std(axis=0)


def predictive_mean_std(chain: HmcChain, x) -> PredictiveResult:
    """Predict one point: mean over sample outputs with a +/- one standard
    deviation (68%) band.
    """
    if isinstance(x, FeatureVector):
        x = x.as_array()
    mean, sigma = predictive_batch(chain, np.atleast_2d(np.asarray(x, dtype=float)))
    return PredictiveResult.from_mean_sigma(mean[0], sigma[0])
