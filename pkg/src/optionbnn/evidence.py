"""Gaussian-approximation backend: MAP training, evidence-style
hyperparameter re-estimation with per-input relevance, and error-bar
prediction from the posterior Hessian.

The training protocol is a fixed number of outer loops, each being a
deterministic gradient-based minimization of the posterior energy followed
by several rounds of re-estimating (beta, alphas) from the curvature at
the current minimum. Predictive variance is 1/beta + g' H^-1 g with g the
output gradient in weight space; when the quadratic term goes negative
(an indefinite Hessian at an imperfect minimum), the variance is clamped
to the observation-noise floor 1/beta and the event is counted instead of
being patched over.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .data import Dataset, NormStats
from .mlp import (
    FeatureVector,
    NetworkLayout,
    NetworkWeights,
    data_error,
    data_error_gradient,
    forward,
    init_weights,
    output_weight_gradient,
)
from .posterior import (
    Hyperparameters,
    PredictiveResult,
    alpha_per_weight,
    posterior_energy_and_gradient,
)

__all__ = [
    "ArdConfig",
    "ArdModel",
    "HP_MIN",
    "HP_MAX",
    "data_hessian",
    "posterior_hessian",
    "minimize_posterior",
    "reestimate_hyperparameters",
    "fit_map",
    "train_map",
    "predict_with_error_bars",
    "predict_batch",
    "relevance_report",
]

# Re-estimated hyperparameters are confined to this range; the same floor
# is used when inverting near-singular Hessian eigenvalues.
HP_MIN = 1e-6
HP_MAX = 1e6
HESSIAN_STEP = 1e-4


@dataclass(frozen=True)
class ArdConfig:
    training_cycles: int = 500
    evidence_cycles: int = 10
    outer_loops: int = 1
    initial_hp: Hyperparameters | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("training_cycles", "evidence_cycles", "outer_loops"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


@dataclass(eq=False)
class ArdModel:
    """MAP weights, final hyperparameters, and the posterior Hessian at the
    last minimum. ``pathology_count`` tallies negative predictive-variance
    clamps observed while predicting with this model.
    """

    layout: NetworkLayout
    weights: NetworkWeights
    hp: Hyperparameters
    hessian: np.ndarray
    train_seconds: float = 0.0
    norm: NormStats | None = None
    pathology_count: int = 0
    _eig: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def hessian_eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            evals, evecs = np.linalg.eigh(self.hessian)
            self._eig = (evals, evecs)
        return self._eig

    def noise_floor_sigma(self) -> float:
        """Smallest predictive sigma the model can emit, in target units
        (currency when normalization statistics are attached).
        """
        if self.hp.beta <= 0:
            raise ValueError("noise floor requires beta > 0")
        floor = np.sqrt(1.0 / self.hp.beta)
        return float(floor * self.norm.target_std) if self.norm else float(floor)


def data_hessian(net: NetworkWeights, x, y, step: float = HESSIAN_STEP) -> np.ndarray:
    """Hessian of the data error by central differences of the exact
    gradient, symmetrized.
    """
    w = net.n_weights
    h = np.empty((w, w))
    base = net.values
    for i in range(w):
        up = base.copy()
        up[i] += step
        down = base.copy()
        down[i] -= step
        h[i] = (
            data_error_gradient(net.with_values(up), x, y)
            - data_error_gradient(net.with_values(down), x, y)
        ) / (2.0 * step)
    return 0.5 * (h + h.T)


def posterior_hessian(
    net: NetworkWeights, x, y, hp: Hyperparameters, step: float = HESSIAN_STEP
) -> np.ndarray:
    """Hessian of the posterior energy: beta * d2E_D + diag(alpha)."""
    return hp.beta * data_hessian(net, x, y, step) + np.diag(alpha_per_weight(net, hp))


def minimize_posterior(
    net: NetworkWeights, x, y, hp: Hyperparameters, max_iterations: int
) -> NetworkWeights:
    """Deterministic gradient-based minimization of the posterior energy
    from the given weights (L-BFGS-B capped at ``max_iterations``).
    """
    evals = {"count": 0}

    def objective(values):
        evals["count"] += 1
        total, grad = posterior_energy_and_gradient(net.with_values(values), x, y, hp)
        if not (np.isfinite(total) and np.all(np.isfinite(grad))):
            raise FloatingPointError(
                f"posterior energy became non-finite at optimizer evaluation {evals['count']}"
            )
        return total, grad

    result = optimize.minimize(
        objective,
        net.values,
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": max_iterations,
            "maxfun": 20 * max_iterations,
            "ftol": 1e-15,
            "gtol": 1e-12,
        },
    )
    return net.with_values(result.x)


def reestimate_hyperparameters(
    net: NetworkWeights,
    hp: Hyperparameters,
    data_hess: np.ndarray,
    data_error_value: float,
    n_data: int,
) -> Hyperparameters:
    """One round of evidence re-estimation from the curvature at the
    current weights.

    With A = beta * d2E_D + diag(alpha) the well-determined count of group
    g is gamma_g = |g| - alpha_g * sum_{i in g} (A^-1)_ii, and the updates
    are alpha_g <- gamma_g / (2 E_{W,g}), beta <- (N - sum gamma) / (2 E_D).
    Eigenvalues of A are floored at HP_MIN before inversion; outputs are
    clamped to [HP_MIN, HP_MAX].
    """
    aw = alpha_per_weight(net, hp)
    a_matrix = hp.beta * data_hess + np.diag(aw)
    evals, evecs = np.linalg.eigh(a_matrix)
    inv_diag = (evecs * evecs) @ (1.0 / np.maximum(evals, HP_MIN))

    new_alphas = np.empty(net.n_groups)
    gammas = np.empty(net.n_groups)
    for g, members in enumerate(net.groups):
        gamma = len(members) - hp.alphas[g] * float(inv_diag[members].sum())
        e_w = 0.5 * float(net.values[members] @ net.values[members])
        new_alphas[g] = HP_MAX if e_w == 0 else gamma / (2.0 * e_w)
        gammas[g] = gamma

    if data_error_value == 0:
        new_beta = HP_MAX
    else:
        new_beta = (n_data - float(gammas.sum())) / (2.0 * data_error_value)
    return Hyperparameters(
        beta=float(np.clip(new_beta, HP_MIN, HP_MAX)),
        alphas=np.clip(new_alphas, HP_MIN, HP_MAX),
    )


def fit_map(layout: NetworkLayout, x, y, cfg: ArdConfig) -> ArdModel:
    """Run the outer training loops on normalized arrays and return the
    model with the posterior Hessian at the final minimum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if cfg.initial_hp is None:
        raise ValueError("ArdConfig.initial_hp must be set")
    hp = cfg.initial_hp
    net = init_weights(layout, hp.alphas, cfg.seed)
    n_data = len(y)

    hess_d = None
    for _ in range(cfg.outer_loops):
        net = minimize_posterior(net, x, y, hp, cfg.training_cycles)
        hess_d = data_hessian(net, x, y)
        e_d = data_error(net, x, y)
        for _ in range(cfg.evidence_cycles):
            hp = reestimate_hyperparameters(net, hp, hess_d, e_d, n_data)

    hessian = hp.beta * hess_d + np.diag(alpha_per_weight(net, hp))
    return ArdModel(layout=layout, weights=net, hp=hp, hessian=hessian)


def train_map(layout: NetworkLayout, data: Dataset, cfg: ArdConfig) -> ArdModel:
    """Fit on a normalized dataset, timing the backend work only."""
    x = data.normalized_features()
    y = data.normalized_targets()
    start = time.perf_counter()
    model = fit_map(layout, x, y, cfg)
    model.train_seconds = time.perf_counter() - start
    model.norm = data.norm
    return model


def _predict_normalized(model: ArdModel, xn: np.ndarray):
    """Mean, sigma, and pathology count in normalized target units."""
    if model.hp.beta <= 0:
        raise ValueError("predictive variance requires beta > 0")
    mean = forward(model.weights, xn)
    grads = np.atleast_2d(output_weight_gradient(model.weights, xn))
    evals, evecs = model.hessian_eigensystem()
    # Floor magnitudes, keep signs: an indefinite stored Hessian stays
    # indefinite so the negative-variance pathology remains observable.
    signs = np.where(evals < 0, -1.0, 1.0)
    lam = signs * np.maximum(np.abs(evals), HP_MIN)
    proj = grads @ evecs
    quad = (proj * proj) @ (1.0 / lam)
    if not np.all(np.isfinite(quad)):
        raise FloatingPointError("predictive variance solve produced non-finite values")
    pathological = int(np.sum(quad < 0))
    variance = 1.0 / model.hp.beta + np.maximum(quad, 0.0)
    return np.atleast_1d(mean), np.sqrt(variance), pathological


def predict_batch(model: ArdModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Means and sigmas for raw feature rows, in currency units when the
    model carries normalization statistics.
    """
    x = np.asarray(x, dtype=float)
    if model.norm is not None:
        mean_n, sigma_n, pathological = _predict_normalized(
            model, model.norm.normalize_features(x)
        )
        mean = model.norm.denormalize_targets(mean_n)
        sigma = model.norm.sigma_to_currency(sigma_n)
    else:
        mean, sigma, pathological = _predict_normalized(model, x)
    model.pathology_count += pathological
    return np.asarray(mean, dtype=float), np.asarray(sigma, dtype=float)


def predict_with_error_bars(model: ArdModel, x) -> PredictiveResult:
    """Predict one point with a 68% band (mean +/- sigma)."""
    if isinstance(x, FeatureVector):
        x = x.as_array()
    mean, sigma = predict_batch(model, np.atleast_2d(np.asarray(x, dtype=float)))
    return PredictiveResult.from_mean_sigma(mean[0], sigma[0])


def relevance_report(hp: Hyperparameters, input_names) -> list[tuple[str, float]]:
    """Inputs ranked most-relevant first: ascending alpha, ties broken by
    input order. Uses the leading per-input groups of ``hp.alphas``.
    """
    names = list(input_names)
    if len(names) > hp.n_groups:
        raise ValueError("more input names than hyperparameter groups")
    order = sorted(range(len(names)), key=lambda i: (hp.alphas[i], i))
    return [(names[i], float(hp.alphas[i])) for i in order]
