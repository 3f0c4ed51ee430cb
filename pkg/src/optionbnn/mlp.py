"""One-hidden-layer perceptron for scalar regression, with exact gradients.

Weights live in a single flat vector so that both inference backends can
treat the network as a plain function on R^W. The vector is laid out as
[input->hidden weights (input-major), hidden biases, hidden->output
weights, output bias] and carries a partition of its indices into groups:
one group per input's fan-out weights, one for the hidden biases together
with the hidden->output weights, and one for the output bias. Group-wise
Gaussian priors over this partition are what make per-input relevance
readable off the fitted hyperparameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "NetworkLayout",
    "NetworkWeights",
    "FeatureVector",
    "ard_groups",
    "init_weights",
    "forward",
    "output_weight_gradient",
    "data_error",
    "data_error_gradient",
    "data_error_and_gradient",
]


@dataclass(frozen=True)
class NetworkLayout:
    """Shape of a tanh-hidden, linear-output regression MLP."""

    n_inputs: int
    n_hidden: int
    n_outputs: int = 1
    hidden_activation: str = "tanh"
    output_activation: str = "linear"

    def __post_init__(self) -> None:
        if self.n_inputs < 1 or self.n_hidden < 1:
            raise ValueError("n_inputs and n_hidden must be at least 1")
        if self.n_outputs != 1:
            raise ValueError("only scalar regression (n_outputs = 1) is supported")
        if self.hidden_activation != "tanh":
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation != "linear":
            raise ValueError(f"unsupported output activation {self.output_activation!r}")

    @property
    def n_weights(self) -> int:
        return (self.n_inputs + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_outputs


def ard_groups(layout: NetworkLayout) -> tuple[np.ndarray, ...]:
    """Default weight-index partition: one group per input's fan-out
    weights, one for {hidden biases, hidden->output weights}, one for the
    output bias. Group count is therefore n_inputs + 2.
    """
    ni, nh = layout.n_inputs, layout.n_hidden
    groups = [np.arange(i * nh, (i + 1) * nh) for i in range(ni)]
    groups.append(np.arange(ni * nh, ni * nh + 2 * nh))
    groups.append(np.array([layout.n_weights - 1]))
    return tuple(groups)


def _group_index(groups: tuple[np.ndarray, ...], n_weights: int) -> np.ndarray:
    idx = np.full(n_weights, -1, dtype=int)
    for k, members in enumerate(groups):
        idx[members] = k
    return idx


@dataclass(frozen=True, eq=False)
class NetworkWeights:
    """Immutable flat weight vector plus its group partition.

    ``groups`` defaults to :func:`ard_groups`; a custom partition may be
    supplied as long as it covers every index exactly once.
    """

    layout: NetworkLayout
    values: np.ndarray
    groups: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.layout.n_weights,):
            raise ValueError(
                f"expected {self.layout.n_weights} weights, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("weight values must all be finite")
        object.__setattr__(self, "values", values)

        groups = self.groups if self.groups else ard_groups(self.layout)
        groups = tuple(np.asarray(g, dtype=int) for g in groups)
        flat = np.concatenate([g for g in groups]) if groups else np.array([], dtype=int)
        if any(len(g) == 0 for g in groups):
            raise ValueError("every weight group must be non-empty")
        if not np.array_equal(np.sort(flat), np.arange(self.layout.n_weights)):
            raise ValueError("groups must partition the weight indices exactly once")
        object.__setattr__(self, "groups", groups)

    @property
    def n_weights(self) -> int:
        return self.layout.n_weights

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @cached_property
    def group_index(self) -> np.ndarray:
        """Maps each weight index to the id of the group containing it."""
        return _group_index(self.groups, self.n_weights)

    @cached_property
    def group_sizes(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups])

    def with_values(self, values: np.ndarray) -> "NetworkWeights":
        return NetworkWeights(self.layout, values, self.groups)


@dataclass(frozen=True)
class FeatureVector:
    """Raw (unnormalized) network input for the option task."""

    volatility: float
    strike: float
    maturity_days: float

    def __post_init__(self) -> None:
        if not (self.volatility > 0 and np.isfinite(self.volatility)):
            raise ValueError("volatility must be positive and finite")
        if not (self.strike > 0 and np.isfinite(self.strike)):
            raise ValueError("strike must be positive and finite")
        if not (self.maturity_days >= 0 and np.isfinite(self.maturity_days)):
            raise ValueError("maturity_days must be non-negative and finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.volatility, self.strike, self.maturity_days])


def init_weights(layout: NetworkLayout, alphas, seed) -> NetworkWeights:
    """Draw each weight from a zero-mean Gaussian with variance 1/alpha of
    its group. ``alphas`` must hold one positive value per default group;
    ``seed`` may be an int or a numpy Generator.
    """
    alphas = np.asarray(alphas, dtype=float)
    groups = ard_groups(layout)
    if alphas.shape != (len(groups),):
        raise ValueError(f"expected {len(groups)} alphas, got shape {alphas.shape}")
    if not np.all((alphas > 0) & np.isfinite(alphas)):
        raise ValueError("all alphas must be positive and finite")
    rng = np.random.default_rng(seed)
    std = 1.0 / np.sqrt(alphas[_group_index(groups, layout.n_weights)])
    return NetworkWeights(layout, rng.standard_normal(layout.n_weights) * std)


def _unpack(layout: NetworkLayout, values: np.ndarray):
    ni, nh = layout.n_inputs, layout.n_hidden
    w1 = values[: ni * nh].reshape(ni, nh)
    b1 = values[ni * nh : ni * nh + nh]
    w2 = values[ni * nh + nh : ni * nh + 2 * nh]
    b2 = values[-1]
    return w1, b1, w2, b2


def _as_batch(layout: NetworkLayout, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("network inputs must be finite")
    single = x.ndim == 1
    xb = x[np.newaxis, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != layout.n_inputs:
        raise ValueError(f"expected inputs with {layout.n_inputs} features")
    return xb, single


def forward(net: NetworkWeights, x):
    """Network response tanh-hidden / linear-output. Accepts a single
    feature vector (returns float) or an (n, n_inputs) batch (returns an
    (n,) array). Inputs are expected in normalized units.
    """
    xb, single = _as_batch(net.layout, x)
    w1, b1, w2, b2 = _unpack(net.layout, net.values)
    out = np.tanh(xb @ w1 + b1) @ w2 + b2
    return float(out[0]) if single else out


def data_error(net: NetworkWeights, x, y) -> float:
    """Half sum of squared residuals over the dataset."""
    xb, _ = _as_batch(net.layout, x)
    y = np.asarray(y, dtype=float)
    if xb.shape[0] == 0:
        raise ValueError("dataset must be non-empty")
    if y.shape != (xb.shape[0],):
        raise ValueError("targets must be a vector matching the number of rows")
    r = forward(net, xb) - y
    return 0.5 * float(r @ r)


def data_error_and_gradient(net: NetworkWeights, x, y) -> tuple[float, np.ndarray]:
    """Half sum of squared residuals and its exact backpropagated gradient,
    sharing one forward pass.
    """
    xb, _ = _as_batch(net.layout, x)
    y = np.asarray(y, dtype=float)
    if xb.shape[0] == 0:
        raise ValueError("dataset must be non-empty")
    if y.shape != (xb.shape[0],):
        raise ValueError("targets must be a vector matching the number of rows")
    w1, b1, w2, b2 = _unpack(net.layout, net.values)
    h = np.tanh(xb @ w1 + b1)
    r = h @ w2 + b2 - y
    delta = (r[:, np.newaxis] * w2) * (1.0 - h * h)
    grad = np.concatenate(
        [(xb.T @ delta).ravel(), delta.sum(axis=0), h.T @ r, [r.sum()]]
    )
    return 0.5 * float(r @ r), grad


def data_error_gradient(net: NetworkWeights, x, y) -> np.ndarray:
    """Exact gradient of :func:`data_error` via backpropagation."""
    return data_error_and_gradient(net, x, y)[1]


def output_weight_gradient(net: NetworkWeights, x) -> np.ndarray:
    """Gradient of the network output with respect to every weight,
    evaluated at fixed input(s). Shape (W,) for a single input,
    (n, W) for a batch.
    """
    xb, single = _as_batch(net.layout, x)
    w1, b1, w2, _ = _unpack(net.layout, net.values)
    h = np.tanh(xb @ w1 + b1)
    dh = (1.0 - h * h) * w2
    n = xb.shape[0]
    g = np.concatenate(
        [
            (xb[:, :, np.newaxis] * dh[:, np.newaxis, :]).reshape(n, -1),
            dh,
            h,
            np.ones((n, 1)),
        ],
        axis=1,
    )
    return g[0] if single else g
