"""Synthetic call-option chains: pricing oracles, generation, splits, CSV.

Market data is replaced by a generator: features (volatility, strike,
maturity in days) drawn uniformly per row, priced through a CRR binomial
tree for American calls on a continuous-dividend asset, then wrapped in a
high/low band around a noisy mid price. The regression target is the mid
price, exactly the average of high and low.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "OptionQuote",
    "NormStats",
    "Dataset",
    "GeneratorConfig",
    "black_scholes_call",
    "binomial_american_call",
    "generate_dataset",
    "split_and_normalize",
    "save_csv",
    "load_csv",
    "CSV_HEADER",
]

CSV_HEADER = ["volatility", "strike", "maturity_days", "high", "low", "call_price"]

DAYS_PER_YEAR = 365.0


@dataclass(frozen=True)
class OptionQuote:
    """One observed call-option row; target is the high/low mid price."""

    volatility: float
    strike: float
    maturity_days: float
    high_price: float
    low_price: float
    call_price: float

    def __post_init__(self) -> None:
        vals = [
            self.volatility,
            self.strike,
            self.maturity_days,
            self.high_price,
            self.low_price,
            self.call_price,
        ]
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("quote fields must be finite")
        if self.volatility <= 0:
            raise ValueError("volatility must be positive")
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if self.maturity_days < 0:
            raise ValueError("maturity_days must be non-negative")
        if self.low_price < 0:
            raise ValueError("prices must be non-negative")
        if not (self.low_price <= self.call_price <= self.high_price):
            raise ValueError("call price must lie between low and high")
        mid = 0.5 * (self.high_price + self.low_price)
        if abs(self.call_price - mid) > 1e-9 * max(1.0, abs(mid)):
            raise ValueError("call price must equal the high/low mid price")


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-feature and target location/scale, taken from training rows."""

    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float

    def __post_init__(self) -> None:
        fm = np.asarray(self.feature_mean, dtype=float)
        fs = np.asarray(self.feature_std, dtype=float)
        if fm.shape != fs.shape or fm.ndim != 1:
            raise ValueError("feature mean/std must be matching vectors")
        if not (np.all(fs > 0) and self.target_std > 0):
            raise ValueError("normalization scales must be positive")
        object.__setattr__(self, "feature_mean", fm)
        object.__setattr__(self, "feature_std", fs)
        object.__setattr__(self, "target_mean", float(self.target_mean))
        object.__setattr__(self, "target_std", float(self.target_std))

    def normalize_features(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.feature_mean) / self.feature_std

    def denormalize_features(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.feature_std + self.feature_mean

    def normalize_targets(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_std

    def denormalize_targets(self, y):
        return np.asarray(y, dtype=float) * self.target_std + self.target_mean

    def sigma_to_currency(self, sigma):
        return np.asarray(sigma, dtype=float) * self.target_std


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-wise option quotes plus optional normalization statistics.

    Rows always hold raw (currency/day) values; ``norm`` supplies the
    train-split statistics and the normalized views used for fitting.
    """

    volatility: np.ndarray
    strike: np.ndarray
    maturity_days: np.ndarray
    high: np.ndarray
    low: np.ndarray
    call_price: np.ndarray
    norm: NormStats | None = None
    is_normalized: bool = False

    def __post_init__(self) -> None:
        cols = {}
        for name in CSV_HEADER:
            col = np.asarray(getattr(self, name), dtype=float)
            if col.ndim != 1:
                raise ValueError(f"column {name} must be one-dimensional")
            cols[name] = col
            object.__setattr__(self, name, col)
        lengths = {len(c) for c in cols.values()}
        if len(lengths) != 1:
            raise ValueError("all columns must have equal length")
        n = lengths.pop()
        if n == 0:
            return
        if not all(np.all(np.isfinite(c)) for c in cols.values()):
            raise ValueError("dataset values must be finite")
        if not (np.all(self.volatility > 0) and np.all(self.strike > 0)):
            raise ValueError("volatility and strike must be positive")
        if np.any(self.maturity_days < 0) or np.any(self.low < 0):
            raise ValueError("maturities and prices must be non-negative")
        tol = 1e-9 * np.maximum(1.0, np.abs(self.call_price))
        if np.any(self.low > self.call_price + tol) or np.any(
            self.call_price > self.high + tol
        ):
            raise ValueError("call price must lie between low and high")
        if np.any(np.abs(self.call_price - 0.5 * (self.high + self.low)) > tol):
            raise ValueError("call price must equal the high/low mid price")

    @property
    def n_rows(self) -> int:
        return len(self.call_price)

    def quote(self, i: int) -> OptionQuote:
        return OptionQuote(
            volatility=float(self.volatility[i]),
            strike=float(self.strike[i]),
            maturity_days=float(self.maturity_days[i]),
            high_price=float(self.high[i]),
            low_price=float(self.low[i]),
            call_price=float(self.call_price[i]),
        )

    def features(self) -> np.ndarray:
        return np.column_stack([self.volatility, self.strike, self.maturity_days])

    def targets(self) -> np.ndarray:
        return self.call_price.copy()

    def _require_norm(self) -> NormStats:
        if self.norm is None or not self.is_normalized:
            raise ValueError("dataset carries no normalization statistics")
        return self.norm

    def normalized_features(self) -> np.ndarray:
        return self._require_norm().normalize_features(self.features())

    def normalized_targets(self) -> np.ndarray:
        return self._require_norm().normalize_targets(self.call_price)


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic-chain generator settings. Defaults keep every mid price
    several noise standard deviations above zero so relative error metrics
    stay finite.
    """

    n_rows: int = 3051
    spot: float = 100.0
    rate: float = 0.05
    dividend_yield: float = 0.03
    volatility_range: tuple[float, float] = (0.2, 0.6)
    strike_range: tuple[float, float] = (70.0, 105.0)
    maturity_range: tuple[float, float] = (60.0, 365.0)
    spread_fraction: float = 0.05
    noise_std: float = 0.25
    tree_steps: int = 500
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_rows < 1:
            raise ValueError("n_rows must be at least 1")
        if not (self.spot > 0 and np.isfinite(self.spot)):
            raise ValueError("spot must be positive")
        if not np.isfinite(self.rate):
            raise ValueError("rate must be finite")
        if self.dividend_yield < 0:
            raise ValueError("dividend_yield must be non-negative")
        for name in ("volatility_range", "strike_range", "maturity_range"):
            lo, hi = getattr(self, name)
            floor_ok = lo >= 0 if name == "maturity_range" else lo > 0
            if not (floor_ok and lo < hi and np.isfinite(hi)):
                raise ValueError(f"{name} must be a non-degenerate positive interval")
        if not (0 <= self.spread_fraction < 0.5):
            raise ValueError("spread_fraction must lie in [0, 0.5)")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.tree_steps < 1:
            raise ValueError("tree_steps must be at least 1")


def _validate_pricing_inputs(spot, strike, rate, volatility, maturity_years):
    arrays = [np.asarray(a, dtype=float) for a in (spot, strike, rate, volatility, maturity_years)]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise ValueError("pricing inputs must be finite")
    s, k, r, sig, t = np.broadcast_arrays(*arrays)
    if np.any(s <= 0) or np.any(k <= 0):
        raise ValueError("spot and strike must be positive")
    if np.any(t < 0):
        raise ValueError("maturity must be non-negative")
    if np.any((sig <= 0) & (t > 0)):
        raise ValueError("volatility must be positive for unexpired options")
    return s, k, r, sig, t


def black_scholes_call(spot, strike, rate, volatility, maturity_years):
    """European call value, standard closed form on a non-dividend asset.
    Vectorizes over any broadcastable combination of inputs; T = 0 returns
    the expiry payoff.
    """
    s, k, r, sig, t = _validate_pricing_inputs(spot, strike, rate, volatility, maturity_years)
    scalar = s.ndim == 0
    s, k, r, sig, t = np.atleast_1d(s, k, r, sig, t)
    price = np.maximum(s - k, 0.0)
    live = t > 0
    if np.any(live):
        sl, kl, rl, gl, tl = s[live], k[live], r[live], sig[live], t[live]
        vol_sqrt_t = gl * np.sqrt(tl)
        d1 = (np.log(sl / kl) + (rl + 0.5 * gl * gl) * tl) / vol_sqrt_t
        d2 = d1 - vol_sqrt_t
        price[live] = sl * ndtr(d1) - kl * np.exp(-rl * tl) * ndtr(d2)
    return float(price[0]) if scalar else price


def binomial_american_call(
    spot, strike, rate, volatility, maturity_years, dividend_yield=0.0, steps=500
):
    """American call on a continuous-dividend asset via a CRR binomial
    tree with early exercise checked at every node. Vectorizes over
    broadcastable inputs sharing one ``steps`` count.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    s, k, r, sig, t = _validate_pricing_inputs(spot, strike, rate, volatility, maturity_years)
    q = np.asarray(dividend_yield, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("dividend_yield must be finite")
    s, k, r, sig, t, q = np.broadcast_arrays(s, k, r, sig, t, q)
    scalar = s.ndim == 0
    s, k, r, sig, t, q = np.atleast_1d(s, k, r, sig, t, q)

    price = np.maximum(s - k, 0.0)
    live = t > 0
    if not np.any(live):
        return float(price[0]) if scalar else price

    sl = s[live, np.newaxis]
    kl = k[live, np.newaxis]
    dt = (t[live] / steps)[:, np.newaxis]
    u = np.exp(sig[live, np.newaxis] * np.sqrt(dt))
    d = 1.0 / u
    growth = np.exp((r[live] - q[live])[:, np.newaxis] * dt)
    p_up = (growth - d) / (u - d)
    disc = np.exp(-r[live, np.newaxis] * dt)

    j = np.arange(steps + 1)
    under = sl * u ** j * d ** (steps - j)
    values = np.maximum(under - kl, 0.0)
    for _ in range(steps):
        values = disc * (p_up * values[:, 1:] + (1.0 - p_up) * values[:, :-1])
        under = under[:, :-1] / d
        values = np.maximum(values, under - kl)
    price[live] = values[:, 0]
    return float(price[0]) if scalar else price


def _row_rng(seed: int, row: int) -> np.random.Generator:
    # Counter-based stream per row: serial and parallel generation agree.
    return np.random.default_rng([seed, row])


def generate_dataset(cfg: GeneratorConfig) -> Dataset:
    """Draw features uniformly per row, price through the binomial oracle,
    add Gaussian noise to the mid price (floored at zero), and split the
    result into a symmetric high/low band. Deterministic given cfg.seed.
    """
    draws = np.empty((cfg.n_rows, 4))
    for i in range(cfg.n_rows):
        rng = _row_rng(cfg.seed, i)
        draws[i, 0] = rng.uniform(*cfg.volatility_range)
        draws[i, 1] = rng.uniform(*cfg.strike_range)
        draws[i, 2] = rng.uniform(*cfg.maturity_range)
        draws[i, 3] = rng.normal(0.0, cfg.noise_std) if cfg.noise_std > 0 else 0.0
    vol, strike, maturity, noise = draws.T

    model_price = binomial_american_call(
        cfg.spot,
        strike,
        cfg.rate,
        vol,
        maturity / DAYS_PER_YEAR,
        dividend_yield=cfg.dividend_yield,
        steps=cfg.tree_steps,
    )
    mid = np.maximum(model_price + noise, 0.0)
    if np.all(mid <= 0):
        raise ValueError("configuration floors every generated price at zero")
    high = mid * (1.0 + cfg.spread_fraction)
    low = mid * (1.0 - cfg.spread_fraction)
    return Dataset(
        volatility=vol,
        strike=strike,
        maturity_days=maturity,
        high=high,
        low=low,
        call_price=0.5 * (high + low),
    )


def split_and_normalize(
    data: Dataset, n_train: int, n_test: int, seed: int
) -> tuple[Dataset, Dataset]:
    """Shuffle rows by seed, take the first n_train as training and the
    next n_test as test, and attach normalization statistics computed from
    the training rows only.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be at least 1")
    if n_train + n_test > data.n_rows:
        raise ValueError(
            f"split needs {n_train + n_test} rows but the dataset has {data.n_rows}"
        )
    perm = np.random.default_rng(seed).permutation(data.n_rows)
    idx_train = perm[:n_train]
    idx_test = perm[n_train : n_train + n_test]

    def take(idx: np.ndarray, norm: NormStats) -> Dataset:
        return Dataset(
            volatility=data.volatility[idx],
            strike=data.strike[idx],
            maturity_days=data.maturity_days[idx],
            high=data.high[idx],
            low=data.low[idx],
            call_price=data.call_price[idx],
            norm=norm,
            is_normalized=True,
        )

    feats = data.features()[idx_train]
    targets = data.call_price[idx_train]
    fstd = feats.std(axis=0)
    tstd = targets.std()
    if np.any(fstd <= 0) or tstd <= 0:
        raise ValueError("training split has a zero-variance feature or target")
    norm = NormStats(
        feature_mean=feats.mean(axis=0),
        feature_std=fstd,
        target_mean=float(targets.mean()),
        target_std=float(tstd),
    )
    return take(idx_train, norm), take(idx_test, norm)


def save_csv(data: Dataset, path) -> None:
    """Write rows in full float precision under the canonical header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i in range(data.n_rows):
            writer.writerow(
                [
                    repr(float(v))
                    for v in (
                        data.volatility[i],
                        data.strike[i],
                        data.maturity_days[i],
                        data.high[i],
                        data.low[i],
                        data.call_price[i],
                    )
                ]
            )


def load_csv(path) -> Dataset:
    """Read a dataset written by :func:`save_csv`, validating each row and
    reporting the offending 1-based line on failure.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_HEADER):
                raise ValueError(f"line {lineno}: expected {len(CSV_HEADER)} fields")
            try:
                vals = [float(v) for v in rec]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            try:
                OptionQuote(*vals)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            rows.append(vals)
    cols = np.array(rows).T if rows else np.empty((6, 0))
    return Dataset(
        volatility=cols[0],
        strike=cols[1],
        maturity_days=cols[2],
        high=cols[3],
        low=cols[4],
        call_price=cols[5],
    )
