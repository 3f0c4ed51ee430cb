"""Command-line driver: generate synthetic option chains, train either
backend, and evaluate a saved model on the held-out split.

Reports carry the error/uncertainty fields used throughout: mean and max
percent error against the actual price, the average predictive sigma in
currency, training wall time, and the backend-specific extras (per-input
alphas and pathology count for the Gaussian/ARD backend, acceptance rate
for the sampler).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import evidence, hmc
from .data import (
    Dataset,
    GeneratorConfig,
    NormStats,
    generate_dataset,
    load_csv,
    save_csv,
    split_and_normalize,
)
from .mlp import NetworkLayout, NetworkWeights
from .posterior import Hyperparameters

__all__ = [
    "EvaluationReport",
    "evaluation_report",
    "save_artifact",
    "load_artifact",
    "build_parser",
    "main",
]

ARTIFACT_FORMAT_VERSION = 1
INPUT_NAMES = ("volatility", "strike", "maturity_days")


@dataclass(frozen=True)
class EvaluationReport:
    mean_error_pct: float
    max_error_pct: float
    sigma_avg: float
    train_seconds: float
    n_test: int
    alphas: tuple[float, ...] | None = None
    acceptance_rate: float | None = None
    pathology_count: int | None = None

    def __post_init__(self) -> None:
        if self.mean_error_pct > self.max_error_pct:
            raise ValueError("mean error cannot exceed max error")
        if self.sigma_avg < 0:
            raise ValueError("sigma_avg must be non-negative")

    def as_key_values(self) -> str:
        lines = [
            f"mean_error_pct={self.mean_error_pct!r}",
            f"max_error_pct={self.max_error_pct!r}",
            f"sigma_avg={self.sigma_avg!r}",
            f"train_seconds={self.train_seconds!r}",
            f"n_test={self.n_test}",
        ]
        if self.alphas is not None:
            lines.append("alphas=" + ",".join(repr(a) for a in self.alphas))
        if self.acceptance_rate is not None:
            lines.append(f"acceptance_rate={self.acceptance_rate!r}")
        if self.pathology_count is not None:
            lines.append(f"pathology_count={self.pathology_count}")
        return "\n".join(lines) + "\n"


def evaluation_report(
    actual,
    predicted,
    sigma,
    train_seconds: float,
    alphas=None,
    acceptance_rate=None,
    pathology_count=None,
) -> EvaluationReport:
    """Assemble the report from per-point predictions in currency units.
    Percent errors are relative to the actual price.
    """
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if not (actual.shape == predicted.shape == sigma.shape) or actual.ndim != 1:
        raise ValueError("actual, predicted, and sigma must be matching vectors")
    if len(actual) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    pct = np.abs(predicted - actual) / np.abs(actual) * 100.0
    return EvaluationReport(
        mean_error_pct=float(pct.mean()),
        max_error_pct=float(pct.max()),
        sigma_avg=float(sigma.mean()),
        train_seconds=float(train_seconds),
        n_test=len(actual),
        alphas=None if alphas is None else tuple(float(a) for a in alphas),
        acceptance_rate=None if acceptance_rate is None else float(acceptance_rate),
        pathology_count=None if pathology_count is None else int(pathology_count),
    )


# --------------------------------------------------------------------------
# Model artifacts


def _norm_to_json(norm: NormStats) -> dict:
    return {
        "feature_mean": norm.feature_mean.tolist(),
        "feature_std": norm.feature_std.tolist(),
        "target_mean": norm.target_mean,
        "target_std": norm.target_std,
    }


def _norm_from_json(obj: dict) -> NormStats:
    return NormStats(
        feature_mean=np.array(obj["feature_mean"]),
        feature_std=np.array(obj["feature_std"]),
        target_mean=obj["target_mean"],
        target_std=obj["target_std"],
    )


def save_artifact(path, *, method: str, model, split: dict) -> None:
    """Persist a trained model as self-describing JSON with an embedded
    format-version field.
    """
    payload = {
        "format_version": ARTIFACT_FORMAT_VERSION,
        "method": method,
        "layout": {
            "n_inputs": model.layout.n_inputs,
            "n_hidden": model.layout.n_hidden,
            "n_outputs": model.layout.n_outputs,
        },
        "hyperparameters": {"beta": model.hp.beta, "alphas": model.hp.alphas.tolist()},
        "normalization": _norm_to_json(model.norm),
        "split": split,
        "train_seconds": model.train_seconds,
    }
    if method == "ard":
        payload["weights"] = model.weights.values.tolist()
        payload["hessian"] = model.hessian.tolist()
    elif method == "hmc":
        payload["samples"] = model.samples.tolist()
        payload["accept_count"] = model.accept_count
        payload["propose_count"] = model.propose_count
    else:
        raise ValueError(f"unknown method {method!r}")
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_artifact(path):
    """Load a model artifact; returns (method, model, split)."""
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != ARTIFACT_FORMAT_VERSION:
        raise ValueError(f"unsupported artifact format version {version!r}")
    layout = NetworkLayout(**payload["layout"])
    hp = Hyperparameters(
        beta=payload["hyperparameters"]["beta"],
        alphas=np.array(payload["hyperparameters"]["alphas"]),
    )
    norm = _norm_from_json(payload["normalization"])
    split = payload["split"]
    method = payload["method"]
    if method == "ard":
        model = evidence.ArdModel(
            layout=layout,
            weights=NetworkWeights(layout, np.array(payload["weights"])),
            hp=hp,
            hessian=np.array(payload["hessian"]),
            train_seconds=payload["train_seconds"],
            norm=norm,
        )
    elif method == "hmc":
        model = hmc.HmcChain(
            layout=layout,
            samples=np.array(payload["samples"]),
            accept_count=payload["accept_count"],
            propose_count=payload["propose_count"],
            train_seconds=payload["train_seconds"],
            hp=hp,
            norm=norm,
        )
    else:
        raise ValueError(f"unknown method {method!r} in artifact")
    return method, model, split


# --------------------------------------------------------------------------
# Commands


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optionbnn",
        description="Bayesian MLP regression on synthetic call-option data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic option-chain CSV")
    gen.add_argument("--rows", type=int, default=3051)
    gen.add_argument("--spot", type=float, default=100.0)
    gen.add_argument("--rate", type=float, default=0.05)
    gen.add_argument("--dividend-yield", type=float, default=0.03)
    gen.add_argument("--vol-range", type=float, nargs=2, default=[0.2, 0.6],
                     metavar=("LO", "HI"))
    gen.add_argument("--strike-range", type=float, nargs=2, default=[70.0, 105.0],
                     metavar=("LO", "HI"))
    gen.add_argument("--maturity-range", type=float, nargs=2, default=[60.0, 365.0],
                     metavar=("LO", "HI"))
    gen.add_argument("--spread", type=float, default=0.05,
                     help="half-width of the high/low band as a fraction of mid")
    gen.add_argument("--noise", type=float, default=0.25,
                     help="std of additive Gaussian price noise (currency)")
    gen.add_argument("--tree-steps", type=int, default=500)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    train = sub.add_parser("train", help="train a model on a generated CSV")
    train.add_argument("--method", choices=["ard", "hmc"], required=True)
    train.add_argument("--data", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--hidden", type=int, default=25)
    train.add_argument("--beta", type=float, default=10.0)
    train.add_argument("--alpha", type=float, default=1.0,
                       help="initial (ard) or fixed (hmc) prior inverse variance")
    train.add_argument("--train", type=int, default=1000, dest="n_train")
    train.add_argument("--test", type=int, default=300, dest="n_test")
    train.add_argument("--seed", type=int, default=0)
    # ard-only
    train.add_argument("--cycles", type=int, default=None,
                       help="[ard] optimizer iterations per loop (default 500)")
    train.add_argument("--evidence-cycles", type=int, default=None,
                       help="[ard] re-estimation rounds per loop (default 10)")
    train.add_argument("--loops", type=int, default=None,
                       help="[ard] outer training loops (default 1)")
    # hmc-only
    train.add_argument("--samples", type=int, default=None,
                       help="[hmc] retained samples (default 100)")
    train.add_argument("--burnin", type=int, default=None,
                       help="[hmc] initial retained states to discard (default 100)")
    train.add_argument("--step-size", type=float, default=None,
                       help="[hmc] leapfrog step size (default 0.002)")
    train.add_argument("--traj-len", type=int, default=None,
                       help="[hmc] leapfrog steps per trajectory (default 50)")

    ev = sub.add_parser("evaluate", help="evaluate a trained model artifact")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--predictions", required=True,
                    help="output CSV of per-point predictions and bands")
    ev.add_argument("--report", default=None,
                    help="optional path for the key=value report block")
    ev.add_argument("--plot-count", default="100",
                    help="rows to write to the predictions file, or 'all'")
    return parser


_ARD_ONLY = ("cycles", "evidence_cycles", "loops")
_HMC_ONLY = ("samples", "burnin", "step_size", "traj_len")


def _cmd_generate(args, parser) -> int:
    if args.rows < 1:
        parser.error("--rows must be at least 1")
    cfg = GeneratorConfig(
        n_rows=args.rows,
        spot=args.spot,
        rate=args.rate,
        dividend_yield=args.dividend_yield,
        volatility_range=tuple(args.vol_range),
        strike_range=tuple(args.strike_range),
        maturity_range=tuple(args.maturity_range),
        spread_fraction=args.spread,
        noise_std=args.noise,
        tree_steps=args.tree_steps,
        seed=args.seed,
    )
    data = generate_dataset(cfg)
    save_csv(data, args.out)
    print(f"wrote {data.n_rows} rows to {args.out} (seed {args.seed})")
    return 0


def _cmd_train(args, parser) -> int:
    other = _HMC_ONLY if args.method == "ard" else _ARD_ONLY
    bad = [name for name in other if getattr(args, name) is not None]
    if bad:
        flags = ", ".join("--" + b.replace("_", "-") for b in bad)
        parser.error(f"{flags} cannot be used with --method {args.method}")
    if args.method == "hmc" and args.step_size is not None and args.step_size <= 0:
        parser.error("--step-size must be positive")

    data = load_csv(args.data)
    train_set, _ = split_and_normalize(data, args.n_train, args.n_test, args.seed)
    layout = NetworkLayout(n_inputs=3, n_hidden=args.hidden)
    hp = Hyperparameters(beta=args.beta, alphas=np.full(5, args.alpha))
    split = {"n_train": args.n_train, "n_test": args.n_test, "seed": args.seed}

    if args.method == "ard":
        cfg = evidence.ArdConfig(
            training_cycles=args.cycles if args.cycles is not None else 500,
            evidence_cycles=args.evidence_cycles if args.evidence_cycles is not None else 10,
            outer_loops=args.loops if args.loops is not None else 1,
            initial_hp=hp,
            seed=args.seed,
        )
        model = evidence.train_map(layout, train_set, cfg)
    else:
        cfg = hmc.HmcConfig(
            n_samples=args.samples if args.samples is not None else 100,
            burn_in=args.burnin if args.burnin is not None else 100,
            step_size=args.step_size if args.step_size is not None else 0.002,
            trajectory_length=args.traj_len if args.traj_len is not None else 50,
            hp=hp,
            seed=args.seed,
        )
        model = hmc.run_chain(layout, train_set, cfg)

    save_artifact(args.out, method=args.method, model=model, split=split)
    print(f"train_seconds={model.train_seconds!r}")
    print(f"wrote model artifact to {args.out}")
    return 0


def _check_norm_match(stored: NormStats, recomputed: NormStats) -> None:
    pairs = [
        (stored.feature_mean, recomputed.feature_mean),
        (stored.feature_std, recomputed.feature_std),
        ([stored.target_mean], [recomputed.target_mean]),
        ([stored.target_std], [recomputed.target_std]),
    ]
    for a, b in pairs:
        if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
            raise ValueError(
                "model/data mismatch: the data file does not reproduce the "
                "normalization statistics recorded in the artifact"
            )


def _cmd_evaluate(args, parser) -> int:
    if args.plot_count != "all":
        try:
            plot_count = int(args.plot_count)
        except ValueError:
            parser.error("--plot-count must be an integer or 'all'")
        if plot_count < 1:
            parser.error("--plot-count must be at least 1")
    else:
        plot_count = None

    method, model, split = load_artifact(args.model)
    data = load_csv(args.data)
    _, test_set = split_and_normalize(data, split["n_train"], split["n_test"], split["seed"])
    _check_norm_match(model.norm, test_set.norm)

    actual = test_set.targets()
    if method == "ard":
        before = model.pathology_count
        predicted, sigma = evidence.predict_batch(model, test_set.features())
        report = evaluation_report(
            actual,
            predicted,
            sigma,
            train_seconds=model.train_seconds,
            alphas=model.hp.alphas[: len(INPUT_NAMES)],
            pathology_count=model.pathology_count - before,
        )
    else:
        predicted, sigma = hmc.predictive_batch(model, test_set.features())
        report = evaluation_report(
            actual,
            predicted,
            sigma,
            train_seconds=model.train_seconds,
            acceptance_rate=model.acceptance_rate,
        )

    count = len(actual) if plot_count is None else min(plot_count, len(actual))
    with open(args.predictions, "w") as fh:
        fh.write("index,actual,predicted,lower,upper\n")
        for i in range(count):
            row = (
                float(actual[i]),
                float(predicted[i]),
                float(predicted[i] - sigma[i]),
                float(predicted[i] + sigma[i]),
            )
            fh.write(f"{i}," + ",".join(repr(v) for v in row) + "\n")

    print(f"{method} model on {report.n_test} test points:")
    print(f"  mean error   {report.mean_error_pct:.2f}%")
    print(f"  max error    {report.max_error_pct:.2f}%")
    print(f"  avg sigma    {report.sigma_avg:.4f} (currency)")
    print(f"  train time   {report.train_seconds:.2f} s")
    if report.alphas is not None:
        ranked = evidence.relevance_report(model.hp, INPUT_NAMES)
        print("  alphas       [" + " ".join(f"{a:.4f}" for a in report.alphas) + "]")
        print("  relevance    " + " > ".join(name for name, _ in ranked))
    if report.pathology_count is not None:
        print(f"  variance clamps {report.pathology_count}")
    if report.acceptance_rate is not None:
        print(f"  acceptance   {report.acceptance_rate:.3f}")
    block = report.as_key_values()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(block)
    else:
        sys.stdout.write(block)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args, parser)
        if args.command == "train":
            return _cmd_train(args, parser)
        return _cmd_evaluate(args, parser)
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
