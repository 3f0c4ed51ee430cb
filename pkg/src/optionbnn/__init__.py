"""Bayesian MLP regression with two inference backends (evidence/ARD and
Hybrid Monte Carlo) and a synthetic American call-option pricing harness.
"""

from .data import (
    Dataset,
    GeneratorConfig,
    NormStats,
    OptionQuote,
    binomial_american_call,
    black_scholes_call,
    generate_dataset,
    load_csv,
    save_csv,
    split_and_normalize,
)
from .evidence import (
    ArdConfig,
    ArdModel,
    fit_map,
    predict_with_error_bars,
    reestimate_hyperparameters,
    relevance_report,
    train_map,
)
from .hmc import (
    HmcChain,
    HmcConfig,
    hamiltonian,
    leapfrog,
    metropolis_accept,
    predictive_mean_std,
    run_chain,
    sample_chain,
)
from .mlp import (
    FeatureVector,
    NetworkLayout,
    NetworkWeights,
    data_error,
    data_error_gradient,
    forward,
    init_weights,
)
from .posterior import (
    Hyperparameters,
    PosteriorEnergy,
    PredictiveResult,
    log_prior,
    posterior_energy,
    posterior_energy_gradient,
)

__version__ = "0.1.0"
