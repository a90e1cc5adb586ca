"""Tail behaviour of Poisson mixtures: exact pmf/survival evaluation,
tail-ratio diagnostics and asymptotics, peaks-over-threshold fitting,
likelihood-based family selection, and seeded numerical experiments.
"""

__version__ = "0.1.0"

from .mixing import (  # noqa: E402
    Frechet, Lognormal, GammaMix, UniformMix, ScaledBeta, MixingSpec,
    DPlus, D0H, D0E, D0F, DMinus, TailClass, classify,
)
from .mixture import (  # noqa: E402
    MixtureModel, TailRatioCurve, TailExhaustedError, log_pmf_grid,
    tail_ratio_limit,
)
from .evt import (  # noqa: E402
    ExcessSample, GpdFit, GofResult, DevianceResult,
    extract_excesses, fit_gpd_mle, fit_exponential, deviance_test,
    ad_test_gpd,
)
from .select import FamilyFit, fit_family, select_model  # noqa: E402
from .experiments import (  # noqa: E402
    ExperimentConfig, ExperimentReport, run_experiment, default_config,
)

__all__ = [
    "__version__",
    "Frechet", "Lognormal", "GammaMix", "UniformMix", "ScaledBeta",
    "MixingSpec",
    "DPlus", "D0H", "D0E", "D0F", "DMinus", "TailClass", "classify",
    "MixtureModel", "TailRatioCurve", "TailExhaustedError", "log_pmf_grid",
    "tail_ratio_limit",
    "ExcessSample", "GpdFit", "GofResult", "DevianceResult",
    "extract_excesses", "fit_gpd_mle", "fit_exponential", "deviance_test",
    "ad_test_gpd",
    "FamilyFit", "fit_family", "select_model",
    "ExperimentConfig", "ExperimentReport", "run_experiment",
    "default_config",
]
