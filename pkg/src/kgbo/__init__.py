"""Knowledge-gradient Bayesian optimization toolkit.

Exact GP regression, five knowledge-gradient acquisition approximations
sharing one envelope primitive, a deterministic multi-restart optimizer,
GP-sampled test functions and a benchmark harness with a CLI.
"""

__version__ = "0.1.0"

from .acquisition import (
    AcquisitionSpec,
    Discretization,
    NextPointResult,
    Variant,
    ZSet,
    find_incumbent,
    kg_discrete,
    kg_discrete_with_grad,
    kg_hybrid,
    kg_mc,
    kg_oneshot,
    kg_oneshot_hybrid,
    next_point,
)
from .bo import BOHistory, RunRecord, recommend, run_bo
from .epigraph import EnvelopeResult, epigraph_expectation
from .gp import (
    Dataset,
    DegenerateAnchorError,
    FantasySample,
    KernelConfig,
    KernelKind,
    NonPSDError,
    PosteriorGP,
    fit_posterior,
    kernel_eval,
)
from .optimizer import BoxDomain, OptimizerConfig, StepRule, maximize, maximize_joint
from .testbed import InitialDesign, TestFunction, latin_hypercube, sample_gp_function, true_optimum

__all__ = [
    "AcquisitionSpec", "BOHistory", "BoxDomain", "Dataset",
    "DegenerateAnchorError", "Discretization", "EnvelopeResult",
    "FantasySample", "InitialDesign", "KernelConfig", "KernelKind",
    "NextPointResult", "NonPSDError", "OptimizerConfig", "PosteriorGP",
    "RunRecord", "StepRule", "TestFunction", "Variant", "ZSet",
    "epigraph_expectation", "find_incumbent", "fit_posterior", "kernel_eval",
    "kg_discrete", "kg_discrete_with_grad", "kg_hybrid", "kg_mc",
    "kg_oneshot", "kg_oneshot_hybrid", "latin_hypercube", "maximize",
    "maximize_joint", "next_point", "recommend", "run_bo",
    "sample_gp_function", "true_optimum",
]
