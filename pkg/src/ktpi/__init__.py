"""Kernel Taylor-based approximate policy iteration for continuous-state MDPs."""

from .kernel import (
    GramFactor,
    IllConditionedError,
    KernelSpec,
    build_gram,
    kernel_diffusion,
    kernel_eval,
    kernel_grad,
)
from .mdp import (
    ProblemDefinition,
    Region,
    SupportingSet,
    TransitionMoments,
    ValueRepresentation,
    classify,
    make_supporting_set,
)
from .solver import (
    SolveOptions,
    SolveReport,
    SolverError,
    build_generator,
    policy_evaluation,
    policy_improvement,
    policy_iteration,
    value_at,
    value_local_operator,
)

__version__ = "0.1.0"
