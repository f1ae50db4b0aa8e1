"""Revealed-preference tests for Bayesian persuasion from state-dependent stochastic choice."""

from .axioms import (
    CONSISTENT,
    EXTENDED,
    STATE_DEP,
    TRANSPARENT,
    VARYING_PRIORS,
    VIOLATED,
    SenderRationalization,
    Verdict,
    Witness,
    check,
    check_nbps,
    check_nias,
    check_single_menu,
    validate_rationalizer,
)
from .dataset import DatasetFormatError, MenuObservation, SdscDataset, World, load_dataset, revealed_signal
from .farkas import Certificate, FeasibilitySystem, decide, replay, solve_lp
from .forward import SenderProblem, benefits_from_persuasion, brute_force_nbps, generate_dataset, load_problems, solve
from .geometry import candidate_set, posterior_cover, vertex_enumerate
from .means import (
    MeanDataset,
    MeanProblem,
    MeanWorld,
    check_mean,
    check_nbpsm,
    generate_mean_dataset,
    load_mean_dataset,
    load_mean_problems,
    mean_benefit,
    mean_solve,
    mpc_check,
)

__version__ = "0.1.0"
