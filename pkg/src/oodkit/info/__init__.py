"""Exact discrete information-theory engine."""

from .fano import FanoQuery, binary_entropy, fano_min_error, mi_lower_bound_from_error
from .joint import DiscreteJoint, RepresentationMap
from .measures import (
    IBLossSpec,
    LemmaReport,
    conditional_mi,
    entropy,
    ib_loss,
    is_sufficient,
    mutual_information,
    verify_lemmas,
)
from .minimizers import EnumerationResult, MinimizerRecord, enumerate_minimizers
from .random_joints import random_collapse_joint, random_joint, random_map
from .sweep import TheoryReport, run_theory_verification

__all__ = [
    "DiscreteJoint",
    "RepresentationMap",
    "IBLossSpec",
    "FanoQuery",
    "LemmaReport",
    "EnumerationResult",
    "MinimizerRecord",
    "TheoryReport",
    "entropy",
    "mutual_information",
    "conditional_mi",
    "ib_loss",
    "is_sufficient",
    "verify_lemmas",
    "enumerate_minimizers",
    "binary_entropy",
    "fano_min_error",
    "mi_lower_bound_from_error",
    "random_collapse_joint",
    "random_joint",
    "random_map",
    "run_theory_verification",
]
