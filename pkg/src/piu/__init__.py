"""Learning from positive samples and imperfect unlabeled samples (PIU learning)."""

from .applications import DetectConfig, ListInstance, detect_truncation, list_decode_learn
from .constreg import ConstRegConfig, boosted_constreg, l1_regression_baseline, solve_constrained_regression
from .dist import PIUInstance, make_named_instance, sample
from .hypothesis import ClassDescriptor, Hypothesis, intersect
from .iterative import IterativeConfig, LearnerAbort, iterative_constreg
from .metrics import mc_error, second_order_bound, uc_rate
from .perm import iterative_perm, perm_exact
from .poly import Polynomial

__version__ = "0.1.0"

__all__ = [
    "ClassDescriptor", "ConstRegConfig", "DetectConfig", "Hypothesis", "IterativeConfig",
    "LearnerAbort", "ListInstance", "PIUInstance", "Polynomial", "boosted_constreg",
    "detect_truncation", "intersect", "iterative_constreg", "iterative_perm",
    "l1_regression_baseline", "list_decode_learn", "make_named_instance", "mc_error",
    "perm_exact", "sample", "second_order_bound", "solve_constrained_regression", "uc_rate",
]
