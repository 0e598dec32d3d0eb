"""Algebraic rank-(2, 2) ParaTuck-2 decomposition of complex third-order tensors."""
from .algebraic import DecomposeOptions, DecompositionDiagnostics, decompose
from .als import AlsOptions, AlsTrace, als_run, als_step
from .errors import (
    DegeneratePivotError,
    DegeneratePolynomialError,
    NotDecomposableError,
    NotRankOneError,
    NumericalError,
    ParaTuckError,
    RankDeficientError,
    SingularRecoveryError,
    TensorFileError,
    TensorParseError,
    UnderdeterminedError,
)
from .model import (
    ParaTuck2Factors,
    core_from_factors,
    random_instance,
    reconstruct,
    relative_error,
)
from .tensor_core import contract, frob_dist_sq, frontal_slice, unfold

__version__ = "0.1.0"
