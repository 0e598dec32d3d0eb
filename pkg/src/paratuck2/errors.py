"""Exception hierarchy for the decomposition pipeline.

Each solver failure carries a ``stage`` tag (filled in by
:func:`paratuck2.algebraic.decompose`) and a distinct process exit code used
by the command-line front end.
"""


class ParaTuckError(Exception):
    """Base class for all pipeline failures."""

    exit_code = 1
    name = "error"

    def __init__(self, message, stage=None, **details):
        super().__init__(message)
        self.stage = stage
        self.details = details

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {self.name}: {msg}"
        return f"{self.name}: {msg}"


class NumericalError(ParaTuckError):
    exit_code = 12
    name = "numerical"


class RankDeficientError(ParaTuckError):
    """The tensor has multilinear rank below (2, 2)."""

    exit_code = 3
    name = "rank-deficient"


class NotRankOneError(ParaTuckError):
    """A matrix that must be rank one for a model tensor is not."""

    exit_code = 4
    name = "not-rank-one"


class SingularRecoveryError(ParaTuckError):
    """Recovered factor matrices are singular (coinciding generators)."""

    exit_code = 5
    name = "singular-recovery"


class DegeneratePivotError(ParaTuckError):
    """No core slice is free of (near-)zero entries."""

    exit_code = 6
    name = "degenerate-pivot"


class UnderdeterminedError(ParaTuckError):
    """Fewer than 10 frontal slices; the kernel step carries no information."""

    exit_code = 7
    name = "underdetermined"


class DegeneratePolynomialError(ParaTuckError):
    exit_code = 8
    name = "degenerate-polynomial"


class NotDecomposableError(ParaTuckError):
    """Verification failed; ``factors`` holds the best-effort result."""

    exit_code = 9
    name = "not-decomposable"

    def __init__(self, message, stage=None, factors=None, diagnostics=None, **details):
        super().__init__(message, stage=stage, **details)
        self.factors = factors
        self.diagnostics = diagnostics


class TensorFileError(ParaTuckError):
    """Unreadable or unwritable path."""

    exit_code = 10
    name = "io"


class TensorParseError(TensorFileError):
    """File content does not parse or is inconsistent with its dims."""

    exit_code = 11
    name = "parse"
