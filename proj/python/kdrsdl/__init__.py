"""Robust Kronecker-decomposable component analysis.

Tensors are float64 arrays of shape (rows, cols, depth).
"""

from ._core import (
    AsymmetricInputError,
    DimensionError,
    DomainError,
    Error,
    FormatError,
    NonFiniteError,
    NotPositiveDefiniteError,
    SingularEquationError,
    SolverError,
    decompose,
    generate,
    read_image,
    read_tensor,
    reconstruct,
    relative_error,
    roc_auc,
    rpca,
    shrink,
    solve_stein,
    write_tensor,
)

__version__ = "0.1.0"
