"""Cache-aided matrix-product retrieval over a shared broadcast link:
finite-field schemes, exact load accounting, and closed-form bounds."""

from __future__ import annotations

from .compress import (
    CompressedProduct,
    DimTriple,
    compress_product,
    decompress_product,
    f_len,
    g_ratio,
)
from .field import DEFAULT_FIELD, FieldMatrix, FieldSpec, mat_mul, random_matrix
from .model import (
    DemandVector,
    ProblemInstance,
    RunResult,
    Scheme,
    SchemeParameterError,
    get_scheme,
    run_scheme,
    worst_case_demands,
)

__version__ = "0.1.0"

__all__ = [
    "CompressedProduct",
    "DimTriple",
    "compress_product",
    "decompress_product",
    "f_len",
    "g_ratio",
    "DEFAULT_FIELD",
    "FieldMatrix",
    "FieldSpec",
    "mat_mul",
    "random_matrix",
    "DemandVector",
    "ProblemInstance",
    "RunResult",
    "Scheme",
    "SchemeParameterError",
    "get_scheme",
    "run_scheme",
    "worst_case_demands",
    "__version__",
]
