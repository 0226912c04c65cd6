"""Small helpers shared by the caching schemes."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np


def subsets_of(n: int, size: int) -> list[tuple[int, ...]]:
    """Size-subsets of {1, .., n} in lexicographic order (empty list when the
    size is out of range)."""
    if size < 0 or size > n:
        return []
    return list(combinations(range(1, n + 1), size))


def mod_index(k: int, ell: int) -> int:
    """1-based residue of k modulo ell: values in [1, ell], with multiples of
    ell mapping to ell."""
    m = k % ell
    return ell if m == 0 else m


def exact_int(value: Fraction | int, what: str) -> int:
    """Integer value of an exact quantity, or ValueError naming the culprit."""
    frac = Fraction(value)
    if frac.denominator != 1:
        raise ValueError(f"{what} = {frac} is not an integer")
    return int(frac)


def subtract_mod(acc: np.ndarray, other: np.ndarray, q: int) -> np.ndarray:
    """(acc - other) mod q for int64 vectors of equal length."""
    return (acc - other) % q
