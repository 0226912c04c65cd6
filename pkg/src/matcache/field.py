"""Deterministic dense linear algebra over a prime field GF(q).

Matrices are stored row-major as numpy int64 arrays of residues in [0, q).
All algorithms use exact modular arithmetic with first-nonzero pivoting, so
every operation is a pure deterministic function of its inputs — two callers
holding the same matrix always compute byte-identical results, which the
multicast-cancellation logic elsewhere relies on.

Random matrices come from a counter-based PRNG (SplitMix64 finalizer over a
linear counter encoding) with rejection sampling, so entry (i, j) of a matrix
depends only on (seed, rows, cols, i, j) — never on generation order or
platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# SplitMix64 constants (Steele, Lea & Flood 2014).
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# Second stream increment for rejection-sampling retries.
_GAMMA2 = 0xD1B54A32D192ED03
_MASK64 = (1 << 64) - 1

# int64 storage keeps a*b for residues a, b < q exact only when q^2 < 2^63;
# q below 2^31 additionally enables the fast split-multiply path.  Primes up
# to 2^62 are still accepted (exact via object-dtype fallback).
_MAX_Q = 1 << 62

# Miller-Rabin with this witness set is deterministic for n < 3.3 * 10^24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test (exact for n < 3.3e24)."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """A prime field GF(q)."""

    q: int

    def __post_init__(self) -> None:
        if not isinstance(self.q, int) or self.q < 2:
            raise ValueError(f"field modulus must be an integer >= 2, got {self.q!r}")
        if self.q > _MAX_Q:
            raise ValueError(f"field modulus {self.q} exceeds supported bound 2^62")
        if not is_prime(self.q):
            raise ValueError(f"field modulus must be prime, got {self.q}")

    def inv(self, x: int) -> int:
        """Multiplicative inverse of a nonzero residue."""
        x %= self.q
        if x == 0:
            raise ZeroDivisionError("zero has no inverse in GF(q)")
        return pow(x, -1, self.q)

    @property
    def symbol_bytes(self) -> int:
        """Bytes needed to store one field symbol (for header accounting)."""
        return (self.q.bit_length() + 7) // 8


DEFAULT_FIELD = FieldSpec(2_147_483_647)  # 2^31 - 1


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Immutable dense matrix over GF(q), row-major int64 residues."""

    spec: FieldSpec
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError(f"matrix data must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.spec.q):
            arr = arr % self.spec.q
        elif arr is self.data and arr.flags.writeable:
            arr = arr.copy()  # never freeze an array the caller still owns
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.spec == other.spec and self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )

    def __hash__(self) -> int:  # frozen dataclass with eq=False would inherit id-hash
        return hash((self.spec, self.data.shape, self.data.tobytes()))

    def transpose(self) -> "FieldMatrix":
        return FieldMatrix(self.spec, self.data.T)

    def submatrix(self, rows: slice | Sequence[int], cols: slice | Sequence[int]) -> "FieldMatrix":
        sub = self.data[rows][:, cols]
        return FieldMatrix(self.spec, sub)

    def entries(self) -> list[int]:
        """Row-major entry list (spec-level accessor)."""
        return [int(x) for x in self.data.ravel()]

    @classmethod
    def from_rows(cls, spec: FieldSpec, rows: Iterable[Iterable[int]]) -> "FieldMatrix":
        return cls(spec, np.array([list(r) for r in rows], dtype=np.int64))

    @classmethod
    def zeros(cls, spec: FieldSpec, rows: int, cols: int) -> "FieldMatrix":
        return cls(spec, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, spec: FieldSpec, n: int) -> "FieldMatrix":
        return cls(spec, np.eye(n, dtype=np.int64))


def _matmul_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Exact (a @ b) mod q for residue matrices."""
    n = a.shape[1]
    if n == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if q <= (1 << 31) and n <= (1 << 15):
        # Split b into 16-bit halves so every partial dot product fits int64:
        # a*b_hi < 2^31 * 2^15 summed over <= 2^15 terms < 2^61.
        b_hi = b >> 16
        b_lo = b & 0xFFFF
        hi = (a @ b_hi) % q
        return ((hi << 16) + a @ b_lo) % q
    prod = a.astype(object) @ b.astype(object)
    return (prod % q).astype(np.int64)


def mat_mul(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    """Matrix product over GF(q)."""
    if a.spec != b.spec:
        raise ValueError("field mismatch in mat_mul")
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch in mat_mul: {a.shape} x {b.shape}")
    return FieldMatrix(a.spec, _matmul_mod(a.data, b.data, a.spec.q))


def _reduce_rows(data: np.ndarray, q: int):
    """Greedy forward elimination scanning rows in index order.

    Returns (basis_indices, pivots) where pivots is a list of
    (pivot_col, normalized_row) with pivot entry 1, one per basis row.
    The scan keeps the first row that is independent of everything kept
    before it, so basis_indices is the lexicographically smallest
    independent row set.
    """
    work = data % q
    if q > (1 << 31):
        work = work.astype(object)
    basis: list[int] = []
    pivots: list[tuple[int, np.ndarray]] = []
    for i in range(work.shape[0]):
        v = work[i].copy()
        for pc, prow in pivots:
            c = v[pc]
            if c:
                v = (v - c * prow) % q
        nz = np.nonzero(v)[0]
        if nz.size:
            pc = int(nz[0])
            v = (v * pow(int(v[pc]), -1, q)) % q
            pivots.append((pc, v))
            basis.append(i)
    return basis, pivots


def mat_rank(a: FieldMatrix) -> int:
    """Rank over GF(q) via Gaussian elimination (0 for empty/zero)."""
    if a.rows == 0 or a.cols == 0:
        return 0
    basis, _ = _reduce_rows(a.data, a.spec.q)
    return len(basis)


def row_basis(a: FieldMatrix) -> list[int]:
    """Lexicographically smallest maximal independent row-index set, ascending."""
    if a.rows == 0 or a.cols == 0:
        return []
    basis, _ = _reduce_rows(a.data, a.spec.q)
    return basis


def solve_columns(w1: FieldMatrix, y: FieldMatrix) -> FieldMatrix:
    """Solve W1 Q = Y column-wise; free variables pinned to 0.

    Deterministic: pivot columns scanned left to right, pivot rows chosen
    first-nonzero, full reduction (RREF).  Raises ValueError("column not in
    span") when some column of Y is outside the column space of W1.
    """
    if w1.spec != y.spec:
        raise ValueError("field mismatch in solve_columns")
    if w1.rows != y.rows:
        raise ValueError(f"dimension mismatch in solve_columns: {w1.shape} vs {y.shape}")
    q = w1.spec.q
    n = w1.cols
    aug = np.concatenate([w1.data, y.data], axis=1) % q
    if q > (1 << 31):
        aug = aug.astype(object)
    pivot_cols: list[int] = []
    prow = 0
    m = aug.shape[0]
    for col in range(n):
        sel = -1
        for row in range(prow, m):
            if aug[row, col]:
                sel = row
                break
        if sel < 0:
            continue
        if sel != prow:
            aug[[prow, sel]] = aug[[sel, prow]]
        aug[prow] = (aug[prow] * pow(int(aug[prow, col]), -1, q)) % q
        for row in range(m):
            if row != prow and aug[row, col]:
                aug[row] = (aug[row] - aug[row, col] * aug[prow]) % q
        pivot_cols.append(col)
        prow += 1
    if any(np.any(aug[row, n:]) for row in range(prow, m)):
        raise ValueError("column not in span")
    sol = np.zeros((n, y.cols), dtype=np.int64)
    for row, col in enumerate(pivot_cols):
        sol[col] = aug[row, n:].astype(np.int64)
    return FieldMatrix(w1.spec, sol)


def solve_row_coefficients(basis_rows: FieldMatrix, target_rows: FieldMatrix) -> FieldMatrix:
    """Coefficients A2 with A2 @ basis_rows = target_rows.

    basis_rows must have full row rank (then A2 is unique).  Raises
    ValueError("row not in span") on an inconsistent system.
    """
    try:
        qt = solve_columns(basis_rows.transpose(), target_rows.transpose())
    except ValueError as exc:
        if "column not in span" in str(exc):
            raise ValueError("row not in span") from None
        raise
    return qt.transpose()


def leading_block_column_permutation(w: FieldMatrix, block_cols: int) -> list[int]:
    """Column permutation making the leading block carry the full rank.

    Returns perm with (W after permutation)[:, j] = W[:, perm[j]] such that
    the first block_cols columns have rank min(rank(W), block_cols).  The
    identity permutation is returned whenever the natural leading block
    already satisfies the condition; otherwise the lexicographically first
    independent columns are pulled to the front (greedy, deterministic).
    """
    if block_cols > w.cols:
        raise ValueError(f"block_cols {block_cols} exceeds matrix cols {w.cols}")
    col_basis = row_basis(w.transpose())
    target = min(len(col_basis), block_cols)
    leading = FieldMatrix(w.spec, w.data[:, :block_cols])
    if mat_rank(leading) == target:
        return list(range(w.cols))
    selected = col_basis[:target]
    rest = [c for c in range(w.cols) if c not in set(selected)]
    return selected + rest


def apply_column_permutation(w: FieldMatrix, perm: Sequence[int]) -> FieldMatrix:
    return FieldMatrix(w.spec, w.data[:, list(perm)])


def _mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, vectorized over uint64 (wraps mod 2^64)."""
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_MIX1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def _mix64_int(x: int) -> int:
    x &= _MASK64
    x ^= x >> 30
    x = (x * _MIX1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX2) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Derived sub-seed for item `index` of a seeded collection."""
    return _mix64_int((seed & _MASK64) + _GOLDEN * (index + 1))


def uniform_residues(seed: int, count: int, q: int) -> np.ndarray:
    """`count` i.i.d. uniform draws on [0, q) from the counter-based PRNG.

    Draw t for counter c is mix64(mix64(seed + (c+1)*GOLDEN) + t*GAMMA2);
    draws >= floor(2^64 / q) * q are rejected and retried with t+1, which
    makes the accepted value exactly uniform.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    limit = np.uint64(((1 << 64) // q) * q - 1)  # accept v <= limit
    counters = np.arange(1, count + 1, dtype=np.uint64)
    base = _mix64(np.uint64(seed & _MASK64) + counters * np.uint64(_GOLDEN))
    vals = _mix64(base)
    attempt = np.uint64(0)
    reject = vals > limit
    while np.any(reject):
        attempt = attempt + np.uint64(1)
        vals[reject] = _mix64(base[reject] + attempt * np.uint64(_GAMMA2))
        reject = vals > limit
    return (vals % np.uint64(q)).astype(np.int64)


def random_matrix(spec: FieldSpec, rows: int, cols: int, seed: int) -> FieldMatrix:
    """Seeded uniform random matrix; identical on every platform.

    Entry (i, j) uses counter i*cols + j, so the value depends only on
    (seed, rows, cols, i, j).
    """
    vals = uniform_residues(seed, rows * cols, spec.q)
    return FieldMatrix(spec, vals.reshape(rows, cols))
