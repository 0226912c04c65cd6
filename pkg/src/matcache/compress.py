"""Rank-based compression of matrix products.

An m x p matrix known to be a product with inner dimension n has rank at
most min(n, m, p), so it is determined by a row basis (rank x p), the
coefficients expressing the remaining rows in that basis ((m-rank) x rank),
and the basis-row index list.  The index list travels as an uncounted
header; the numeric payload is zero-padded to the fixed packet length
f(m, n, p) so equal-shaped packets can be summed in multicasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .field import FieldMatrix, FieldSpec, _matmul_mod, row_basis, solve_row_coefficients


@dataclass(frozen=True)
class DimTriple:
    """Dimensions (m, n, p) of a product: outer rows, inner dim, outer cols."""

    m: int
    n: int
    p: int

    def __post_init__(self) -> None:
        if self.m <= 0 or self.n <= 0 or self.p <= 0:
            raise ValueError(f"dimensions must be positive, got {self}")


def f_len(dims: DimTriple) -> int:
    """Packet length f(m,n,p): symbols needed for an m x p inner-dim-n product.

    (m + p - min(n,m,p)) * min(n,m,p) when min(m,p) >= n, else m*p.
    Symmetric in m and p.
    """
    m, n, p = dims.m, dims.n, dims.p
    if min(m, p) >= n:
        return (m + p - n) * n
    return m * p


def g_ratio(alpha: Fraction, beta: Fraction) -> Fraction:
    """Normalized packet length g: alpha+beta-1 if min >= 1, else alpha*beta.

    f(m,n,p) = n^2 * g(m/n, p/n); in particular one r x r product with inner
    dimension s costs s^2 * g(a, a) symbols where a = r/s.
    """
    alpha, beta = Fraction(alpha), Fraction(beta)
    if alpha <= 0 or beta <= 0:
        raise ValueError("g_ratio arguments must be positive")
    if min(alpha, beta) >= 1:
        return alpha + beta - 1
    return alpha * beta


@dataclass(frozen=True)
class CompressedProduct:
    """P(C, B) encoding: basis rows A1, coefficients A2, basis-index header.

    payload = A1 entries row-major, then A2 entries row-major (non-basis
    rows in ascending original index order); its length is
    rank*p + (m-rank)*rank <= padded_length = f(m,n,p).
    """

    spec: FieldSpec
    dims: DimTriple
    rank: int
    basis_row_indices: tuple[int, ...]
    payload: np.ndarray
    padded_length: int

    def __post_init__(self) -> None:
        m, n, p = self.dims.m, self.dims.n, self.dims.p
        if not 0 <= self.rank <= min(n, m, p):
            raise ValueError(f"rank {self.rank} out of range for dims {self.dims}")
        if len(self.basis_row_indices) != self.rank:
            raise ValueError("basis index count must equal rank")
        if any(i < 0 or i >= m for i in self.basis_row_indices):
            raise ValueError("basis index out of range")
        if any(b >= c for b, c in zip(self.basis_row_indices, self.basis_row_indices[1:])):
            raise ValueError("basis indices must be strictly increasing")
        expected = self.rank * p + (m - self.rank) * self.rank
        arr = np.ascontiguousarray(self.payload, dtype=np.int64)
        if arr.ndim != 1 or arr.shape[0] != expected:
            raise ValueError(f"malformed payload length {arr.shape}, expected {expected}")
        if self.padded_length != f_len(self.dims):
            raise ValueError("padded_length must equal f(m,n,p)")
        if expected > self.padded_length:
            raise ValueError("payload longer than padded length")
        if arr is self.payload and arr.flags.writeable:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "payload", arr)

    @property
    def header_bytes(self) -> int:
        """Uncounted header size: u32 rank + u32 per basis index."""
        return 4 + 4 * self.rank

    @classmethod
    def from_packet(
        cls,
        spec: FieldSpec,
        dims: DimTriple,
        rank: int,
        basis_row_indices: tuple[int, ...],
        packet: np.ndarray,
    ) -> "CompressedProduct":
        """Rebuild from a wire packet; padding symbols beyond the payload are ignored."""
        expected = rank * dims.p + (dims.m - rank) * rank
        packet = np.asarray(packet, dtype=np.int64).ravel()
        if packet.shape[0] < expected:
            raise ValueError(f"packet too short: {packet.shape[0]} < {expected}")
        return cls(spec, dims, rank, basis_row_indices, packet[:expected], f_len(dims))


def compress_product(product: FieldMatrix, inner_dim: int) -> CompressedProduct:
    """Deterministically encode an m x p product with inner dimension n.

    Raises ValueError("inner-dimension contract violated") when the matrix
    rank exceeds min(n, m, p) — i.e. the caller's product claim is wrong.
    """
    m, p = product.rows, product.cols
    dims = DimTriple(m, inner_dim, p)
    basis = row_basis(product)
    rank = len(basis)
    if rank > min(inner_dim, m, p):
        raise ValueError("inner-dimension contract violated")
    a1 = FieldMatrix(product.spec, product.data[basis]) if rank else None
    non_basis = [i for i in range(m) if i not in set(basis)]
    parts = []
    if rank:
        parts.append(a1.data.ravel())
        if non_basis:
            targets = FieldMatrix(product.spec, product.data[non_basis])
            a2 = solve_row_coefficients(a1, targets)
            parts.append(a2.data.ravel())
    payload = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    return CompressedProduct(product.spec, dims, rank, tuple(basis), payload, f_len(dims))


def decompress_product(cp: CompressedProduct) -> FieldMatrix:
    """Exact inverse of compress_product."""
    m, p = cp.dims.m, cp.dims.p
    rank = cp.rank
    out = np.zeros((m, p), dtype=np.int64)
    if rank:
        a1 = cp.payload[: rank * p].reshape(rank, p)
        a2 = cp.payload[rank * p :].reshape(m - rank, rank)
        out[list(cp.basis_row_indices)] = a1
        non_basis = [i for i in range(m) if i not in set(cp.basis_row_indices)]
        if non_basis:
            out[non_basis] = _matmul_mod(a2, a1, cp.spec.q)
    return FieldMatrix(cp.spec, out)


def packet_symbols(cp: CompressedProduct) -> np.ndarray:
    """Payload zero-padded to f(m,n,p): the fixed-length multicast wire form."""
    packet = np.zeros(cp.padded_length, dtype=np.int64)
    packet[: cp.payload.shape[0]] = cp.payload
    return packet
