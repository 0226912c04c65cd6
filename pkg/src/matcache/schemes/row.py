"""Row-partition structure-aware scheme.

Matrices are split into horizontal blocks over ell placement classes; user k
belongs to class mod_index(k, ell) and caches the blocks whose class subset
contains it.  A demanded product decomposes as the sum over row blocks of
block-transpose-times-block, so delivery multicasts, per transmission group
of ell consecutive users, one coded sum of compressed block products for
every (t+1)-subset (tall tier) and (t+2)-subset (short tier) of classes.
Messages are always emitted at the full padded packet length, with absent
users contributing zeros, so the broadcast cost depends only on (K, N, a, M,
ell) and not on which group slots are occupied.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, floor
from typing import Mapping, Sequence

import numpy as np

from ..compress import CompressedProduct, DimTriple, compress_product, decompress_product, f_len, packet_symbols
from ..field import FieldMatrix, _matmul_mod
from ..model import (
    CacheContents,
    DeliveryTranscript,
    DemandVector,
    Message,
    ProblemInstance,
    UserCache,
)
from .common import mod_index, subsets_of


@dataclass(frozen=True)
class RowConfig:
    """Number of placement classes ell in [1, K]."""

    ell: int


@dataclass(frozen=True)
class RowParams:
    """Derived split: t = floor(ell*M/N), alpha = t + 1 - ell*M/N in (0, 1].

    The tall tier holds the first alpha*s rows in C(ell, t) blocks of height
    h1; the short tier holds the rest in C(ell, t+1) blocks of height h2
    (absent when alpha = 1).
    """

    ell: int
    t: int
    alpha: Fraction
    h1: Fraction
    h2: Fraction


def row_params(instance: ProblemInstance, ell: int) -> RowParams:
    x = Fraction(ell) * instance.M / instance.N
    t = floor(x)
    alpha = t + 1 - x
    h1 = alpha * instance.s / comb(ell, t)
    h2 = (1 - alpha) * instance.s / comb(ell, t + 1) if alpha < 1 else Fraction(0)
    return RowParams(ell, t, alpha, h1, h2)


def validate(instance: ProblemInstance, config: RowConfig) -> list[str]:
    ell = config.ell
    if not isinstance(ell, int) or not 1 <= ell <= instance.K:
        return [f"ell={ell} outside [1, K={instance.K}]"]
    p = row_params(instance, ell)
    problems = []
    if p.h1.denominator != 1 or p.h1 <= 0:
        problems.append(f"tall-tier block height alpha*s/C(ell,t) = {p.h1} is not a positive integer")
    if p.alpha < 1 and (p.h2.denominator != 1 or p.h2 <= 0):
        problems.append(
            f"short-tier block height (1-alpha)*s/C(ell,t+1) = {p.h2} is not a positive integer"
        )
    return problems


def _block_rows(p: RowParams) -> dict[tuple[int, tuple[int, ...]], slice]:
    """Row slice of every (tier, class-subset) block; tall tier first."""
    h1 = int(p.h1)
    rows: dict[tuple[int, tuple[int, ...]], slice] = {}
    for idx, subset in enumerate(subsets_of(p.ell, p.t)):
        rows[(1, subset)] = slice(idx * h1, (idx + 1) * h1)
    if p.alpha < 1:
        h2 = int(p.h2)
        offset = comb(p.ell, p.t) * h1
        for idx, subset in enumerate(subsets_of(p.ell, p.t + 1)):
            rows[(2, subset)] = slice(offset + idx * h2, offset + (idx + 1) * h2)
    return rows


def place(
    instance: ProblemInstance, config: RowConfig, library: Sequence[FieldMatrix]
) -> CacheContents:
    p = row_params(instance, config.ell)
    rows = _block_rows(p)
    users = []
    for k in range(1, instance.K + 1):
        u = mod_index(k, p.ell)
        segments = {}
        for i, w in enumerate(library, start=1):
            for (tier, subset), row_slice in rows.items():
                if u in subset:
                    segments[("raw-rows", i, (tier, subset))] = w.data[row_slice, :]
        users.append(UserCache(segments, {}))
    return CacheContents(tuple(users))


def _tiers(p: RowParams) -> list[tuple[int, int, int]]:
    """(tier, block height, multicast subset size) for each active tier."""
    tiers = [(1, int(p.h1), p.t + 1)]
    if p.alpha < 1:
        tiers.append((2, int(p.h2), p.t + 2))
    return tiers


def _group_of(k: int, ell: int) -> int:
    return (k - 1) // ell + 1


def deliver(
    instance: ProblemInstance,
    config: RowConfig,
    library: Sequence[FieldMatrix],
    demands: DemandVector,
) -> DeliveryTranscript:
    p = row_params(instance, config.ell)
    rows = _block_rows(p)
    q, r = instance.field.q, instance.r
    groups = -(-instance.K // p.ell)
    messages = []
    for j in range(1, groups + 1):
        for tier, h, size in _tiers(p):
            plen = f_len(DimTriple(r, h, r))
            for s_set in subsets_of(p.ell, size):
                payload = np.zeros(plen, dtype=np.int64)
                headers = []
                for u in s_set:
                    k = (j - 1) * p.ell + u
                    if k > instance.K:
                        continue
                    d1, d2 = demands.pair(k)
                    block = tuple(v for v in s_set if v != u)
                    row_slice = rows[(tier, block)]
                    prod = _matmul_mod(
                        library[d1 - 1].data[row_slice, :].T,
                        library[d2 - 1].data[row_slice, :],
                        q,
                    )
                    cp = compress_product(FieldMatrix(instance.field, prod), h)
                    payload = (payload + packet_symbols(cp)) % q
                    headers.append((k, ((cp.rank, cp.basis_row_indices),)))
                messages.append(Message(("row", j, s_set, tier), payload, tuple(headers)))
    return DeliveryTranscript(tuple(messages))


def decode(
    instance: ProblemInstance,
    config: RowConfig,
    k: int,
    cache: UserCache,
    transcript: DeliveryTranscript,
    demands: DemandVector,
) -> FieldMatrix:
    p = row_params(instance, config.ell)
    q, r = instance.field.q, instance.r
    u = mod_index(k, p.ell)
    j = _group_of(k, p.ell)
    d1, d2 = demands.pair(k)
    out = np.zeros((r, r), dtype=np.int64)
    for tier, h, size in _tiers(p):
        dims = DimTriple(r, h, r)
        for block in subsets_of(p.ell, size - 1):
            if u in block:
                b1 = cache.get(("raw-rows", d1, (tier, block)))
                b2 = cache.get(("raw-rows", d2, (tier, block)))
                contrib = _matmul_mod(b1.T, b2, q)
            else:
                s_set = tuple(sorted(block + (u,)))
                msg = transcript.find(("row", j, s_set, tier))
                packet = msg.payload.copy()
                for peer_u in block:
                    peer_k = (j - 1) * p.ell + peer_u
                    if peer_k > instance.K:
                        continue
                    e1, e2 = demands.pair(peer_k)
                    peer_block = tuple(v for v in s_set if v != peer_u)
                    c1 = cache.get(("raw-rows", e1, (tier, peer_block)))
                    c2 = cache.get(("raw-rows", e2, (tier, peer_block)))
                    peer_prod = _matmul_mod(c1.T, c2, q)
                    peer_cp = compress_product(FieldMatrix(instance.field, peer_prod), h)
                    packet = (packet - packet_symbols(peer_cp)) % q
                rank, basis = msg.headers_for(k)[0]
                cp = CompressedProduct.from_packet(instance.field, dims, rank, tuple(basis), packet)
                contrib = decompress_product(cp).data
            out = (out + contrib) % q
    return FieldMatrix(instance.field, out)


def formula_load(instance: ProblemInstance, config: RowConfig) -> Fraction:
    from ..bounds import row_partition_load

    return row_partition_load(instance.K, instance.N, instance.a, instance.M, config.ell)


def constraints(instance: ProblemInstance, config: RowConfig) -> Mapping[str, Fraction]:
    p = row_params(instance, config.ell)
    out = {"alpha*s/C(ell,t)": p.h1}
    if p.alpha < 1:
        out["(1-alpha)*s/C(ell,t+1)"] = p.h2
    return out
