"""Baseline structure-aware schemes.

Uncoded baseline: every user caches the first c = M*r/N columns of every
library matrix, so it can form the top-left c x c corner of any demanded
product locally; the server unicasts the remaining r^2 - c^2 raw product
entries to each user.

Multi-request baseline: each matrix is treated as a flat file of s*r symbols
placed with the classic t-subset replication; delivery runs one subset-sum
per (t+1)-subset for each of the two demanded matrices, and users multiply
the recovered matrices themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

import numpy as np

from ..field import FieldMatrix, _matmul_mod
from ..model import (
    CacheContents,
    DeliveryTranscript,
    DemandVector,
    Message,
    ProblemInstance,
    UserCache,
)
from .common import subsets_of


@dataclass(frozen=True)
class UncodedConfig:
    """No free parameters: the column count c = M*r/N is fixed by memory."""


def _cached_columns(instance: ProblemInstance) -> Fraction:
    return Fraction(instance.M * instance.r, instance.N)


def uncoded_validate(instance: ProblemInstance, config: UncodedConfig) -> list[str]:
    c = _cached_columns(instance)
    if c.denominator != 1:
        return [f"cached column count M*r/N = {c} is not an integer"]
    return []


def uncoded_place(
    instance: ProblemInstance, config: UncodedConfig, library: Sequence[FieldMatrix]
) -> CacheContents:
    c = int(_cached_columns(instance))
    users = []
    for _ in range(instance.K):
        segments = {}
        if c > 0:
            for i, w in enumerate(library, start=1):
                segments[("raw-cols", i, ())] = w.data[:, :c]
        users.append(UserCache(segments, {}))
    return CacheContents(tuple(users))


def _uncoded_entries(product: np.ndarray, c: int) -> np.ndarray:
    """Product entries outside the locally-computable c x c corner, in row
    order: the tail of each of the first c rows, then the full later rows."""
    parts = [product[i, c:] for i in range(c)] + [product[i, :] for i in range(c, product.shape[0])]
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts)


def uncoded_deliver(
    instance: ProblemInstance,
    config: UncodedConfig,
    library: Sequence[FieldMatrix],
    demands: DemandVector,
) -> DeliveryTranscript:
    c = int(_cached_columns(instance))
    messages = []
    for k in range(1, instance.K + 1):
        d1, d2 = demands.pair(k)
        product = _matmul_mod(library[d1 - 1].data.T, library[d2 - 1].data, instance.field.q)
        payload = _uncoded_entries(product, c)
        if payload.size:
            messages.append(Message(("uncoded", k), payload))
    return DeliveryTranscript(tuple(messages))


def uncoded_decode(
    instance: ProblemInstance,
    config: UncodedConfig,
    k: int,
    cache: UserCache,
    transcript: DeliveryTranscript,
    demands: DemandVector,
) -> FieldMatrix:
    c = int(_cached_columns(instance))
    r, q = instance.r, instance.field.q
    d1, d2 = demands.pair(k)
    out = np.zeros((r, r), dtype=np.int64)
    if c > 0:
        left = cache.get(("raw-cols", d1, ()))
        right = cache.get(("raw-cols", d2, ()))
        out[:c, :c] = _matmul_mod(left.T, right, q)
    if c < r:
        payload = transcript.find(("uncoded", k)).payload
        pos = 0
        for i in range(c):
            out[i, c:] = payload[pos : pos + r - c]
            pos += r - c
        for i in range(c, r):
            out[i, :] = payload[pos : pos + r]
            pos += r
    return FieldMatrix(instance.field, out)


def uncoded_formula_load(instance: ProblemInstance, config: UncodedConfig) -> Fraction:
    from ..bounds import load_R1

    return load_R1(instance.K, instance.N, instance.a, instance.M)


def uncoded_constraints(
    instance: ProblemInstance, config: UncodedConfig
) -> Mapping[str, Fraction]:
    return {"M*r/N": _cached_columns(instance)}


@dataclass(frozen=True)
class MultiRequestConfig:
    """Replication parameter t; requires M = N*t/K exactly."""

    t: int


def _mr_chunk(instance: ProblemInstance, t: int) -> Fraction:
    return Fraction(instance.s * instance.r, comb(instance.K, t))


def multireq_validate(instance: ProblemInstance, config: MultiRequestConfig) -> list[str]:
    t, K = config.t, instance.K
    if not isinstance(t, int) or not 0 <= t <= K:
        return [f"t={t} outside [0, K={K}]"]
    problems = []
    if instance.M != Fraction(instance.N * t, K):
        problems.append(f"memory M={instance.M} != N*t/K = {Fraction(instance.N * t, K)}")
    if _mr_chunk(instance, t).denominator != 1:
        problems.append(
            f"matrix length s*r={instance.s * instance.r} not divisible by C(K,t)={comb(K, t)}"
        )
    return problems


def multireq_place(
    instance: ProblemInstance, config: MultiRequestConfig, library: Sequence[FieldMatrix]
) -> CacheContents:
    t, K = config.t, instance.K
    users = [UserCache({}, {}) for _ in range(K)]
    if t == 0:
        return CacheContents(tuple(users))
    chunk = int(_mr_chunk(instance, t))
    for i, w in enumerate(library, start=1):
        flat = w.data.reshape(-1)
        for idx, subset in enumerate(subsets_of(K, t)):
            segment = flat[idx * chunk : (idx + 1) * chunk]
            for k in subset:
                users[k - 1].segments[("raw-rows", i, subset)] = segment
    return CacheContents(tuple(users))


def multireq_deliver(
    instance: ProblemInstance,
    config: MultiRequestConfig,
    library: Sequence[FieldMatrix],
    demands: DemandVector,
) -> DeliveryTranscript:
    t, K, q = config.t, instance.K, instance.field.q
    messages = []
    if t == 0:
        for k in range(1, K + 1):
            pair = demands.pair(k)
            for slot in (1, 2):
                flat = library[pair[slot - 1] - 1].data.reshape(-1)
                messages.append(Message(("multireq", slot, (k,)), flat))
        return DeliveryTranscript(tuple(messages))
    chunk = int(_mr_chunk(instance, t))
    t_subsets = {subset: idx for idx, subset in enumerate(subsets_of(K, t))}
    for s_set in subsets_of(K, t + 1):
        for slot in (1, 2):
            payload = np.zeros(chunk, dtype=np.int64)
            for k in s_set:
                rest = tuple(u for u in s_set if u != k)
                idx = t_subsets[rest]
                flat = library[demands.pair(k)[slot - 1] - 1].data.reshape(-1)
                payload = (payload + flat[idx * chunk : (idx + 1) * chunk]) % q
            messages.append(Message(("multireq", slot, s_set), payload))
    return DeliveryTranscript(tuple(messages))


def _mr_recover_matrix(
    instance: ProblemInstance,
    config: MultiRequestConfig,
    k: int,
    slot: int,
    cache: UserCache,
    transcript: DeliveryTranscript,
    demands: DemandVector,
) -> np.ndarray:
    t, K, q = config.t, instance.K, instance.field.q
    d = demands.pair(k)[slot - 1]
    if t == 0:
        flat = transcript.find(("multireq", slot, (k,))).payload.copy()
        return flat.reshape(instance.s, instance.r)
    chunk = int(_mr_chunk(instance, t))
    flat = np.zeros(instance.s * instance.r, dtype=np.int64)
    for idx, subset in enumerate(subsets_of(K, t)):
        if k in subset:
            segment = cache.get(("raw-rows", d, subset))
        else:
            s_set = tuple(sorted(subset + (k,)))
            segment = transcript.find(("multireq", slot, s_set)).payload
            for peer in s_set:
                if peer == k:
                    continue
                peer_rest = tuple(u for u in s_set if u != peer)
                peer_d = demands.pair(peer)[slot - 1]
                segment = (segment - cache.get(("raw-rows", peer_d, peer_rest))) % q
        flat[idx * chunk : (idx + 1) * chunk] = segment
    return flat.reshape(instance.s, instance.r)


def multireq_decode(
    instance: ProblemInstance,
    config: MultiRequestConfig,
    k: int,
    cache: UserCache,
    transcript: DeliveryTranscript,
    demands: DemandVector,
) -> FieldMatrix:
    w1 = _mr_recover_matrix(instance, config, k, 1, cache, transcript, demands)
    w2 = _mr_recover_matrix(instance, config, k, 2, cache, transcript, demands)
    return FieldMatrix(instance.field, _matmul_mod(w1.T, w2, instance.field.q))


def multireq_formula_load(instance: ProblemInstance, config: MultiRequestConfig) -> Fraction:
    from ..compress import g_ratio

    a = instance.a
    return 2 * Fraction(instance.K - config.t, config.t + 1) * a / g_ratio(a, a)


def multireq_constraints(
    instance: ProblemInstance, config: MultiRequestConfig
) -> Mapping[str, Fraction]:
    return {
        "K*M/N": Fraction(instance.K * instance.M, instance.N),
        "s*r/C(K,t)": _mr_chunk(instance, config.t),
    }
