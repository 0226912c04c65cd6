"""Column-partition structure-aware scheme.

Matrices are split into vertical blocks indexed by t-subsets (wide tier) and
(t+1)-subsets (narrow tier) of users, where t = floor(K*M/N); user k caches
the blocks whose subset contains it.  A demanded product decomposes into the
grid of cross-block products block(d1, T1)^T block(d2, T2), and delivery runs
in rounds: in round i every (i+1)-subset S receives the sum over k in S of
user k's group of compressed cross products whose block subsets intersect
exactly in S \\ {k}.  Group lengths depend only on i, so the summed packets
align; zero-length groups produce no message.

For wide matrices (r > s) each matrix is first column-permuted so its
leading s columns span it; those columns get the treatment above, while the
remaining columns are represented by cached coefficient blocks Q with
W1 @ Q = W2, delivered by plain coded multicasts and combined locally.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, floor
from typing import Callable, Mapping, Sequence

import numpy as np

from ..compress import CompressedProduct, DimTriple, compress_product, decompress_product, f_len, packet_symbols
from ..field import (
    FieldMatrix,
    _matmul_mod,
    apply_column_permutation,
    leading_block_column_permutation,
    solve_columns,
)
from ..model import (
    CacheContents,
    DeliveryTranscript,
    DemandVector,
    Message,
    ProblemInstance,
    UserCache,
)
from .common import subsets_of

BlockGetter = Callable[[int, tuple[int, ...]], np.ndarray]


@dataclass(frozen=True)
class ColConfig:
    """No free parameters: t = floor(K*M/N) and the tier split are derived."""


@dataclass(frozen=True)
class ColParams:
    """t = floor(K*M/N), alpha = t + 1 - K*M/N in (0, 1]."""

    t: int
    alpha: Fraction


def col_params(instance: ProblemInstance) -> ColParams:
    x = Fraction(instance.K) * instance.M / instance.N
    t = floor(x)
    return ColParams(t, t + 1 - x)


@dataclass(frozen=True)
class BlockEntry:
    """One vertical block: user subset, column offset, and width."""

    subset: tuple[int, ...]
    offset: int
    width: int


@dataclass(frozen=True)
class ColLayout:
    """Ordered block list covering `total` columns: wide tier then narrow tier,
    each in lexicographic subset order."""

    entries: tuple[BlockEntry, ...]
    total: int

    def entry(self, subset: tuple[int, ...]) -> BlockEntry:
        for e in self.entries:
            if e.subset == subset:
                return e
        raise KeyError(f"no block for subset {subset}")


def tier_widths(params: ColParams, K: int, total: int) -> tuple[Fraction, Fraction]:
    """(wide width, narrow width) of the split of `total` columns."""
    w1 = params.alpha * total / comb(K, params.t)
    w2 = (1 - params.alpha) * total / comb(K, params.t + 1) if params.alpha < 1 else Fraction(0)
    return w1, w2


def build_layout(params: ColParams, K: int, total: int) -> ColLayout:
    w1, w2 = tier_widths(params, K, total)
    entries = []
    offset = 0
    for subset in subsets_of(K, params.t):
        entries.append(BlockEntry(subset, offset, int(w1)))
        offset += int(w1)
    if params.alpha < 1:
        for subset in subsets_of(K, params.t + 1):
            entries.append(BlockEntry(subset, offset, int(w2)))
            offset += int(w2)
    if offset != total:
        raise AssertionError(f"layout covers {offset} of {total} columns")
    return ColLayout(tuple(entries), total)


def _pairs_with_intersection(
    layout: ColLayout, v_set: tuple[int, ...]
) -> list[tuple[BlockEntry, BlockEntry]]:
    """Ordered block pairs whose subsets intersect exactly in v_set, row-major
    in layout order (the canonical group ordering on both ends of the link)."""
    target = set(v_set)
    return [
        (e1, e2)
        for e1 in layout.entries
        for e2 in layout.entries
        if set(e1.subset) & set(e2.subset) == target
    ]


def _group_packets(
    instance: ProblemInstance,
    layout: ColLayout,
    d1: int,
    d2: int,
    v_set: tuple[int, ...],
    get_block: BlockGetter,
) -> tuple[list[np.ndarray], list[tuple[int, tuple[int, ...]]]]:
    """Compressed packets (and their rank/basis headers) of one user's group:
    every cross product whose block subsets intersect exactly in v_set."""
    q = instance.field.q
    packets, headers = [], []
    for e1, e2 in _pairs_with_intersection(layout, v_set):
        prod = _matmul_mod(get_block(d1, e1.subset).T, get_block(d2, e2.subset), q)
        cp = compress_product(FieldMatrix(instance.field, prod), instance.s)
        packets.append(packet_symbols(cp))
        headers.append((cp.rank, cp.basis_row_indices))
    return packets, headers


def _round_messages(
    instance: ProblemInstance,
    layout: ColLayout,
    demands: DemandVector,
    get_block: BlockGetter,
    t: int,
) -> list[Message]:
    q, K = instance.field.q, instance.K
    messages = []
    for i in range(t + 2):
        for s_set in subsets_of(K, i + 1):
            payloads, headers = [], []
            for k in s_set:
                d1, d2 = demands.pair(k)
                packets, packet_headers = _group_packets(
                    instance, layout, d1, d2, tuple(u for u in s_set if u != k), get_block
                )
                payloads.append(
                    np.concatenate(packets) if packets else np.zeros(0, dtype=np.int64)
                )
                headers.append((k, tuple(packet_headers)))
            lengths = {p.size for p in payloads}
            if len(lengths) != 1:
                raise AssertionError(f"group lengths differ across users: {lengths}")
            if lengths == {0}:
                continue
            payload = np.zeros(payloads[0].size, dtype=np.int64)
            for part in payloads:
                payload = (payload + part) % q
            messages.append(Message(("col", i, s_set), payload, tuple(headers)))
    return messages


def _decode_grid(
    instance: ProblemInstance,
    layout: ColLayout,
    k: int,
    d1: int,
    d2: int,
    cache_block: BlockGetter,
    transcript: DeliveryTranscript,
    demands: DemandVector,
    cached_subsets: set[tuple[int, ...]],
) -> np.ndarray:
    """Reassemble the full cross-product grid for user k: cached pairs are
    computed locally, the rest are read out of the round messages."""
    q = instance.field.q
    recovered: dict[tuple[int, ...], list[np.ndarray]] = {}

    def group_products(v_set: tuple[int, ...]) -> list[np.ndarray]:
        if v_set in recovered:
            return recovered[v_set]
        pairs = _pairs_with_intersection(layout, v_set)
        s_set = tuple(sorted(v_set + (k,)))
        msg = transcript.find(("col", len(v_set), s_set))
        packet = msg.payload.copy()
        for peer in v_set:
            e1, e2 = demands.pair(peer)
            peer_packets, _ = _group_packets(
                instance, layout, e1, e2, tuple(u for u in s_set if u != peer), cache_block
            )
            packet = (packet - np.concatenate(peer_packets)) % q
        headers = msg.headers_for(k)
        products, pos = [], 0
        for (e1, e2), (rank, basis) in zip(pairs, headers, strict=True):
            dims = DimTriple(e1.width, instance.s, e2.width)
            step = f_len(dims)
            cp = CompressedProduct.from_packet(
                instance.field, dims, rank, tuple(basis), packet[pos : pos + step]
            )
            products.append(decompress_product(cp).data)
            pos += step
        if pos != packet.size:
            raise AssertionError("group payload length mismatch")
        recovered[v_set] = products
        return products

    grid = np.zeros((layout.total, layout.total), dtype=np.int64)
    for e1 in layout.entries:
        for e2 in layout.entries:
            v_set = tuple(sorted(set(e1.subset) & set(e2.subset)))
            if e1.subset in cached_subsets and e2.subset in cached_subsets:
                block = _matmul_mod(cache_block(d1, e1.subset).T, cache_block(d2, e2.subset), q)
            else:
                pairs = _pairs_with_intersection(layout, v_set)
                block = group_products(v_set)[pairs.index((e1, e2))]
            grid[e1.offset : e1.offset + e1.width, e2.offset : e2.offset + e2.width] = block
    return grid


def validate(instance: ProblemInstance, config: ColConfig) -> list[str]:
    p = col_params(instance)
    K = instance.K
    problems = []
    if instance.a <= 1:
        widths = [("alpha*r/C(K,t)", "(1-alpha)*r/C(K,t+1)", instance.r)]
    else:
        widths = [
            ("alpha*s/C(K,t)", "(1-alpha)*s/C(K,t+1)", instance.s),
            ("alpha*(r-s)/C(K,t)", "(1-alpha)*(r-s)/C(K,t+1)", instance.r - instance.s),
        ]
    for name1, name2, total in widths:
        w1, w2 = tier_widths(p, K, total)
        if w1.denominator != 1 or w1 <= 0:
            problems.append(f"wide block width {name1} = {w1} is not a positive integer")
        if p.alpha < 1 and (w2.denominator != 1 or w2 <= 0):
            problems.append(f"narrow block width {name2} = {w2} is not a positive integer")
    return problems


def _narrow_matrix_layout(instance: ProblemInstance) -> ColLayout:
    return build_layout(col_params(instance), instance.K, instance.r)


def _wide_layouts(instance: ProblemInstance) -> tuple[ColLayout, ColLayout]:
    p = col_params(instance)
    return (
        build_layout(p, instance.K, instance.s),
        build_layout(p, instance.K, instance.r - instance.s),
    )


def place(
    instance: ProblemInstance, config: ColConfig, library: Sequence[FieldMatrix]
) -> CacheContents:
    K = instance.K
    users = [UserCache({}, {}) for _ in range(K)]
    if instance.a <= 1:
        layout = _narrow_matrix_layout(instance)
        for i, w in enumerate(library, start=1):
            for e in layout.entries:
                block = w.data[:, e.offset : e.offset + e.width]
                for k in e.subset:
                    users[k - 1].segments[("raw-cols", i, e.subset)] = block
        return CacheContents(tuple(users))
    lead_layout, coeff_layout = _wide_layouts(instance)
    perms = {}
    for i, w in enumerate(library, start=1):
        perm = leading_block_column_permutation(w, instance.s)
        perms[i] = tuple(perm)
        shuffled = apply_column_permutation(w, perm)
        w1 = shuffled.submatrix(slice(None), slice(0, instance.s))
        w2 = shuffled.submatrix(slice(None), slice(instance.s, instance.r))
        coeff = solve_columns(w1, w2)
        for e in lead_layout.entries:
            block = w1.data[:, e.offset : e.offset + e.width]
            for k in e.subset:
                users[k - 1].segments[("raw-cols", i, e.subset)] = block
        for e in coeff_layout.entries:
            block = coeff.data[:, e.offset : e.offset + e.width]
            for k in e.subset:
                users[k - 1].segments[("coded-Q", i, e.subset)] = block
    for user in users:
        user.metadata["column-permutations"] = perms
    return CacheContents(tuple(users))


def _coeff_multicasts(
    instance: ProblemInstance,
    coeff_layout: ColLayout,
    demands: DemandVector,
    coeff_of: Callable[[int], np.ndarray],
    step: str,
    slot: int,
) -> list[Message]:
    """Plain coded multicasts of the cached coefficient blocks each user in the
    subset is missing (slot picks which demanded matrix's coefficients)."""
    p = col_params(instance)
    q, K, s = instance.field.q, instance.K, instance.s
    w1, w2 = tier_widths(p, K, coeff_layout.total)
    messages = []
    tiers = [(int(w1), p.t + 1)]
    if p.alpha < 1:
        tiers.append((int(w2), p.t + 2))
    for width, size in tiers:
        for s_set in subsets_of(K, size):
            payload = np.zeros(s * width, dtype=np.int64)
            for k in s_set:
                d = demands.pair(k)[slot - 1]
                e = coeff_layout.entry(tuple(u for u in s_set if u != k))
                block = coeff_of(d)[:, e.offset : e.offset + e.width]
                payload = (payload + block.ravel()) % q
            messages.append(Message(("col", step, s_set), payload))
    return messages


def deliver(
    instance: ProblemInstance,
    config: ColConfig,
    library: Sequence[FieldMatrix],
    demands: DemandVector,
) -> DeliveryTranscript:
    p = col_params(instance)
    if instance.a <= 1:
        layout = _narrow_matrix_layout(instance)

        def get_block(i: int, subset: tuple[int, ...]) -> np.ndarray:
            e = layout.entry(subset)
            return library[i - 1].data[:, e.offset : e.offset + e.width]

        return DeliveryTranscript(tuple(_round_messages(instance, layout, demands, get_block, p.t)))
    lead_layout, coeff_layout = _wide_layouts(instance)
    leads: dict[int, np.ndarray] = {}
    coeffs: dict[int, np.ndarray] = {}
    for i in sorted({d for pair in demands.normalized for d in pair}):
        w = library[i - 1]
        perm = leading_block_column_permutation(w, instance.s)
        shuffled = apply_column_permutation(w, perm)
        w1 = shuffled.submatrix(slice(None), slice(0, instance.s))
        w2 = shuffled.submatrix(slice(None), slice(instance.s, instance.r))
        leads[i] = w1.data
        coeffs[i] = solve_columns(w1, w2).data

    def get_lead_block(i: int, subset: tuple[int, ...]) -> np.ndarray:
        e = lead_layout.entry(subset)
        return leads[i][:, e.offset : e.offset + e.width]

    messages = _round_messages(instance, lead_layout, demands, get_lead_block, p.t)
    messages.extend(
        _coeff_multicasts(instance, coeff_layout, demands, coeffs.__getitem__, "step2", 2)
    )
    messages.extend(
        _coeff_multicasts(instance, coeff_layout, demands, coeffs.__getitem__, "step3", 1)
    )
    return DeliveryTranscript(tuple(messages))


def _assemble_coeff(
    instance: ProblemInstance,
    coeff_layout: ColLayout,
    k: int,
    cache: UserCache,
    transcript: DeliveryTranscript,
    demands: DemandVector,
    step: str,
    slot: int,
) -> np.ndarray:
    """Rebuild the full coefficient matrix of user k's demanded matrix for the
    given slot from cached blocks plus the step's multicasts."""
    q, s = instance.field.q, instance.s
    d = demands.pair(k)[slot - 1]
    out = np.zeros((s, coeff_layout.total), dtype=np.int64)
    for e in coeff_layout.entries:
        if k in e.subset:
            block = cache.get(("coded-Q", d, e.subset))
        else:
            s_set = tuple(sorted(e.subset + (k,)))
            flat = transcript.find(("col", step, s_set)).payload.copy()
            for peer in e.subset:
                peer_d = demands.pair(peer)[slot - 1]
                peer_subset = tuple(u for u in s_set if u != peer)
                flat = (flat - cache.get(("coded-Q", peer_d, peer_subset)).ravel()) % q
            block = flat.reshape(s, e.width)
        out[:, e.offset : e.offset + e.width] = block
    return out


def decode(
    instance: ProblemInstance,
    config: ColConfig,
    k: int,
    cache: UserCache,
    transcript: DeliveryTranscript,
    demands: DemandVector,
) -> FieldMatrix:
    q, r = instance.field.q, instance.r
    d1, d2 = demands.pair(k)

    def cache_block(i: int, subset: tuple[int, ...]) -> np.ndarray:
        return cache.get(("raw-cols", i, subset))

    if instance.a <= 1:
        layout = _narrow_matrix_layout(instance)
        cached_subsets = {e.subset for e in layout.entries if k in e.subset}
        grid = _decode_grid(
            instance, layout, k, d1, d2, cache_block, transcript, demands, cached_subsets
        )
        return FieldMatrix(instance.field, grid)
    lead_layout, coeff_layout = _wide_layouts(instance)
    cached_subsets = {e.subset for e in lead_layout.entries if k in e.subset}
    t11 = _decode_grid(
        instance, lead_layout, k, d1, d2, cache_block, transcript, demands, cached_subsets
    )
    q2 = _assemble_coeff(instance, coeff_layout, k, cache, transcript, demands, "step2", 2)
    t12 = _matmul_mod(t11, q2, q)
    q1 = _assemble_coeff(instance, coeff_layout, k, cache, transcript, demands, "step3", 1)
    top = np.concatenate([t11, t12], axis=1)
    bottom = _matmul_mod(q1.T, top, q)
    shuffled = np.concatenate([top, bottom], axis=0)
    perms = cache.metadata["column-permutations"]
    perm1, perm2 = list(perms[d1]), list(perms[d2])
    out = np.zeros((r, r), dtype=np.int64)
    out[np.ix_(perm1, perm2)] = shuffled
    return FieldMatrix(instance.field, out)


def formula_load(instance: ProblemInstance, config: ColConfig) -> Fraction:
    from ..bounds import load_Rcol

    return load_Rcol(instance.K, instance.N, instance.a, instance.M)


def constraints(instance: ProblemInstance, config: ColConfig) -> Mapping[str, Fraction]:
    p = col_params(instance)
    out: dict[str, Fraction] = {}
    if instance.a <= 1:
        totals = [("r", instance.r)]
    else:
        totals = [("s", instance.s), ("(r-s)", instance.r - instance.s)]
    for name, total in totals:
        w1, w2 = tier_widths(p, instance.K, total)
        out[f"alpha*{name}/C(K,t)"] = w1
        if p.alpha < 1:
            out[f"(1-alpha)*{name}/C(K,t+1)"] = w2
    return out
