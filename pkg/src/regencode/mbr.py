"""Minimum-bandwidth regenerating code for any k <= d.

The B = kd - k(k-1)/2 message symbols fill a symmetric d×d matrix

    U = [[A1, A2ᵀ],
         [A2,  0 ]]

with A1 k×k symmetric and A2 (d-k)×k.  Node i stores column i of
C = U·G under the [n, d] evaluation code; per-node storage is α = d
symbols per stripe, but repair needs only one symbol per helper.

Because the right blocks of U's bottom rows are zero, rows k..d-1 of C
are codewords of the [n, k] code.  Reconstruction therefore runs in two
phases on the same accessed columns: decode the bottom rows to get A2,
subtract A2ᵀ·(bottom rows of G) from the top rows — leaving A1·G_k —
and decode those to get A1.  Regeneration works exactly as in the MSR
family except the decoded vector g_i·U, transposed via U's symmetry,
*is* the lost column.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    ChecksumUnrecoverable,
    ClusterExhausted,
    DecodeFailure,
    InvalidParams,
    LengthMismatch,
    SelfRepair,
)
from .galois import GF
from .rscode import ProgressiveDecoder, RsParams, invert_submatrix, vandermonde


class MbrParams:
    """Geometry, generator matrices, and fill maps for one deployment."""

    def __init__(self, n: int, k: int, d: int, beta: int, field: GF):
        if k < 1:
            raise InvalidParams(f"k={k} must be positive")
        if not k <= d <= n - 1:
            raise InvalidParams(f"need k <= d <= n-1, got n={n}, k={k}, d={d}")
        if n > field.order - 1:
            raise InvalidParams(f"n={n} exceeds the {field.order - 1} nonzero points")
        if beta < 1:
            raise InvalidParams(f"beta={beta} must be positive")
        self.n, self.k, self.d, self.beta = n, k, d, beta
        self.field = field
        self.alpha = d
        self.B = k * d - k * (k - 1) // 2
        self.code = RsParams(n, d, field)
        self.code_k = RsParams(n, k, field)
        self.G = vandermonde(self.code)  # d×n
        self.bottom = self.G[k:d, :]  # rows multiplying A2ᵀ
        self.ghat_inv = invert_submatrix(self.G, range(d), field)
        self.ghat_k_inv = invert_submatrix(self.G[:k], range(k), field)
        self.fill1, self.fill2 = _fill_maps(k, d)
        tri = np.triu_indices(k)
        self._canon1 = (tri[0], tri[1], self.fill1[tri])

    def __repr__(self):
        return (
            f"MbrParams(n={self.n}, k={self.k}, d={self.d}, "
            f"beta={self.beta}, m={self.field.m})"
        )


def _fill_maps(k: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Message index of every entry of A1 (k×k) and A2 ((d-k)×k)."""
    f1 = np.zeros((k, k), dtype=np.int64)
    for i in range(1, k + 1):
        for j in range(i, k + 1):
            k1 = (i - 1) * (k + 1) - i * (i + 1) // 2 + j
            f1[i - 1, j - 1] = f1[j - 1, i - 1] = k1
    f2 = np.zeros((d - k, k), dtype=np.int64)
    for i in range(k + 1, d + 1):
        for j in range(1, k + 1):
            # the row-major offset overshoots by one; shift back so the
            # combined map lands exactly on 0..B-1
            k2 = (i - k - 1) * k + k * (k + 1) // 2 + j - 1
            f2[i - k - 1, j - 1] = k2
    B = k * d - k * (k - 1) // 2
    assert sorted(set(f1.reshape(-1)) | set(f2.reshape(-1))) == list(range(B))
    return f1, f2


def build_u(message, params: MbrParams) -> tuple[np.ndarray, np.ndarray]:
    """Arrange B message symbols into (A1, A2)."""
    msg = np.asarray(message, dtype=np.int64)
    if msg.shape != (params.B,):
        raise LengthMismatch(f"expected {params.B} message symbols, got {msg.shape}")
    return msg[params.fill1], msg[params.fill2]


def read_u(a1, a2, params: MbrParams) -> np.ndarray:
    """Inverse of build_u; A1 is read from its upper triangle, A2 in full."""
    out = np.zeros(params.B, dtype=np.int64)
    r1, c1, k1 = params._canon1
    out[k1] = np.asarray(a1)[r1, c1]
    out[params.fill2] = a2
    return out


def assemble_u(a1, a2, params: MbrParams) -> np.ndarray:
    """The full symmetric d×d information matrix."""
    dk = params.d - params.k
    zero = np.zeros((dk, dk), dtype=np.int64)
    return np.block([[np.asarray(a1), np.asarray(a2).T], [np.asarray(a2), zero]])


def encode(stripes, params: MbrParams) -> np.ndarray:
    """Chunks for all nodes, shape (n, beta, d); stripes is beta×B."""
    stripes = np.asarray(stripes, dtype=np.int64)
    if stripes.shape != (params.beta, params.B):
        raise LengthMismatch(
            f"expected {params.beta}x{params.B} message stripes, got {stripes.shape}"
        )
    rows = []
    for s in range(params.beta):
        a1, a2 = build_u(stripes[s], params)
        rows.append(assemble_u(a1, a2, params))
    u_all = np.concatenate(rows, axis=0)  # (beta*d) × d
    c_all = params.field.matmul(u_all, params.G)
    return c_all.reshape(params.beta, params.d, params.n).transpose(2, 0, 1)


def _attempt(params: MbrParams, received: dict[int, np.ndarray], hi_decoders):
    """One two-phase decode over the columns read so far; None on failure."""
    field = params.field
    k, d = params.k, params.d
    stripes = np.zeros((params.beta, params.B), dtype=np.int64)
    try:
        for s in range(params.beta):
            cw_hi = np.zeros((d - k, k), dtype=np.int64)
            for r in range(d - k):
                cw_hi[r] = hi_decoders[s][r].attempt().codeword[:k]
            a2 = field.matmul(cw_hi, params.ghat_k_inv)  # (d-k)×k
            # strip the A2ᵀ contribution; the top rows become A1·G_k
            e_full = field.matmul(a2.T, params.bottom)  # k×n
            cw_lo = np.zeros((k, k), dtype=np.int64)
            for r in range(k):
                dec = ProgressiveDecoder(params.code_k)
                dec.absorb(
                    {p: int(col[s][r]) ^ int(e_full[r, p]) for p, col in received.items()}
                )
                cw_lo[r] = dec.attempt().codeword[:k]
            a1 = field.matmul(cw_lo, params.ghat_k_inv)
            stripes[s] = read_u(a1, a2, params)
        return stripes
    except DecodeFailure:
        return None


def reconstruct(collector, params: MbrParams, verify) -> tuple[np.ndarray, int]:
    """Two-phase progressive reconstruction from k columns upward."""
    hi_decoders = [
        [ProgressiveDecoder(params.code_k) for _ in range(params.d - params.k)]
        for _ in range(params.beta)
    ]
    received: dict[int, np.ndarray] = {}
    got = dict(collector.fetch(params.k))
    _absorb(hi_decoders, received, got, params)
    count, partial = len(got), len(got) < params.k
    rounds = 0
    while True:
        rounds += 1
        stripes = _attempt(params, received, hi_decoders) if count else None
        if stripes is not None and verify(stripes):
            return stripes, rounds
        if partial:
            raise ClusterExhausted(f"no verified message after reading {count} nodes")
        got = dict(collector.fetch(2))
        if not got:
            raise ClusterExhausted(f"no verified message after reading {count} nodes")
        _absorb(hi_decoders, received, got, params)
        count += len(got)
        partial = len(got) < 2


def _absorb(hi_decoders, received, got, params: MbrParams):
    received.update(got)
    for s in range(params.beta):
        for r in range(params.d - params.k):
            batch = {p: int(col[s][params.k + r]) for p, col in got.items()}
            hi_decoders[s][r].absorb(batch)


def repair_response(chunk, holder: int, failed: int, params: MbrParams) -> np.ndarray:
    """Helper's per-stripe download: inner product with the full column g_failed."""
    if holder == failed:
        raise SelfRepair(f"node {failed} cannot help regenerate itself")
    g = params.G[:, failed : failed + 1]  # d × 1
    chunk = np.asarray(chunk, dtype=np.int64)
    return params.field.matmul(chunk, g)[:, 0]


def regenerate(source, failed: int, params: MbrParams, recover, chunk_crc) -> tuple[np.ndarray, int]:
    """Rebuild node `failed` exactly; by U's symmetry the decoded g_i·U
    transposes into the stored column itself."""
    field = params.field
    decoders = [ProgressiveDecoder(params.code) for _ in range(params.beta)]
    helpers: list[int] = []
    checksum = None
    count, rounds, want = 0, 0, params.d
    while True:
        got = source.fetch(want)
        if not got:
            if not count:
                raise ClusterExhausted(f"node {failed} has no reachable helpers")
            if checksum is None:
                raise ChecksumUnrecoverable(
                    f"checksum of node {failed} undetermined after {count} helpers"
                )
            raise ClusterExhausted(f"no verified chunk after {count} helpers")
        for j, resp in got:
            if j == failed:
                raise SelfRepair(f"node {failed} cannot help regenerate itself")
            helpers.append(j)
            for s in range(params.beta):
                decoders[s].absorb({j: int(resp[s])})
        count += len(got)
        rounds += 1
        if checksum is None:
            checksum = recover(helpers)
        try:
            chunk = np.zeros((params.beta, params.d), dtype=np.int64)
            for s in range(params.beta):
                cw = decoders[s].attempt().codeword[: params.d]
                chunk[s] = field.matmul(
                    np.array([cw], dtype=np.int64), params.ghat_inv
                )[0]
        except DecodeFailure:
            chunk = None
        if chunk is not None and checksum is not None and chunk_crc(chunk) == checksum:
            return chunk, rounds
        if len(got) < want:
            if checksum is None:
                raise ChecksumUnrecoverable(
                    f"checksum of node {failed} undetermined after {count} helpers"
                )
            raise ClusterExhausted(f"no verified chunk after {count} helpers")
        want = 2
