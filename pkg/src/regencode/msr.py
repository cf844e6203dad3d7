"""Minimum-storage regenerating code for d = 2k-2.

The B = α(α+1) message symbols (α = k-1 = d/2) fill two symmetric α×α
matrices A1, A2.  Row r of U = [A1 | A2] is encoded with the [n, d]
evaluation code, and node i stores column i of the resulting C = U·G,
which collapses to A1·g_i + λ_i·A2·g_i with g_i = (1, b_i, …, b_i^{α-1}),
b_i = a^i and λ_i = b_i^α.  Each of the β stripes carries an independent
U over the same node geometry.

Reconstruction from exactly k = α+1 columns needs no error decoding:
for accessed nodes i ≠ j the cross projections g_j·y_i and g_i·y_j
differ only in their A2 terms (the A1 terms cancel by symmetry), so
(λ_i + λ_j) divides out g_j·A2·g_i, and α such bilinear values pin down
A2·g_i through an invertible Vandermonde system; A1 follows the same
way.  When the checksum test rejects that result, the collector falls
back to per-row error-erasure decoding over progressively more columns.

Regeneration of node i downloads one symbol per stripe from each helper
j — the inner product g_i·y_j, which is coordinate j of the [n, d]
codeword (g_i·U)·G — decodes g_i·U, and re-derives the lost column.
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
    SingularMatrix,
    SingularSystem,
)
from .galois import GF
from .rscode import ProgressiveDecoder, RsParams, gf_inverse, invert_submatrix, vandermonde


class MsrParams:
    """Geometry, generator matrices, and fill maps for one deployment."""

    def __init__(self, n: int, k: int, d: int, beta: int, field: GF):
        if k < 2:
            raise InvalidParams(f"k={k} leaves no message symbols")
        if d != 2 * (k - 1):
            raise InvalidParams(f"construction requires d = 2k-2, got k={k}, d={d}")
        if not k <= d <= n - 1:
            raise InvalidParams(f"need k <= d <= n-1, got n={n}, k={k}, d={d}")
        if n > field.order - 1:
            raise InvalidParams(f"n={n} exceeds the {field.order - 1} nonzero points")
        if beta < 1:
            raise InvalidParams(f"beta={beta} must be positive")
        alpha = k - 1
        if field.m < (n * alpha - 1).bit_length():
            raise InvalidParams(
                f"m={field.m} too small for n*alpha={n * alpha}; powers would wrap"
            )
        self.n, self.k, self.d, self.beta = n, k, d, beta
        self.field = field
        self.alpha = alpha
        self.B = alpha * (alpha + 1)
        self.code = RsParams(n, d, field)
        self.G = vandermonde(self.code)  # d×n
        self.ghat_inv = invert_submatrix(self.G, range(d), field)
        self.gcols = self.G[:alpha, :]  # column i is g_i
        self.lam = field.exp_np[(np.arange(n, dtype=np.int64) * alpha) % field.order]
        if len(set(self.lam.tolist())) != n:
            raise InvalidParams("node multipliers lambda_i collide; enlarge the field")
        self.fill1, self.fill2 = _fill_maps(alpha)
        tri = np.triu_indices(alpha)
        self._canon1 = (tri[0], tri[1], self.fill1[tri])
        self._canon2 = (tri[0], tri[1], self.fill2[tri])

    def __repr__(self):
        return (
            f"MsrParams(n={self.n}, k={self.k}, d={self.d}, "
            f"beta={self.beta}, m={self.field.m})"
        )


def _fill_maps(alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Message index of every entry of A1 and A2 (symmetric completion)."""
    f1 = np.zeros((alpha, alpha), dtype=np.int64)
    f2 = np.zeros((alpha, alpha), dtype=np.int64)
    for i in range(1, alpha + 1):
        for j in range(i, alpha + 1):
            k1 = (i - 1) * (alpha + 1) - i * (i + 1) // 2 + j
            f1[i - 1, j - 1] = f1[j - 1, i - 1] = k1
            jj = j + alpha
            k2 = (alpha + 1) * (i - 1) + alpha * (alpha + 1) // 2 - i * (i + 1) // 2 + (jj - alpha)
            f2[i - 1, j - 1] = f2[j - 1, i - 1] = k2
    B = alpha * (alpha + 1)
    # the index maps must partition 0..B-1 between the two matrices
    assert sorted(set(f1.reshape(-1)) | set(f2.reshape(-1))) == list(range(B))
    return f1, f2


def build_u(message, params: MsrParams) -> tuple[np.ndarray, np.ndarray]:
    """Arrange B message symbols into the symmetric pair (A1, A2)."""
    msg = np.asarray(message, dtype=np.int64)
    if msg.shape != (params.B,):
        raise LengthMismatch(f"expected {params.B} message symbols, got {msg.shape}")
    return msg[params.fill1], msg[params.fill2]


def read_u(a1, a2, params: MsrParams) -> np.ndarray:
    """Inverse of build_u; reads the upper-triangle entries of each matrix."""
    out = np.zeros(params.B, dtype=np.int64)
    a1 = np.asarray(a1)
    a2 = np.asarray(a2)
    r1, c1, k1 = params._canon1
    r2, c2, k2 = params._canon2
    out[k1] = a1[r1, c1]
    out[k2] = a2[r2, c2]
    return out


def encode(stripes, params: MsrParams) -> np.ndarray:
    """Chunks for all nodes, shape (n, beta, alpha); stripes is beta×B."""
    stripes = np.asarray(stripes, dtype=np.int64)
    if stripes.shape != (params.beta, params.B):
        raise LengthMismatch(
            f"expected {params.beta}x{params.B} message stripes, got {stripes.shape}"
        )
    rows = []
    for s in range(params.beta):
        a1, a2 = build_u(stripes[s], params)
        rows.append(np.concatenate([a1, a2], axis=1))
    u_all = np.concatenate(rows, axis=0)  # (beta*alpha) × d
    c_all = params.field.matmul(u_all, params.G)  # (beta*alpha) × n
    return c_all.reshape(params.beta, params.alpha, params.n).transpose(2, 0, 1)


def reconstruct_fast(columns: dict[int, np.ndarray], params: MsrParams) -> np.ndarray:
    """Recover all beta message stripes from exactly k healthy columns.

    Always produces a candidate message (corrupt inputs yield a corrupt
    candidate for the checksum test to reject); never error-decodes.
    """
    field = params.field
    nodes = list(columns)
    if len(nodes) != params.k:
        raise LengthMismatch(f"fast path needs exactly k={params.k} columns")
    alpha, k = params.alpha, params.k
    m_rows = params.gcols[:, nodes].T  # row t = g_{nodes[t]}
    sub = nodes[:alpha]
    try:
        w_inv = gf_inverse(field, m_rows[:alpha].T)  # columns g_i, i in sub
        v_invs = []
        for t in range(alpha):
            others = [tt for tt in range(k) if tt != t]
            v_invs.append((others, gf_inverse(field, m_rows[others])))
    except SingularMatrix as e:  # defensive: distinct points make this impossible
        raise SingularSystem(str(e)) from e
    lam = [int(params.lam[i]) for i in nodes]
    out = np.zeros((params.beta, params.B), dtype=np.int64)
    for s in range(params.beta):
        ymat = np.stack([columns[i][s] for i in nodes], axis=1)  # alpha × k
        proj = field.matmul(m_rows, ymat)  # proj[j, t] = g_j · y_t
        zcols, wcols = [], []
        for t in range(alpha):
            others, v_inv = v_invs[t]
            q = [
                field.div(proj[o, t] ^ proj[t, o], lam[o] ^ lam[t]) for o in others
            ]
            r = [proj[o, t] ^ field.mul(lam[t], qv) for o, qv in zip(others, q)]
            zcols.append(field.matmul(v_inv, np.array([q], dtype=np.int64).T)[:, 0])
            wcols.append(field.matmul(v_inv, np.array([r], dtype=np.int64).T)[:, 0])
        a2 = field.matmul(np.stack(zcols, axis=1), w_inv)
        a1 = field.matmul(np.stack(wcols, axis=1), w_inv)
        out[s] = read_u(a1, a2, params)
    return out


def _decode_all_rows(decoders, params: MsrParams) -> np.ndarray:
    """Run every per-row decoder; fail fast on the first undecodable row."""
    field = params.field
    stripes = np.zeros((params.beta, params.B), dtype=np.int64)
    for s in range(params.beta):
        chat = np.zeros((params.alpha, params.d), dtype=np.int64)
        for r in range(params.alpha):
            outcome = decoders[s][r].attempt()
            chat[r] = outcome.codeword[: params.d]
        u_tilde = field.matmul(chat, params.ghat_inv)
        stripes[s] = read_u(u_tilde[:, : params.alpha], u_tilde[:, params.alpha :], params)
    return stripes


def reconstruct(collector, params: MsrParams, verify) -> tuple[np.ndarray, int]:
    """Progressive reconstruction; verify(stripes) is the acceptance test.

    Returns (stripes, decode_rounds).  Raises ClusterExhausted once every
    reachable node has been read without producing a verified message.
    """
    first = dict(collector.fetch(params.k))
    if len(first) < params.k:
        raise ClusterExhausted(
            f"only {len(first)} of the k={params.k} columns needed are reachable"
        )
    rounds = 1
    stripes = reconstruct_fast(first, params)
    if verify(stripes):
        return stripes, rounds
    decoders = [
        [ProgressiveDecoder(params.code) for _ in range(params.alpha)]
        for _ in range(params.beta)
    ]
    for idx, chunk in first.items():
        _absorb_columns(decoders, {idx: chunk}, params)
    count = params.k
    want = (params.d - count) + 2  # top up to d, plus the two of the first round
    while True:
        got = dict(collector.fetch(want))
        if not got:
            raise ClusterExhausted(f"no verified message after reading {count} nodes")
        _absorb_columns(decoders, got, params)
        count += len(got)
        rounds += 1
        try:
            stripes = _decode_all_rows(decoders, params)
        except DecodeFailure:
            stripes = None
        if stripes is not None and verify(stripes):
            return stripes, rounds
        if len(got) < want:
            raise ClusterExhausted(f"no verified message after reading {count} nodes")
        want = 2


def _absorb_columns(decoders, got: dict[int, np.ndarray], params: MsrParams):
    for s in range(params.beta):
        for r in range(params.alpha):
            batch = {idx: int(chunk[s][r]) for idx, chunk in got.items()}
            decoders[s][r].absorb(batch)


def repair_response(chunk, holder: int, failed: int, params: MsrParams) -> np.ndarray:
    """Helper's per-stripe download: inner product of its column with g_failed."""
    if holder == failed:
        raise SelfRepair(f"node {failed} cannot help regenerate itself")
    g = params.gcols[:, failed : failed + 1]  # alpha × 1
    chunk = np.asarray(chunk, dtype=np.int64)
    return params.field.matmul(chunk, g)[:, 0]


def regenerate(source, failed: int, params: MsrParams, recover, chunk_crc) -> tuple[np.ndarray, int]:
    """Rebuild node `failed` exactly from helper responses.

    recover(helpers) returns the node's checksum once enough shares are
    in hand (None before that); chunk_crc(chunk) is the candidate's
    checksum.  Returns (chunk, decode_rounds).
    """
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
        chunk = None
        try:
            chunk = np.zeros((params.beta, params.alpha), dtype=np.int64)
            for s in range(params.beta):
                cw = decoders[s].attempt().codeword[: params.d]
                t = field.matmul(np.array([cw], dtype=np.int64), params.ghat_inv)[0]
                lam = int(params.lam[failed])
                chunk[s] = t[: params.alpha] ^ field.vmul(
                    np.full(params.alpha, lam, dtype=np.int64), t[params.alpha :]
                )
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
