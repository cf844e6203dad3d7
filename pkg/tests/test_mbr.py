"""Minimum-bandwidth family: block-symmetric fill, two-phase
reconstruction, and symmetry-based regeneration."""

import itertools
import random

import numpy as np
import pytest

from regencode import mbr
from regencode.errors import (
    ClusterExhausted,
    InvalidParams,
    LengthMismatch,
    SelfRepair,
)
from regencode.galois import GF
from regencode.integrity import CrcParams, chunk_checksum
from regencode.rscode import encode_eval

F16 = GF(4)
CRC32 = CrcParams()


def small_params(beta=1):
    return mbr.MbrParams(6, 3, 4, beta, F16)


def rand_msg(rng, params):
    return np.array(
        [[rng.randrange(params.field.order) for _ in range(params.B)]
         for _ in range(params.beta)],
        dtype=np.int64,
    )


class ListCollector:
    def __init__(self, chunks, order):
        self.items = [(i, chunks[i]) for i in order]
        self.pos = 0

    def fetch(self, count):
        out = self.items[self.pos : self.pos + count]
        self.pos += len(out)
        return out


class ListSource(ListCollector):
    def __init__(self, items):
        self.items = list(items)
        self.pos = 0


def truth_verify(truth):
    return lambda stripes: np.array_equal(stripes, truth)


def test_params_validation():
    with pytest.raises(InvalidParams):
        mbr.MbrParams(6, 5, 4, 1, F16)  # k > d
    with pytest.raises(InvalidParams):
        mbr.MbrParams(4, 3, 4, 1, F16)  # d > n-1
    with pytest.raises(InvalidParams):
        mbr.MbrParams(16, 3, 4, 1, F16)
    with pytest.raises(InvalidParams):
        mbr.MbrParams(6, 3, 4, 0, F16)
    p = small_params()
    assert (p.alpha, p.B) == (4, 9)
    assert mbr.MbrParams(6, 3, 3, 1, F16).B == 6  # degenerate d = k


def test_fill_maps_frozen_k3_d4():
    p = small_params()
    assert p.fill1.tolist() == [[0, 1, 2], [1, 3, 4], [2, 4, 5]]
    assert p.fill2.tolist() == [[6, 7, 8]]


def test_build_read_round_trip_and_symmetry():
    rng = random.Random(1)
    for n, k, d in [(6, 3, 4), (8, 3, 4), (9, 4, 7), (6, 3, 3)]:
        p = mbr.MbrParams(n, k, d, 1, GF(4))
        msg = rand_msg(rng, p)[0]
        a1, a2 = mbr.build_u(msg, p)
        u = mbr.assemble_u(a1, a2, p)
        assert np.array_equal(u, u.T)
        assert not u[k:, k:].any()  # zero corner
        assert np.array_equal(mbr.read_u(a1, a2, p), msg)
    with pytest.raises(LengthMismatch):
        mbr.build_u([0], small_params())


def test_encode_zero_and_rs_oracle():
    rng = random.Random(2)
    p = small_params(beta=2)
    assert not mbr.encode(np.zeros((2, p.B), dtype=np.int64), p).any()
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    assert chunks.shape == (p.n, p.beta, p.d)
    for s in range(p.beta):
        a1, a2 = mbr.build_u(msg[s], p)
        u = mbr.assemble_u(a1, a2, p)
        for r in range(p.d):
            cw = encode_eval(u[r].tolist(), p.code)
            for i in range(p.n):
                assert chunks[i][s][r] == cw[i]
        # bottom rows carry polynomials of degree < k
        for r in range(p.k, p.d):
            assert encode_eval(u[r][: p.k].tolist(), p.code_k) == encode_eval(
                u[r].tolist(), p.code
            )


def test_phase_two_input_is_a1_code():
    # after subtracting the A2 contribution, the top rows must match the
    # encoding of A1 alone under the [n, k] code
    rng = random.Random(3)
    p = small_params()
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    a1, a2 = mbr.build_u(msg[0], p)
    e_full = p.field.matmul(a2.T, p.bottom)
    a1_cw = p.field.matmul(a1, p.G[: p.k])
    for i in range(p.n):
        stripped = chunks[i][0][: p.k] ^ e_full[:, i]
        assert np.array_equal(stripped, a1_cw[:, i])


def test_reconstruct_fault_free_all_subsets():
    rng = random.Random(4)
    p = small_params(beta=2)
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    for subset in itertools.combinations(range(p.n), p.k):
        coll = ListCollector(chunks, subset)
        out, rounds = mbr.reconstruct(coll, p, truth_verify(msg))
        assert np.array_equal(out, msg)
        assert rounds == 1
        assert coll.pos == p.k


def test_reconstruct_one_byzantine_any_position():
    rng = random.Random(5)
    p = small_params()
    msg = rand_msg(rng, p)
    clean = mbr.encode(msg, p)
    for byz in range(p.n):
        chunks = clean.copy()
        chunks[byz] ^= np.array(
            [[rng.randrange(1, p.field.order) for _ in range(p.d)]]
        )
        coll = ListCollector(chunks, range(p.n))
        out, rounds = mbr.reconstruct(coll, p, truth_verify(msg))
        assert np.array_equal(out, msg)
        assert rounds == (1 if byz >= p.k else 2)


def test_reconstruct_two_byzantine_exhausts():
    rng = random.Random(6)
    p = small_params()
    msg = rand_msg(rng, p)
    clean = mbr.encode(msg, p)
    for pair in itertools.combinations(range(p.k), 2):  # inside the first read
        chunks = clean.copy()
        for byz in pair:
            chunks[byz] ^= np.array(
                [[rng.randrange(1, p.field.order) for _ in range(p.d)]]
            )
        coll = ListCollector(chunks, range(p.n))
        with pytest.raises(ClusterExhausted):
            mbr.reconstruct(coll, p, truth_verify(msg))


def test_reconstruct_degenerate_d_equals_k():
    rng = random.Random(7)
    p = mbr.MbrParams(6, 3, 3, 2, F16)
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    coll = ListCollector(chunks, [4, 0, 2])
    out, rounds = mbr.reconstruct(coll, p, truth_verify(msg))
    assert np.array_equal(out, msg) and rounds == 1


def test_repair_response_properties():
    rng = random.Random(8)
    p = small_params(beta=2)
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    with pytest.raises(SelfRepair):
        mbr.repair_response(chunks[1], 1, 1, p)
    assert np.array_equal(
        mbr.repair_response(chunks[2], 2, 0, p),
        np.bitwise_xor.reduce(chunks[2], axis=1),
    )
    for failed in range(p.n):
        for s in range(p.beta):
            a1, a2 = mbr.build_u(msg[s], p)
            u = mbr.assemble_u(a1, a2, p)
            g = p.G[:, failed : failed + 1].T
            t = p.field.matmul(g, u)[0]
            cw = encode_eval(t.tolist(), p.code)
            for j in range(p.n):
                if j != failed:
                    assert mbr.repair_response(chunks[j], j, failed, p)[s] == cw[j]


def test_regenerate_fault_free_exhaustive():
    rng = random.Random(9)
    p = small_params(beta=2)
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    checksums = [chunk_checksum(chunks[i], p.field.m, CRC32) for i in range(p.n)]
    crc_of = lambda ch: chunk_checksum(ch, p.field.m, CRC32)
    for failed in range(p.n):
        helpers = [j for j in range(p.n) if j != failed]
        for subset in itertools.combinations(helpers, p.d):
            src = ListSource(
                [(j, mbr.repair_response(chunks[j], j, failed, p)) for j in subset]
            )
            chunk, rounds = mbr.regenerate(
                src, failed, p, lambda h: checksums[failed], crc_of
            )
            assert np.array_equal(chunk, chunks[failed])
            assert rounds == 1


def test_regenerate_one_byzantine_escalates():
    rng = random.Random(10)
    p = mbr.MbrParams(8, 3, 4, 1, F16)
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    checksums = [chunk_checksum(chunks[i], p.field.m, CRC32) for i in range(p.n)]
    crc_of = lambda ch: chunk_checksum(ch, p.field.m, CRC32)
    failed = 2
    helpers = [j for j in range(p.n) if j != failed]
    for byz in helpers:
        responses = []
        for j in helpers:
            r = mbr.repair_response(chunks[j], j, failed, p)
            if j == byz:
                r = r ^ np.array([rng.randrange(1, p.field.order)])
            responses.append((j, r))
        src = ListSource(responses)
        chunk, rounds = mbr.regenerate(
            src, failed, p, lambda h: checksums[failed], crc_of
        )
        assert np.array_equal(chunk, chunks[failed])
        assert rounds <= 2  # d + 2 responses cover one wrong symbol


def test_regenerated_chunk_reserves_reconstruction():
    rng = random.Random(11)
    p = small_params()
    msg = rand_msg(rng, p)
    chunks = mbr.encode(msg, p)
    checksums = [chunk_checksum(chunks[i], p.field.m, CRC32) for i in range(p.n)]
    crc_of = lambda ch: chunk_checksum(ch, p.field.m, CRC32)
    failed = 5
    src = ListSource(
        [(j, mbr.repair_response(chunks[j], j, failed, p)) for j in range(p.d)]
    )
    chunk, _ = mbr.regenerate(src, failed, p, lambda h: checksums[failed], crc_of)
    rebuilt = chunks.copy()
    rebuilt[failed] = chunk
    coll = ListCollector(rebuilt, [5, 1, 0])
    out, _ = mbr.reconstruct(coll, p, truth_verify(msg))
    assert np.array_equal(out, msg)
