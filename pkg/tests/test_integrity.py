"""Checksum core, bit packing, and checksum-share directories."""

import random
import zlib

import numpy as np
import pytest

from regencode.errors import DecodeFailure, InvalidParams, NoMajority, TooShort
from regencode.integrity import (
    CODED,
    REPLICATED,
    CrcParams,
    bits_to_bytes,
    bits_to_int,
    bits_to_symbols,
    build_directory,
    bytes_to_bits,
    chunk_checksum,
    coded_layout,
    crc_append,
    crc_checksum,
    crc_linear,
    crc_verify,
    int_to_bits,
    recover_checksum,
    symbols_to_bits,
)

CRC32 = CrcParams()


def _reflect_bits(value, width):
    return sum(((value >> i) & 1) << (width - 1 - i) for i in range(width))


def oracle_crc(bits, r, poly):
    """Bit-by-bit long division in most-significant-first register form."""
    mask = (1 << r) - 1
    reg = mask
    for b in bits:
        top = (reg >> (r - 1)) & 1
        reg = ((reg << 1) & mask) ^ (poly if top ^ (int(b) & 1) else 0)
    return _reflect_bits(reg, r) ^ mask


def lsb_first_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")


# -- CRC core --------------------------------------------------------------


def test_crc32_matches_zlib_on_byte_streams():
    rng = random.Random(0xC4C)
    assert crc_checksum(np.zeros(0, dtype=np.uint8), CRC32) == zlib.crc32(b"") == 0
    for size in [1, 2, 3, 7, 8, 9, 63, 64, 65, 300]:
        data = rng.randbytes(size)
        assert crc_checksum(lsb_first_bits(data), CRC32) == zlib.crc32(data)


def test_crc_matches_long_division_oracle_all_widths():
    rng = random.Random(0x0A11)
    for r in (4, 8, 16, 32):
        params = CrcParams(r)
        for _ in range(25):
            bits = [rng.randrange(2) for _ in range(rng.randrange(0, 90))]
            assert crc_checksum(bits, params) == oracle_crc(bits, r, params.poly)


def test_crc_byte_table_agrees_with_bitwise_on_ragged_lengths():
    # lengths straddling byte boundaries exercise the table + tail split
    params = CrcParams(16)
    rng = random.Random(7)
    for nbits in range(0, 40):
        bits = [rng.randrange(2) for _ in range(nbits)]
        assert crc_checksum(bits, params) == oracle_crc(bits, 16, params.poly)


def test_append_verify_round_trip_and_single_bit_flips():
    rng = random.Random(3)
    for nbits in (0, 1, 17, 80):
        payload = np.array([rng.randrange(2) for _ in range(nbits)], dtype=np.uint8)
        ext = crc_append(payload, CRC32)
        assert len(ext) == nbits + 32
        assert crc_verify(ext, CRC32)
        for pos in range(len(ext)):
            flipped = ext.copy()
            flipped[pos] ^= 1
            assert not crc_verify(flipped, CRC32)


def test_verify_too_short():
    assert crc_verify(np.zeros(32, dtype=np.uint8), CrcParams(32)) is not None
    with pytest.raises(TooShort):
        crc_verify(np.zeros(31, dtype=np.uint8), CrcParams(32))


def test_crc_linearity():
    rng = random.Random(0x11)
    params = CrcParams(32)
    for _ in range(30):
        nbits = rng.randrange(1, 200)
        x = np.array([rng.randrange(2) for _ in range(nbits)], dtype=np.uint8)
        d1 = np.array([rng.randrange(2) for _ in range(nbits)], dtype=np.uint8)
        d2 = np.array([rng.randrange(2) for _ in range(nbits)], dtype=np.uint8)
        assert crc_checksum(x ^ d1, params) == crc_checksum(x, params) ^ crc_linear(
            d1, params
        )
        assert crc_linear(d1 ^ d2, params) == crc_linear(d1, params) ^ crc_linear(
            d2, params
        )
    assert crc_linear(np.zeros(64, dtype=np.uint8), params) == 0


def test_crc_params_validation():
    with pytest.raises(InvalidParams):
        CrcParams(5)  # no default polynomial
    with pytest.raises(InvalidParams):
        CrcParams(8, poly=0x100)  # does not fit truncated form
    with pytest.raises(InvalidParams):
        CrcParams(0)
    assert CrcParams(5, poly=0x15).r == 5


# -- bit packing -----------------------------------------------------------


def test_bit_helpers_round_trip():
    rng = random.Random(9)
    data = rng.randbytes(33)
    assert bits_to_bytes(bytes_to_bits(data)) == data
    for width in (1, 7, 32, 50):
        v = rng.randrange(1 << width)
        assert bits_to_int(int_to_bits(v, width)) == v
    with pytest.raises(InvalidParams):
        int_to_bits(16, 4)
    for m in (4, 8, 11):
        syms = [rng.randrange(1 << m) for _ in range(40)]
        bits = symbols_to_bits(syms, m)
        assert len(bits) == 40 * m
        assert bits_to_symbols(bits, m).tolist() == syms
    # explicit order check: symbol 0b1011 over m=4 is MSB first
    assert symbols_to_bits([0b1011], 4).tolist() == [1, 0, 1, 1]
    with pytest.raises(InvalidParams):
        bits_to_symbols([1, 0, 1], 2)


def test_chunk_checksum_equals_bit_serialisation():
    rng = random.Random(12)
    syms = np.array([[rng.randrange(16) for _ in range(6)] for _ in range(3)])
    expect = crc_checksum(symbols_to_bits(syms, 4), CRC32)
    assert chunk_checksum(syms, 4, CRC32) == expect


# -- directories -----------------------------------------------------------


def test_replicated_directory_share_counts_and_values():
    checksums = [0xA0 + i for i in range(3)]
    shares = build_directory(checksums, REPLICATED, CrcParams(8))
    for j in range(3):
        assert sorted(shares[j]) == [i for i in range(3) if i != j]
        for i, v in shares[j].items():
            assert v == checksums[i]
    # overhead is exactly (n-1) * r bits per node
    assert all(len(s) * 8 == 2 * 8 for s in shares)


def test_coded_layout_parameters():
    big = coded_layout(100, 32)
    assert (big.m_prime, big.k_prime) == (7, 5)
    assert (big.n - 1) * big.m_prime == 693  # per-node overhead in bits
    assert coded_layout(12, 8).m_prime == 4
    assert coded_layout(12, 8).k_prime == 2
    # 2^ceil(log2(n-1)) - 1 < n - 1 forces the symbol size up one bit
    assert coded_layout(5, 4).m_prime == 3
    with pytest.raises(InvalidParams):
        coded_layout(6, 32)  # k' = 11 shares cannot fit in 5 peers
    with pytest.raises(InvalidParams):
        coded_layout(2, 4)


def test_coded_directory_round_trip_and_overhead():
    rng = random.Random(0xD1)
    crc = CrcParams(8)
    checksums = [rng.randrange(1 << 8) for _ in range(12)]
    shares = build_directory(checksums, CODED, crc)
    layout = coded_layout(12, 8)
    for j in range(12):
        assert sorted(shares[j]) == [i for i in range(12) if i != j]
        for v in shares[j].values():
            assert 0 <= v < (1 << layout.m_prime)
    # fault-free recovery from any d subset of peers
    for i in (0, 5, 11):
        peers = [j for j in range(12) if j != i]
        for _ in range(10):
            sub = rng.sample(peers, 8)
            responses = {j: shares[j][i] for j in sub}
            assert recover_checksum(responses, i, CODED, 12, crc) == checksums[i]


def test_replicated_recovery_thresholds_exhaustive():
    crc = CrcParams(8)
    true_cs, forged = 0x5A, 0xC3
    for d in range(2, 8):
        budget = (d - 1) // 2
        for wrong in range(budget + 1):
            # all placements collapse to counts; try colluding and split forgers
            responses = {j: true_cs for j in range(d - wrong)}
            for t in range(wrong):
                responses[d - wrong + t] = forged
            assert recover_checksum(responses, 99, REPLICATED, 100, crc) == true_cs
        over = budget + 1
        responses = {j: true_cs for j in range(d - over)}
        for t in range(over):
            responses[d - over + t] = forged
        if 2 * over > d:  # d odd: colluders now hold the strict majority
            assert recover_checksum(responses, 99, REPLICATED, 100, crc) == forged
        else:  # d even: a tie, surfaced rather than broken silently
            with pytest.raises(NoMajority):
                recover_checksum(responses, 99, REPLICATED, 100, crc)


def test_replicated_split_forgers_yield_no_majority():
    crc = CrcParams(8)
    responses = {0: 0x11, 1: 0x11, 2: 0x22, 3: 0x33}
    with pytest.raises(NoMajority):
        recover_checksum(responses, 9, REPLICATED, 10, crc)


def test_coded_recovery_thresholds_randomized():
    rng = random.Random(0xBEEF)
    crc = CrcParams(8)
    n, d = 12, 8
    layout = coded_layout(n, 8)
    budget = (d - layout.k_prime) // 2  # 3
    checksums = [rng.randrange(1 << 8) for _ in range(n)]
    shares = build_directory(checksums, CODED, crc)
    for _ in range(200):
        i = rng.randrange(n)
        sub = rng.sample([j for j in range(n) if j != i], d)
        responses = {j: shares[j][i] for j in sub}
        for j in rng.sample(sub, rng.randrange(budget + 1)):
            responses[j] ^= rng.randrange(1, 1 << layout.m_prime)
        assert recover_checksum(responses, i, CODED, n, crc) == checksums[i]


def test_coded_recovery_defeated_beyond_threshold():
    rng = random.Random(0xFACE)
    crc = CrcParams(8)
    n, d = 12, 8
    layout = coded_layout(n, 8)
    budget = (d - layout.k_prime) // 2
    checksums = [rng.randrange(1 << 8) for _ in range(n)]
    shares = build_directory(checksums, CODED, crc)
    # budget+1 random corruptions: recovery is no longer guaranteed
    broke = 0
    for _ in range(60):
        i = rng.randrange(n)
        sub = rng.sample([j for j in range(n) if j != i], d)
        responses = {j: shares[j][i] for j in sub}
        for j in rng.sample(sub, budget + 1):
            responses[j] ^= rng.randrange(1, 1 << layout.m_prime)
        try:
            got = recover_checksum(responses, i, CODED, n, crc)
        except DecodeFailure:
            broke += 1
        else:
            broke += got != checksums[i]
    assert broke > 0
    # colluders aligned on another checksum's codeword force a wrong value
    i = 0
    forged_cs = checksums[i] ^ 0xFF
    from regencode.rscode import encode_eval

    forged_cw = encode_eval(layout.checksum_to_message(forged_cs), layout.code)
    peers = [j for j in range(1, n)]
    sub = peers[:d]
    responses = {j: forged_cw[j - 1] for j in sub[: d - 1]}
    responses[sub[d - 1]] = shares[sub[d - 1]][i]
    assert recover_checksum(responses, i, CODED, n, crc) == forged_cs


def test_recover_checksum_input_validation():
    crc = CrcParams(8)
    with pytest.raises(InvalidParams):
        recover_checksum({}, 0, REPLICATED, 6, crc)
    with pytest.raises(InvalidParams):
        recover_checksum({2: 1, 0: 1}, 2, REPLICATED, 6, crc)
    with pytest.raises(InvalidParams):
        recover_checksum({1: 1}, 0, "paritied", 6, crc)
    with pytest.raises(InvalidParams):
        build_directory([1, 2, 3], "paritied", crc)
