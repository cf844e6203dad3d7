"""Chunk file serialization.

Each node's stored state lives in one self-describing file: a fixed header
carrying every code parameter (so a decoder needs no side channel — the
generator matrix column is regenerable from the node index and the field
generator), followed by the packed chunk symbols and the node's checksum
shares.

Layout (all integers big-endian):

    magic "RGEN" | version u8 | family u8 | m u8 | generator u8 |
    prim_poly u32 | n u16 | k u16 | d u16 | beta u32 | r u8 |
    crc_poly u64 | scheme u8 | node_index u16 | payload_bit_len u64

Body: ``beta * alpha`` symbols in stripe-major order, each in ceil(m/8)
bytes most-significant-bit-first; then n-1 checksum shares in ascending
owner order, each in ceil(r/8) bytes (replicated scheme) or ceil(m'/8)
bytes (coded scheme).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MalformedChunk
from .galois import GF
from .integrity import CODED, REPLICATED, CrcParams, checksum_code_size
from .mbr import MbrParams
from .msr import MsrParams

MAGIC = b"RGEN"
VERSION = 1
_HEADER = struct.Struct(">4sBBBBIHHHIBQBHQ")
_FAMILY_CODES = {"msr": 0, "mbr": 1}
_FAMILY_NAMES = {v: f for f, v in _FAMILY_CODES.items()}
_SCHEME_CODES = {REPLICATED: 0, CODED: 1}
_SCHEME_NAMES = {v: s for s, v in _SCHEME_CODES.items()}


@dataclass(frozen=True)
class ChunkHeader:
    family: str
    m: int
    generator: int
    prim_poly: int
    n: int
    k: int
    d: int
    beta: int
    r: int
    crc_poly: int
    scheme: str
    node_index: int
    payload_bit_len: int

    @property
    def alpha(self) -> int:
        return self.d - self.k + 1 if self.family == "msr" else self.d

    @property
    def symbol_bytes(self) -> int:
        return (self.m + 7) // 8

    @property
    def share_bytes(self) -> int:
        if self.scheme == REPLICATED:
            return (self.r + 7) // 8
        m_prime, _ = checksum_code_size(self.n, self.r)
        return (m_prime + 7) // 8

    def body_size(self) -> int:
        return (
            self.beta * self.alpha * self.symbol_bytes
            + (self.n - 1) * self.share_bytes
        )


def header_for_state(state, node_index: int) -> ChunkHeader:
    """Header describing one node of an in-memory cluster."""
    p = state.params
    return ChunkHeader(
        family=state.family,
        m=p.field.m,
        generator=p.field.generator,
        prim_poly=p.field.prim_poly,
        n=p.n,
        k=p.k,
        d=p.d,
        beta=p.beta,
        r=state.crc.r,
        crc_poly=state.crc.poly,
        scheme=state.scheme,
        node_index=node_index,
        payload_bit_len=state.payload_bit_len,
    )


def params_from_header(h: ChunkHeader):
    """(code params, CrcParams) reconstructed from a header."""
    field = GF(h.m, h.prim_poly, h.generator)
    cls = MsrParams if h.family == "msr" else MbrParams
    return cls(h.n, h.k, h.d, h.beta, field), CrcParams(h.r, h.crc_poly)


def pack_chunk(header: ChunkHeader, chunk, shares: dict[int, int]) -> bytes:
    head = _HEADER.pack(
        MAGIC,
        VERSION,
        _FAMILY_CODES[header.family],
        header.m,
        header.generator,
        header.prim_poly,
        header.n,
        header.k,
        header.d,
        header.beta,
        header.r,
        header.crc_poly,
        _SCHEME_CODES[header.scheme],
        header.node_index,
        header.payload_bit_len,
    )
    chunk = np.asarray(chunk, dtype=np.int64)
    if chunk.shape != (header.beta, header.alpha):
        raise MalformedChunk(
            f"chunk shape {chunk.shape} does not match "
            f"(beta, alpha) = ({header.beta}, {header.alpha})"
        )
    owners = [i for i in range(header.n) if i != header.node_index]
    if sorted(shares) != owners:
        raise MalformedChunk(
            f"shares must cover exactly the other {header.n - 1} nodes"
        )
    sw = header.symbol_bytes
    body = b"".join(int(x).to_bytes(sw, "big") for x in chunk.reshape(-1))
    bw = header.share_bytes
    body += b"".join(int(shares[i]).to_bytes(bw, "big") for i in owners)
    return head + body


def unpack_chunk(data: bytes) -> tuple[ChunkHeader, np.ndarray, dict[int, int]]:
    if len(data) < _HEADER.size:
        raise MalformedChunk(f"file too short for header ({len(data)} bytes)")
    (magic, version, family_code, m, generator, prim_poly, n, k, d, beta, r,
     crc_poly, scheme_code, node_index, bit_len) = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedChunk(f"bad magic {magic!r}")
    if version != VERSION:
        raise MalformedChunk(f"unsupported format version {version}")
    if family_code not in _FAMILY_NAMES:
        raise MalformedChunk(f"unknown family code {family_code}")
    if scheme_code not in _SCHEME_NAMES:
        raise MalformedChunk(f"unknown scheme code {scheme_code}")
    if node_index >= n:
        raise MalformedChunk(f"node index {node_index} out of range for n={n}")
    header = ChunkHeader(
        family=_FAMILY_NAMES[family_code],
        m=m,
        generator=generator,
        prim_poly=prim_poly,
        n=n,
        k=k,
        d=d,
        beta=beta,
        r=r,
        crc_poly=crc_poly,
        scheme=_SCHEME_NAMES[scheme_code],
        node_index=node_index,
        payload_bit_len=bit_len,
    )
    body = data[_HEADER.size :]
    if len(body) != header.body_size():
        raise MalformedChunk(
            f"body has {len(body)} bytes, layout requires {header.body_size()}"
        )
    sw = header.symbol_bytes
    count = header.beta * header.alpha
    flat = [
        int.from_bytes(body[i * sw : (i + 1) * sw], "big") for i in range(count)
    ]
    if any(x >> m for x in flat):
        raise MalformedChunk(f"symbol exceeds {m} bits")
    chunk = np.array(flat, dtype=np.int64).reshape(header.beta, header.alpha)
    off = count * sw
    bw = header.share_bytes
    shares = {}
    for pos, owner in enumerate(i for i in range(n) if i != node_index):
        raw = body[off + pos * bw : off + (pos + 1) * bw]
        shares[owner] = int.from_bytes(raw, "big")
    return header, chunk, shares


def read_chunk_file(path) -> tuple[ChunkHeader, np.ndarray, dict[int, int]]:
    with open(path, "rb") as fh:
        return unpack_chunk(fh.read())


def write_chunk_file(path, header: ChunkHeader, chunk, shares) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_chunk(header, chunk, shares))
