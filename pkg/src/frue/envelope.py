"""Binary file envelopes for keys, tokens, and ciphertexts.

Layout: magic "FRUE", version byte, kind byte, paramset id (2 bytes LE),
epoch (4 bytes LE), then the payload.  Payloads are concatenated matrix
records in the fixed per-kind order below; matrix records are the layout
from matrix.MatrixZq.to_bytes.  Seeds are 16 raw bytes.  Parsing is strict:
bad magic, unknown kind or id, short payloads, trailing bytes, and shape
mismatches against the parameter set all raise MalformedEnvelopeError.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .matrix import MatrixZq
from .params import ParamSet, UnknownParamSetError, load_by_id, params_dump
from .ue import EpochKey, UeCiphertext, UpdateToken

MAGIC = b"FRUE"
VERSION = 1

KIND_PARAMSET = 1
KIND_EPOCH_KEY = 2
KIND_PUBLIC_KEY = 3
KIND_TOKEN = 4
KIND_CIPHERTEXT = 5

KIND_NAMES = {
    KIND_PARAMSET: "paramset",
    KIND_EPOCH_KEY: "epoch-key",
    KIND_PUBLIC_KEY: "public-key",
    KIND_TOKEN: "token",
    KIND_CIPHERTEXT: "ciphertext",
}

A_SEED_LEN = 16

_HEADER = struct.Struct("<4sBBHI")  # magic, version, kind, paramset_id, epoch


class MalformedEnvelopeError(ValueError):
    """Envelope bytes do not parse as a well-formed record."""


@dataclass(frozen=True)
class Envelope:
    kind: int
    p: ParamSet
    epoch: int
    payload: object     # per-kind object, see read_envelope


def _header(kind: int, p: ParamSet, epoch: int) -> bytes:
    return _HEADER.pack(MAGIC, VERSION, kind, p.paramset_id, epoch)


def pack_paramset(p: ParamSet) -> bytes:
    return _header(KIND_PARAMSET, p, 0) + params_dump(p).encode()


def pack_epoch_key(p: ParamSet, key: EpochKey, a_seed: bytes) -> bytes:
    _expect_seed(a_seed)
    return (_header(KIND_EPOCH_KEY, p, key.epoch)
            + key.sk_S.to_bytes() + key.pk_B.to_bytes() + a_seed)


def pack_public_key(p: ParamSet, epoch: int, pk_B: MatrixZq, a_seed: bytes) -> bytes:
    _expect_seed(a_seed)
    return _header(KIND_PUBLIC_KEY, p, epoch) + pk_B.to_bytes() + a_seed


def pack_token(p: ParamSet, tok: UpdateToken) -> bytes:
    return (_header(KIND_TOKEN, p, tok.epoch)
            + tok.d1_a.to_bytes() + tok.d1_b.to_bytes()
            + tok.d2_a.to_bytes() + tok.d2_b.to_bytes())


def pack_ciphertext(p: ParamSet, ct: UeCiphertext) -> bytes:
    return _header(KIND_CIPHERTEXT, p, ct.epoch) + ct.C1.to_bytes() + ct.C2.to_bytes()


def _expect_seed(a_seed: bytes) -> None:
    if len(a_seed) != A_SEED_LEN:
        raise MalformedEnvelopeError(f"a_seed must be {A_SEED_LEN} bytes")


def _matrix(buf: bytes, offset: int, shape: tuple[int, int], D: int,
            what: str) -> tuple[MatrixZq, int]:
    try:
        m, offset = MatrixZq.from_bytes_at(buf, offset)
    except ValueError as exc:
        raise MalformedEnvelopeError(f"{what}: {exc}") from None
    if m.shape != shape or m.D != D:
        raise MalformedEnvelopeError(
            f"{what}: expected {shape} at D={D}, got {m.shape} at D={m.D}")
    return m, offset


def read_envelope(data: bytes) -> Envelope:
    if len(data) < _HEADER.size:
        raise MalformedEnvelopeError("short header")
    magic, version, kind, pid, epoch = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MalformedEnvelopeError("bad magic")
    if version != VERSION:
        raise MalformedEnvelopeError(f"unsupported version {version}")
    if kind not in KIND_NAMES:
        raise MalformedEnvelopeError(f"unknown kind {kind}")
    try:
        p = load_by_id(pid)
    except UnknownParamSetError:
        raise MalformedEnvelopeError(f"unknown paramset id {pid}") from None
    buf, off = data, _HEADER.size
    nD = p.n * p.D

    if kind == KIND_PARAMSET:
        payload = buf[off:].decode(errors="replace")
        return Envelope(kind, p, epoch, payload)

    if kind == KIND_EPOCH_KEY:
        S, off = _matrix(buf, off, (p.n, p.n_bar), p.D, "sk_S")
        B, off = _matrix(buf, off, (p.n, p.n_bar), p.D, "pk_B")
        a_seed, off = _seed(buf, off)
        _expect_end(buf, off)
        return Envelope(kind, p, epoch, (EpochKey(epoch=epoch, sk_S=S, pk_B=B), a_seed))

    if kind == KIND_PUBLIC_KEY:
        B, off = _matrix(buf, off, (p.n, p.n_bar), p.D, "pk_B")
        a_seed, off = _seed(buf, off)
        _expect_end(buf, off)
        return Envelope(kind, p, epoch, (B, a_seed))

    if kind == KIND_TOKEN:
        d1a, off = _matrix(buf, off, (nD, p.n), p.D, "d1_a")
        d1b, off = _matrix(buf, off, (nD, p.n_bar), p.D, "d1_b")
        d2a, off = _matrix(buf, off, (p.n, p.n), p.D, "d2_a")
        d2b, off = _matrix(buf, off, (p.n, p.n_bar), p.D, "d2_b")
        _expect_end(buf, off)
        if epoch < 1:
            raise MalformedEnvelopeError("token epoch must be >= 1")
        tok = UpdateToken(epoch=epoch, d1_a=d1a, d1_b=d1b, d2_a=d2a, d2_b=d2b)
        return Envelope(kind, p, epoch, tok)

    # ciphertext
    C1, off = _matrix(buf, off, (p.m_bar, p.n), p.D, "C1")
    C2, off = _matrix(buf, off, (p.m_bar, p.n_bar), p.D, "C2")
    _expect_end(buf, off)
    return Envelope(kind, p, epoch, UeCiphertext(epoch=epoch, C1=C1, C2=C2))


def _seed(buf: bytes, off: int) -> tuple[bytes, int]:
    if off + A_SEED_LEN > len(buf):
        raise MalformedEnvelopeError("truncated a_seed")
    return buf[off:off + A_SEED_LEN], off + A_SEED_LEN


def _expect_end(buf: bytes, off: int) -> None:
    if off != len(buf):
        raise MalformedEnvelopeError(f"{len(buf) - off} trailing bytes")


def read_envelope_file(path, expect_kind: int | None = None) -> Envelope:
    with open(path, "rb") as fh:
        env = read_envelope(fh.read())
    if expect_kind is not None and env.kind != expect_kind:
        raise MalformedEnvelopeError(
            f"expected a {KIND_NAMES[expect_kind]} file, got {KIND_NAMES[env.kind]}")
    return env
