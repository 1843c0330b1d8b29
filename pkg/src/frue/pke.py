"""Frodo-style LWE public-key encryption: setup, keygen, encrypt, decrypt.

Messages are bit vectors of length ell = B * m_bar * n_bar.  encode() packs
consecutive B-bit groups row-major into an m_bar x n_bar matrix, mapping a
group value k to k * q / 2**B; decode() inverts with nearest-integer
rounding of c * 2**B / q (ties round up), reduced mod 2**B.  Within a group,
bit index l carries weight 2**l, and the same order is used when converting
bytes to bits (least significant bit of each byte first).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import (DimensionMismatchError, MatrixZq, RngHandle,
                     gen_public_matrix, sample_chi)
from .params import ParamSet


class MessageLengthError(ValueError):
    """Message bit length does not match the parameter set."""


@dataclass(frozen=True)
class PkeKeyPair:
    pk_B: MatrixZq          # n x n_bar, equals A @ sk_S + E with E chi-bounded
    sk_S: MatrixZq          # n x n_bar
    a_seed: bytes = b""     # regenerates the public matrix A


@dataclass(frozen=True)
class PkeCiphertext:
    C1: MatrixZq            # m_bar x n
    C2: MatrixZq            # m_bar x n_bar


# -- message bits ---------------------------------------------------------

def as_bits(m, ell: int) -> np.ndarray:
    bits = np.asarray(m, dtype=np.uint8)
    if bits.ndim != 1 or bits.size != ell:
        raise MessageLengthError(f"expected {ell} message bits, got shape {bits.shape}")
    if bits.size and int(bits.max()) > 1:
        raise MessageLengthError("message entries must be bits")
    return bits


def bits_from_bytes(data: bytes, nbits: int) -> np.ndarray:
    if nbits > 8 * len(data):
        raise MessageLengthError("not enough bytes for requested bit count")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")[:nbits]


def bytes_from_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def random_message_bits(rng: RngHandle, p: ParamSet) -> np.ndarray:
    return rng.integers(0, 2, size=p.ell, dtype=np.int64).astype(np.uint8)


# -- encode / decode ------------------------------------------------------

def encode(m, p: ParamSet) -> MatrixZq:
    """Pack ell message bits into an m_bar x n_bar matrix via k -> k * 2**(D-B)."""
    bits = as_bits(m, p.ell)
    groups = bits.reshape(p.m_bar * p.n_bar, p.B).astype(np.uint32)
    weights = np.uint32(1) << np.arange(p.B, dtype=np.uint32)
    k = groups @ weights
    entries = (k << np.uint32(p.D - p.B)).reshape(p.m_bar, p.n_bar)
    return MatrixZq(entries.astype(np.uint16), p.D)


def decode(M: MatrixZq, p: ParamSet) -> np.ndarray:
    """Per-entry nearest-integer inverse of encode; exact in integers.

    round(c * 2**B / q) with ties up equals (c * 2**(B+1) + q) >> (D+1).
    """
    if M.shape != (p.m_bar, p.n_bar) or M.D != p.D:
        raise DimensionMismatchError(f"expected {p.m_bar}x{p.n_bar} matrix at D={p.D}")
    c = M.data.astype(np.int64)
    k = (((c << (p.B + 1)) + p.q) >> (p.D + 1)) & ((1 << p.B) - 1)
    shifts = np.arange(p.B, dtype=np.int64)
    bits = (k.reshape(-1, 1) >> shifts) & 1
    return bits.reshape(p.ell).astype(np.uint8)


# -- the four algorithms --------------------------------------------------

def pke_setup(rng: RngHandle, p: ParamSet) -> tuple[bytes, MatrixZq]:
    """Draw a fresh seed and expand the shared n x n public matrix A."""
    a_seed = rng.bytes(16)
    return a_seed, gen_public_matrix(a_seed, p)


def pke_keygen(rng: RngHandle, p: ParamSet, A: MatrixZq, a_seed: bytes = b"") -> PkeKeyPair:
    """Sample S, E from chi and publish B = A @ S + E."""
    if A.shape != (p.n, p.n):
        raise DimensionMismatchError(f"A must be {p.n}x{p.n}")
    S = sample_chi(rng, p.n, p.n_bar, p)
    E = sample_chi(rng, p.n, p.n_bar, p)
    return PkeKeyPair(pk_B=A @ S + E, sk_S=S, a_seed=a_seed)


def pke_enc_traced(rng: RngHandle, p: ParamSet, A: MatrixZq, pk_B: MatrixZq,
                   m) -> tuple[PkeCiphertext, MatrixZq]:
    """Encrypt and also return the C2 noise term E'' (for instrumentation)."""
    msg = encode(m, p)
    S1 = sample_chi(rng, p.m_bar, p.n, p)
    E1 = sample_chi(rng, p.m_bar, p.n, p)
    E2 = sample_chi(rng, p.m_bar, p.n_bar, p)
    C1 = S1 @ A + E1
    C2 = S1 @ pk_B + E2 + msg
    return PkeCiphertext(C1=C1, C2=C2), E2


def pke_enc(rng: RngHandle, p: ParamSet, A: MatrixZq, pk_B: MatrixZq, m) -> PkeCiphertext:
    ct, _ = pke_enc_traced(rng, p, A, pk_B, m)
    return ct


def pke_dec(p: ParamSet, sk_S: MatrixZq, ct: PkeCiphertext) -> np.ndarray:
    return decode(ct.C2 - ct.C1 @ sk_S, p)
