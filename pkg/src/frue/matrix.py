"""Dense matrices over Z_q with q = 2**D, plus all randomness sources.

q is always a power of two, so reduction is a mask with 2**D - 1; there is no
general modular-reduction path.  Entries are stored one per 16-bit word
regardless of D, both in memory (uint16 ndarray) and in the serialized
record format.

Matrix products must be exact.  The fast path runs the product through BLAS
in float64, which is exact as long as every accumulated sum stays below
2**53; with entries < 2**16 that holds for inner dimensions up to ~2 million,
far beyond anything a registered parameter set produces.  A uint64 fallback
covers the rest (wraparound mod 2**64 is congruent mod 2**D).
"""

from __future__ import annotations

import functools
import hashlib
import struct

import numpy as np

from .params import ParamSet


class DimensionMismatchError(ValueError):
    """Operands do not conform (shape or modulus exponent)."""


_MATRIX_HEADER = struct.Struct("<IIB")  # rows, cols, D


class MatrixZq:
    """Immutable dense matrix over Z_{2**D}."""

    __slots__ = ("data", "D")

    def __init__(self, data, D: int):
        if not (1 <= D <= 16):
            raise ValueError(f"D must be in [1, 16], got {D}")
        arr = np.ascontiguousarray(data, dtype=np.uint16)
        if arr.ndim != 2:
            raise ValueError("matrix data must be two-dimensional")
        if arr.size and int(arr.max()) >= (1 << D):
            raise ValueError(f"entries must be < 2**{D}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "D", D)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixZq is immutable")

    @classmethod
    def _new(cls, arr: np.ndarray, D: int) -> "MatrixZq":
        # internal: arr must be a fresh contiguous uint16 array already < 2**D
        obj = object.__new__(cls)
        arr.setflags(write=False)
        object.__setattr__(obj, "data", arr)
        object.__setattr__(obj, "D", D)
        return obj

    # -- structure -----------------------------------------------------

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def q(self) -> int:
        return 1 << self.D

    @classmethod
    def zeros(cls, rows: int, cols: int, D: int) -> "MatrixZq":
        return cls(np.zeros((rows, cols), dtype=np.uint16), D)

    @classmethod
    def identity(cls, k: int, D: int) -> "MatrixZq":
        return cls(np.eye(k, dtype=np.uint16), D)

    @classmethod
    def from_signed(cls, data, D: int) -> "MatrixZq":
        """Build from signed integers, reducing mod 2**D."""
        arr = np.asarray(data, dtype=np.int64) & ((1 << D) - 1)
        return cls(arr.astype(np.uint16), D)

    def transpose(self) -> "MatrixZq":
        return MatrixZq(self.data.T, self.D)

    def __eq__(self, other) -> bool:
        return (isinstance(other, MatrixZq) and self.D == other.D
                and self.shape == other.shape
                and bool(np.array_equal(self.data, other.data)))

    def __hash__(self):
        return hash((self.D, self.shape, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"MatrixZq({self.rows}x{self.cols}, D={self.D})"

    # -- arithmetic ----------------------------------------------------

    def _check_same_modulus(self, other: "MatrixZq") -> None:
        if not isinstance(other, MatrixZq):
            raise TypeError(f"expected MatrixZq, got {type(other).__name__}")
        if self.D != other.D:
            raise DimensionMismatchError(f"modulus mismatch: D={self.D} vs D={other.D}")

    def __add__(self, other: "MatrixZq") -> "MatrixZq":
        self._check_same_modulus(other)
        if self.shape != other.shape:
            raise DimensionMismatchError(f"add: {self.shape} vs {other.shape}")
        out = (self.data + other.data) & np.uint16(self.q - 1)
        return MatrixZq._new(out, self.D)

    def __sub__(self, other: "MatrixZq") -> "MatrixZq":
        self._check_same_modulus(other)
        if self.shape != other.shape:
            raise DimensionMismatchError(f"sub: {self.shape} vs {other.shape}")
        out = (self.data - other.data) & np.uint16(self.q - 1)
        return MatrixZq._new(out, self.D)

    def __neg__(self) -> "MatrixZq":
        out = (-self.data.astype(np.int32)) & (self.q - 1)
        return MatrixZq._new(out.astype(np.uint16), self.D)

    # below this many multiply-adds the integer kernel beats the dtype
    # round-trip through float64 / BLAS
    _SMALL_MATMUL = 1 << 17

    def __matmul__(self, other: "MatrixZq") -> "MatrixZq":
        self._check_same_modulus(other)
        if self.cols != other.rows:
            raise DimensionMismatchError(f"mul: {self.shape} @ {other.shape}")
        inner = self.cols
        q = self.q
        mask_ok = inner * (q - 1) ** 2 < 2**53  # exact accumulation limit
        if mask_ok and self.rows * inner * other.cols <= self._SMALL_MATMUL:
            prod = self.data.astype(np.int64) @ other.data.astype(np.int64)
            out = (prod & (q - 1)).astype(np.uint16)
        elif mask_ok:
            prod = self.data.astype(np.float64) @ other.data.astype(np.float64)
            out = (prod.astype(np.int64) & (q - 1)).astype(np.uint16)
        else:
            prod = self.data.astype(np.uint64) @ other.data.astype(np.uint64)
            out = (prod & np.uint64(q - 1)).astype(np.uint16)
        return MatrixZq._new(out, self.D)

    def scale_pow2(self, k: int) -> "MatrixZq":
        """Multiply every entry by 2**k (mod q)."""
        out = (self.data.astype(np.uint32) << np.uint32(k)) & np.uint32(self.q - 1)
        return MatrixZq._new(out.astype(np.uint16), self.D)

    # -- norms ----------------------------------------------------------

    def signed(self) -> np.ndarray:
        """Entries lifted to the representative range (-q/2, q/2], as int32."""
        arr = self.data.astype(np.int32)
        return np.where(arr <= self.q // 2, arr, arr - self.q)

    def max_norm(self) -> int:
        if self.data.size == 0:
            return 0
        return int(np.abs(self.signed()).max())

    # -- serialization ---------------------------------------------------

    def to_bytes(self) -> bytes:
        header = _MATRIX_HEADER.pack(self.rows, self.cols, self.D)
        return header + self.data.astype("<u2").tobytes()

    @classmethod
    def from_bytes_at(cls, buf: bytes, offset: int = 0) -> tuple["MatrixZq", int]:
        """Parse one matrix record; returns (matrix, next offset)."""
        end = offset + _MATRIX_HEADER.size
        if end > len(buf):
            raise ValueError("truncated matrix header")
        rows, cols, D = _MATRIX_HEADER.unpack_from(buf, offset)
        body = end + 2 * rows * cols
        if body > len(buf):
            raise ValueError("truncated matrix body")
        data = np.frombuffer(buf[end:body], dtype="<u2").reshape(rows, cols)
        return cls(data, D), body


def signed_rep(x: int, D: int) -> int:
    """Representative of x mod 2**D in (-q/2, q/2]."""
    q = 1 << D
    if not 0 <= x < q:
        raise ValueError(f"entry {x} out of range for D={D}")
    return x if x <= q // 2 else x - q


class RngHandle:
    """Deterministic pseudorandom stream seeded by a byte string.

    Same seed, same stream.  Handles are single-owner: parallel sampling
    must use independent handles obtained via derive(), which reseeds with
    domain separation.  Backed by Philox, a counter-based generator whose
    output is specified independently of platform or library version.
    """

    __slots__ = ("seed", "_gen")

    def __init__(self, seed: bytes | str | int):
        if isinstance(seed, str):
            seed = seed.encode()
        elif isinstance(seed, int):
            nbytes = max(16, (seed.bit_length() + 8) // 8)
            seed = seed.to_bytes(nbytes, "little", signed=True)
        digest = hashlib.sha256(b"frue-rng:" + seed).digest()
        key = np.frombuffer(digest[:16], dtype=np.uint64)
        object.__setattr__(self, "seed", bytes(seed))
        object.__setattr__(self, "_gen", np.random.Generator(np.random.Philox(key=key)))

    def __setattr__(self, name, value):
        raise AttributeError("RngHandle state is advanced only by drawing")

    def derive(self, label: bytes | str) -> "RngHandle":
        """Independent handle for the given domain label."""
        if isinstance(label, str):
            label = label.encode()
        child = hashlib.sha256(
            b"frue-derive:" + len(self.seed).to_bytes(4, "little") + self.seed + label
        ).digest()
        return RngHandle(child)

    def integers(self, low: int, high: int, size=None, dtype=np.int64):
        return self._gen.integers(low, high, size=size, dtype=dtype)

    def bytes(self, n: int) -> bytes:
        return self._gen.bytes(n)

    def bit(self) -> int:
        return int(self._gen.integers(0, 2))


def sample_uniform(rng: RngHandle, rows: int, cols: int, p: ParamSet) -> MatrixZq:
    """Matrix with i.i.d. entries uniform on [0, 2**D)."""
    data = rng.integers(0, p.q, size=(rows, cols), dtype=np.uint16)
    return MatrixZq._new(data, p.D)


@functools.lru_cache(maxsize=64)
def _chi_lut(chi_cdf: tuple[int, ...], chi_sample_bits: int, D: int) -> np.ndarray:
    """Residue table indexed by the raw (chi_sample_bits + 1)-bit word."""
    q = 1 << D
    u = np.arange(1 << chi_sample_bits, dtype=np.uint32)
    table = np.asarray(chi_cdf, dtype=np.uint32)
    v = np.searchsorted(table, u, side="left").astype(np.int64)
    lut = np.empty(1 << (chi_sample_bits + 1), dtype=np.uint16)
    lut[0::2] = v & (q - 1)                  # sign bit 0: +v
    lut[1::2] = (q - v) & (q - 1)            # sign bit 1: -v
    lut.setflags(write=False)
    return lut


def sample_chi(rng: RngHandle, rows: int, cols: int, p: ParamSet) -> MatrixZq:
    """Matrix with i.i.d. entries from chi, stored as residues mod q.

    Per entry: draw one (chi_sample_bits + 1)-bit word r; the low bit is the
    sign, the remaining word u selects the magnitude as the count of table
    entries strictly below u.  Outputs always lie in [-s, s] (signed).
    The (word -> residue) map is precomputed once per parameter set.
    """
    bits = p.chi_sample_bits
    r = rng.integers(0, 1 << (bits + 1), size=(rows, cols), dtype=np.uint32)
    lut = _chi_lut(p.chi_cdf, bits, p.D)
    return MatrixZq._new(lut[r], p.D)


def _expand_shake(seed: bytes, p: ParamSet) -> np.ndarray:
    n = p.n
    rows = np.empty((n, n), dtype=np.uint16)
    for i in range(n):
        stream = hashlib.shake_128(struct.pack("<H", i) + seed).digest(2 * n)
        rows[i] = np.frombuffer(stream, dtype="<u2")
    return rows


def _expand_aes(seed: bytes, p: ParamSet) -> np.ndarray:
    from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

    n = p.n
    nblocks = n // 8  # one AES block yields eight 16-bit entries
    plain = np.zeros((n, nblocks, 8), dtype="<u2")
    plain[:, :, 0] = np.arange(n, dtype=np.uint16)[:, None]
    plain[:, :, 1] = (np.arange(nblocks, dtype=np.uint16) * 8)[None, :]
    key = hashlib.sha256(b"frue-aes:" + seed).digest()[:16]
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    cipher = enc.update(plain.tobytes()) + enc.finalize()
    return np.frombuffer(cipher, dtype="<u2").reshape(n, n).copy()


def _expand_toy(seed: bytes, p: ParamSet) -> np.ndarray:
    n = p.n
    root = RngHandle(seed)
    rows = np.empty((n, n), dtype=np.uint16)
    for i in range(n):
        row_rng = root.derive(f"row:{i}")
        rows[i] = row_rng.integers(0, 1 << 16, size=n, dtype=np.uint16)
    return rows


def gen_public_matrix(seed: bytes, p: ParamSet) -> MatrixZq:
    """Deterministic n x n public matrix expanded from a seed.

    Expansion is row-striped (the row index is mixed into each per-row
    stream) so rows could be generated independently.  The aes-like and
    shake-like modes use AES-128-ECB counter blocks and SHAKE128
    respectively; toy mode reuses the seeded uniform sampler.
    """
    if p.gen_mode == "shake-like":
        raw = _expand_shake(seed, p)
    elif p.gen_mode == "aes-like":
        raw = _expand_aes(seed, p)
    else:
        raw = _expand_toy(seed, p)
    return MatrixZq._new(raw & np.uint16(p.q - 1), p.D)
