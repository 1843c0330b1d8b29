"""The updatable encryption scheme: epoch keys, tokens, ciphertext updates.

A token Delta_{e+1} is, in essence, a homomorphic encryption of the old
secret key under the new public key.  Applying it to a ciphertext
homomorphically decrypts under the old key and re-randomizes under the new
one, without touching the plaintext.  The two supporting transforms are:

  ord_bits    bit-plane decomposition: M (rows x cols over Z_q) becomes a
              0/1 matrix of shape rows x cols*D whose k-th column block
              (width cols) holds bit k-1 of every entry,
  tensor_d    the gadget dual: vertical stack of 2**(k-1) * M for k = 1..D,

which satisfy ord_bits(C) @ tensor_d(S) == C @ S exactly.

Epoch tags are carried on ciphertexts and tokens and enforced at every
operation; mismatches raise instead of silently producing garbage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import DimensionMismatchError, MatrixZq, RngHandle, sample_chi
from .params import ParamSet
from .pke import PkeCiphertext, pke_dec, pke_enc_traced, pke_keygen


class EpochMismatchError(ValueError):
    """Ciphertext / token / key epochs are not aligned for this operation."""


class NoValidPlaneError(ValueError):
    """No bit plane is clean enough to read the old key out of a token."""


@dataclass(frozen=True)
class EpochKey:
    epoch: int
    sk_S: MatrixZq          # n x n_bar
    pk_B: MatrixZq          # n x n_bar


@dataclass(frozen=True)
class UpdateToken:
    """Delta_{e+1}: two ciphertext-like pairs keyed to the target epoch.

    The (1)-pair additionally hides -tensor_d(S_e) in its second component;
    the (2)-pair is a plain encryption of zero used for re-randomization.
    """
    epoch: int              # target epoch e+1
    d1_a: MatrixZq          # nD x n
    d1_b: MatrixZq          # nD x n_bar
    d2_a: MatrixZq          # n  x n
    d2_b: MatrixZq          # n  x n_bar

    def __post_init__(self):
        if self.epoch < 1:
            raise EpochMismatchError("token epoch must be >= 1")


@dataclass(frozen=True)
class UeCiphertext:
    epoch: int
    C1: MatrixZq            # m_bar x n
    C2: MatrixZq            # m_bar x n_bar


def ord_bits(M: MatrixZq) -> MatrixZq:
    """Bit-plane decomposition, least significant plane first.

    Defined for any width: entry (i, j) satisfies
    M[i, j] = sum_k 2**(k-1) * out[i, (k-1)*cols + j].
    """
    D = M.D
    planes = (M.data[:, None, :] >> np.arange(D, dtype=np.uint16)[None, :, None]) & np.uint16(1)
    return MatrixZq._new(planes.reshape(M.rows, D * M.cols), D)


def tensor_d(M: MatrixZq) -> MatrixZq:
    """Vertical stack of 2**(k-1) * M mod q for k = 1..D, low plane on top."""
    D = M.D
    shifted = (M.data[None, :, :].astype(np.uint32) << np.arange(D, dtype=np.uint32)[:, None, None])
    out = (shifted & np.uint32(M.q - 1)).reshape(D * M.rows, M.cols)
    return MatrixZq._new(out.astype(np.uint16), D)


def ue_kg(rng: RngHandle, p: ParamSet, A: MatrixZq, epoch: int) -> EpochKey:
    """Fresh epoch key: a PKE key pair stamped with the epoch index."""
    kp = pke_keygen(rng, p, A)
    return EpochKey(epoch=epoch, sk_S=kp.sk_S, pk_B=kp.pk_B)


def ue_enc_traced(rng: RngHandle, p: ParamSet, A: MatrixZq, key: EpochKey,
                  m) -> tuple[UeCiphertext, MatrixZq]:
    """Encrypt under the epoch key; also returns the C2 noise matrix E''."""
    ct, e2 = pke_enc_traced(rng, p, A, key.pk_B, m)
    return UeCiphertext(epoch=key.epoch, C1=ct.C1, C2=ct.C2), e2


def ue_enc(rng: RngHandle, p: ParamSet, A: MatrixZq, key: EpochKey, m) -> UeCiphertext:
    ct, _ = ue_enc_traced(rng, p, A, key, m)
    return ct


def ue_dec(p: ParamSet, key: EpochKey, ct: UeCiphertext) -> np.ndarray:
    if ct.epoch != key.epoch:
        raise EpochMismatchError(f"ciphertext epoch {ct.epoch} != key epoch {key.epoch}")
    return pke_dec(p, key.sk_S, PkeCiphertext(C1=ct.C1, C2=ct.C2))


def ue_tg_from_randomness(p: ParamSet, A: MatrixZq, sk_prev: MatrixZq,
                          pk_next: MatrixZq, epoch_next: int,
                          s1p: MatrixZq, e1p: MatrixZq, e1pp: MatrixZq,
                          s2p: MatrixZq, e2p: MatrixZq, e2pp: MatrixZq) -> UpdateToken:
    """Assemble a token from explicit noise samples (shared by tests/oracles)."""
    if sk_prev.shape != (p.n, p.n_bar) or pk_next.shape != (p.n, p.n_bar):
        raise DimensionMismatchError("keys must be n x n_bar")
    d1_a = s1p @ A + e1p
    d1_b = s1p @ pk_next + e1pp - tensor_d(sk_prev)
    d2_a = s2p @ A + e2p
    d2_b = s2p @ pk_next + e2pp
    return UpdateToken(epoch=epoch_next, d1_a=d1_a, d1_b=d1_b, d2_a=d2_a, d2_b=d2_b)


def ue_tg(rng: RngHandle, p: ParamSet, A: MatrixZq, sk_prev: MatrixZq,
          pk_next: MatrixZq, epoch_next: int) -> UpdateToken:
    """Token generation; needs only the old secret key and the new public key.

    Draws (in order) S'_(1), E'_(1) from chi at nD x n, E''_(1) at nD x n_bar,
    then S'_(2), E'_(2) at n x n and E''_(2) at n x n_bar, and sets

      Delta^(1) = (S'_(1) A + E'_(1),  S'_(1) B_next + E''_(1) - tensor_d(S_prev))
      Delta^(2) = (S'_(2) A + E'_(2),  S'_(2) B_next + E''_(2)).
    """
    nD = p.n * p.D
    s1p = sample_chi(rng, nD, p.n, p)
    e1p = sample_chi(rng, nD, p.n, p)
    e1pp = sample_chi(rng, nD, p.n_bar, p)
    s2p = sample_chi(rng, p.n, p.n, p)
    e2p = sample_chi(rng, p.n, p.n, p)
    e2pp = sample_chi(rng, p.n, p.n_bar, p)
    return ue_tg_from_randomness(p, A, sk_prev, pk_next, epoch_next,
                                 s1p, e1p, e1pp, s2p, e2p, e2pp)


def ue_upd_with_randomness(p: ParamSet, tok: UpdateToken, ct: UeCiphertext,
                           R: MatrixZq) -> UeCiphertext:
    """Apply a token with an explicit re-randomization matrix R."""
    if ct.epoch + 1 != tok.epoch:
        raise EpochMismatchError(
            f"token moves ciphertexts from epoch {tok.epoch - 1} to {tok.epoch}, "
            f"got one at epoch {ct.epoch}")
    O = ord_bits(ct.C1)
    c1_1 = O @ tok.d1_a
    c2_1 = O @ tok.d1_b
    c1_2 = R @ tok.d2_a
    c2_2 = R @ tok.d2_b
    return UeCiphertext(epoch=tok.epoch, C1=c1_1 + c1_2, C2=ct.C2 + c2_1 + c2_2)


def ue_upd(rng: RngHandle, p: ParamSet, tok: UpdateToken, ct: UeCiphertext) -> UeCiphertext:
    """Move a ciphertext to the next epoch; randomized, never idempotent."""
    R = sample_chi(rng, p.m_bar, p.n, p)
    return ue_upd_with_randomness(p, tok, ct, R)


def select_recovery_plane(p: ParamSet) -> int:
    """Largest bit plane k* that survives the token noise.

    Needs 2**(k-1) * (s+1) < q/2 (signed lift stays faithful) and
    2**(k-2) > 2*n*s**2 + s (rounding swallows the noise).
    """
    noise = 2 * p.n * p.s * p.s + p.s
    for k in range(p.D, 0, -1):
        if (1 << k) * (p.s + 1) < p.q and (1 << k) > 4 * noise:
            return k
    raise NoValidPlaneError(
        f"no bit plane of {p.name} separates the key from noise <= {noise}")


def derive_prev_secret(p: ParamSet, sk_next: MatrixZq, tok: UpdateToken) -> MatrixZq:
    """Recover S_e from (sk_{e+1}, Delta_{e+1}): the backward-leak direction.

    W = d1_b - d1_a @ sk_next equals -tensor_d(S_e) + N with
    ||N||_max <= 2*n*s**2 + s, so plane k* holds -2**(k*-1) * S_e plus noise
    small enough that per-entry rounding is exact.
    """
    k = select_recovery_plane(p)
    W = tok.d1_b - tok.d1_a @ sk_next
    block = MatrixZq(W.data[(k - 1) * p.n: k * p.n], p.D)
    w = -block.signed().astype(np.int64)
    recovered = ((w << 1) + (1 << (k - 1))) >> k   # round-half-up of w / 2**(k-1)
    return MatrixZq.from_signed(recovered, p.D)
