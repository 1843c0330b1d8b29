"""Hybrid and simulator procedures, used as statistical test oracles.

hyb_ue_upd re-derives an updated ciphertext directly from the plaintext, the
next public key, and the token's noise samples, instead of pushing the old
ciphertext through the token.  Up to a bounded cross-noise term (the product
of encryption noise with key material, which the real update drags along),
the two routes produce the same distribution; tests quantify the gap with
an empirical total-variation estimate on projected marginals.

The Sim procedures replace outputs with uniform samples of the right shape.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .matrix import MatrixZq, RngHandle, sample_chi, sample_uniform
from .params import ParamSet
from .pke import encode, pke_setup, random_message_bits
from .ue import (UeCiphertext, UpdateToken, ord_bits, ue_enc_traced, ue_kg,
                 ue_tg_from_randomness, ue_upd)


@dataclass(frozen=True)
class TokenRandomness:
    """Every noise sample a token generation consumes, plus the public-key
    noise E_pk of the target epoch (recoverable as pk_B - A @ sk_S)."""
    S1p: MatrixZq           # nD x n
    E1p: MatrixZq           # nD x n
    E1pp: MatrixZq          # nD x n_bar
    S2p: MatrixZq           # n x n
    E2p: MatrixZq           # n x n
    E2pp: MatrixZq          # n x n_bar
    E_pk: MatrixZq          # n x n_bar


def sample_token_randomness(rng: RngHandle, p: ParamSet, E_pk: MatrixZq) -> TokenRandomness:
    """Draw the six token noise matrices (jointly distributed as in ue_tg).

    Drawn as one flat chi batch and sliced, which keeps repeated-sampling
    loops cheap; entries are i.i.d. so the joint law matches per-matrix draws.
    """
    nD = p.n * p.D
    shapes = ((nD, p.n), (nD, p.n), (nD, p.n_bar),
              (p.n, p.n), (p.n, p.n), (p.n, p.n_bar))
    total = sum(r * c for r, c in shapes)
    flat = sample_chi(rng, 1, total, p).data
    mats, off = [], 0
    for r, c in shapes:
        mats.append(MatrixZq._new(flat[0, off:off + r * c].reshape(r, c), p.D))
        off += r * c
    return TokenRandomness(S1p=mats[0], E1p=mats[1], E1pp=mats[2],
                           S2p=mats[3], E2p=mats[4], E2pp=mats[5], E_pk=E_pk)


def token_from_randomness(p: ParamSet, A: MatrixZq, sk_prev: MatrixZq,
                          pk_next: MatrixZq, epoch_next: int,
                          tr: TokenRandomness) -> UpdateToken:
    return ue_tg_from_randomness(p, A, sk_prev, pk_next, epoch_next,
                                 tr.S1p, tr.E1p, tr.E1pp, tr.S2p, tr.E2p, tr.E2pp)


def hyb_ue_upd(rng: RngHandle, p: ParamSet, A: MatrixZq, ct: UeCiphertext,
               pk_next: MatrixZq, m, E_ct: MatrixZq,
               tr: TokenRandomness) -> UeCiphertext:
    """Rebuild the updated ciphertext from plaintext-side data.

    With O = ord_bits(C1) and fresh R from chi:
      S+  = O @ S1p + R @ S2p
      E+  = O @ E1p + R @ E2p
      E++ = O @ E1pp + R @ E2pp + E_ct
    and the output is (S+ A + E+,  S+ B_next + E++ + encode(m)), where E_ct
    is the C2 noise of the ciphertext being updated (caller-instrumented).
    """
    R = sample_chi(rng, p.m_bar, p.n, p)
    return hyb_ue_upd_with_randomness(p, A, ct, pk_next, m, E_ct, tr, R)


def hyb_ue_upd_with_randomness(p: ParamSet, A: MatrixZq, ct: UeCiphertext,
                               pk_next: MatrixZq, m, E_ct: MatrixZq,
                               tr: TokenRandomness, R: MatrixZq) -> UeCiphertext:
    O = ord_bits(ct.C1)
    s_dag = O @ tr.S1p + R @ tr.S2p
    e_dag = O @ tr.E1p + R @ tr.E2p
    e_ddag = O @ tr.E1pp + R @ tr.E2pp + E_ct
    return UeCiphertext(epoch=ct.epoch + 1,
                        C1=s_dag @ A + e_dag,
                        C2=s_dag @ pk_next + e_ddag + encode(m, p))


def sim_ue_kg(rng: RngHandle, p: ParamSet) -> MatrixZq:
    """Simulated public key: uniform n x n_bar."""
    return sample_uniform(rng, p.n, p.n_bar, p)


def sim_ue_tg(rng: RngHandle, p: ParamSet, epoch: int = 1) -> UpdateToken:
    """Simulated token: uniform components of the real token's shapes."""
    nD = p.n * p.D
    return UpdateToken(epoch=epoch,
                       d1_a=sample_uniform(rng, nD, p.n, p),
                       d1_b=sample_uniform(rng, nD, p.n_bar, p),
                       d2_a=sample_uniform(rng, p.n, p.n, p),
                       d2_b=sample_uniform(rng, p.n, p.n_bar, p))


def sim_ue_upd(rng: RngHandle, p: ParamSet, epoch: int = 1) -> UeCiphertext:
    return UeCiphertext(epoch=epoch,
                        C1=sample_uniform(rng, p.m_bar, p.n, p),
                        C2=sample_uniform(rng, p.m_bar, p.n_bar, p))


def sim_ue_enc(rng: RngHandle, p: ParamSet, epoch: int = 0) -> UeCiphertext:
    return UeCiphertext(epoch=epoch,
                        C1=sample_uniform(rng, p.m_bar, p.n, p),
                        C2=sample_uniform(rng, p.m_bar, p.n_bar, p))


def statistical_distance_estimate(sampler_a: Callable[[], object],
                                  sampler_b: Callable[[], object],
                                  num_samples: int,
                                  projection: Callable[[object], int]) -> float:
    """Empirical total-variation distance between two projected sample streams.

    Both samplers are drawn num_samples times; the projection must land in a
    small finite alphabet or the estimate is dominated by sampling noise.
    """
    counts_a = Counter(projection(sampler_a()) for _ in range(num_samples))
    counts_b = Counter(projection(sampler_b()) for _ in range(num_samples))
    support = set(counts_a) | set(counts_b)
    total = sum(abs(counts_a.get(r, 0) - counts_b.get(r, 0)) for r in support)
    return total / (2.0 * num_samples)


# -- canned instances for the distribution checks ---------------------------

@dataclass(frozen=True)
class UpdateInstance:
    """A fixed scene (keys, plaintext, traced ciphertext) over which the real
    and hybrid update routes are compared as distributions."""
    p: ParamSet
    A: MatrixZq
    sk_prev: MatrixZq
    pk_next: MatrixZq
    sk_next: MatrixZq
    m: object
    ct: UeCiphertext
    E_ct: MatrixZq
    E_pk: MatrixZq


def make_update_instance(p: ParamSet, seed: bytes = b"frue-upd-instance") -> UpdateInstance:
    rng = RngHandle(seed)
    _, A = pke_setup(rng, p)
    k0 = ue_kg(rng, p, A, 0)
    k1 = ue_kg(rng, p, A, 1)
    m = random_message_bits(rng, p)
    ct, e_ct = ue_enc_traced(rng, p, A, k0, m)
    return UpdateInstance(p=p, A=A, sk_prev=k0.sk_S, pk_next=k1.pk_B,
                          sk_next=k1.sk_S, m=m, ct=ct, E_ct=e_ct,
                          E_pk=k1.pk_B - A @ k1.sk_S)


def real_update_sampler(inst: UpdateInstance, rng: RngHandle) -> Callable[[], UeCiphertext]:
    """One draw = fresh token randomness, then the real update route."""
    def draw() -> UeCiphertext:
        tr = sample_token_randomness(rng, inst.p, inst.E_pk)
        tok = token_from_randomness(inst.p, inst.A, inst.sk_prev, inst.pk_next, 1, tr)
        return ue_upd(rng, inst.p, tok, inst.ct)

    return draw


def hyb_update_sampler(inst: UpdateInstance, rng: RngHandle) -> Callable[[], UeCiphertext]:
    """One draw = fresh token randomness, then the hybrid reconstruction."""
    def draw() -> UeCiphertext:
        tr = sample_token_randomness(rng, inst.p, inst.E_pk)
        return hyb_ue_upd(rng, inst.p, inst.A, inst.ct, inst.pk_next,
                          inst.m, inst.E_ct, tr)

    return draw


def high_bits_projection(p: ParamSet, bits: int = 4) -> Callable[[UeCiphertext], int]:
    """Project a ciphertext to the top bits of one C2 entry (alphabet 2**bits)."""
    shift = p.D - bits

    def project(ct: UeCiphertext) -> int:
        return int(ct.C2.data[0, 0]) >> shift

    return project


def _empirical_tv(xs, ys) -> float:
    lo = int(min(xs.min(), ys.min()))
    hi = int(max(xs.max(), ys.max()))
    cx = np.bincount(xs - lo, minlength=hi - lo + 1)
    cy = np.bincount(ys - lo, minlength=hi - lo + 1)
    return float(np.abs(cx - cy).sum()) / (2.0 * len(xs))


def smudging_estimate(b1: int, b2: int, num_samples: int,
                      rng: RngHandle) -> tuple[float, float]:
    """Empirical TV between uniform noise on [-b2, b2] and the same noise
    shifted by a fixed e1 = b1, plus a same-distribution baseline.

    The analytic distance is b1 / (2*b2 + 1): drowning a small offset in a
    much wider uniform draw leaves the distribution nearly unchanged.
    """
    wide = lambda: rng.integers(-b2, b2 + 1, size=num_samples)
    dist = _empirical_tv(wide(), wide() + b1)
    baseline = _empirical_tv(wide(), wide())
    return dist, baseline
