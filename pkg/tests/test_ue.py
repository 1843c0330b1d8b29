import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frue.matrix import MatrixZq, RngHandle, sample_chi, sample_uniform
from frue.pke import PkeCiphertext, pke_dec, random_message_bits
from frue.ue import (EpochMismatchError, NoValidPlaneError,
                     derive_prev_secret, ord_bits, select_recovery_plane,
                     tensor_d, ue_dec, ue_enc, ue_kg, ue_tg,
                     ue_tg_from_randomness, ue_upd)

from conftest import adhoc_paramset, noiseless_paramset


# -- bit ordering and the gadget stack -------------------------------------

def test_ord_zero_and_small_example():
    assert ord_bits(MatrixZq.zeros(2, 3, 4)) == MatrixZq.zeros(2, 12, 4)
    # 3 = 11b, 1 = 01b: low-bit plane [1, 1], high-bit plane [1, 0]
    assert ord_bits(MatrixZq([[3, 1]], 2)) == MatrixZq([[1, 1, 1, 0]], 2)


def test_ord_reconstructs_input():
    rng = RngHandle(b"ordrec")
    p = adhoc_paramset(D=9)
    for _ in range(1000):
        m = sample_uniform(rng, 2, 3, p)
        y = ord_bits(m).data.reshape(2, 9, 3).astype(np.uint32)
        back = (y << np.arange(9, dtype=np.uint32)[None, :, None]).sum(axis=1) % p.q
        assert np.array_equal(back, m.data)


def test_tensor_examples():
    assert tensor_d(MatrixZq([[1]], 2)) == MatrixZq([[1], [2]], 2)
    assert tensor_d(MatrixZq([[3]], 3)) == MatrixZq([[3], [6], [4]], 3)  # 12 mod 8


def test_tensor_blocks_are_scaled_copies():
    rng = RngHandle(b"tblocks")
    p = adhoc_paramset(D=7)
    m = sample_uniform(rng, 4, 3, p)
    t = tensor_d(m)
    for k in range(1, p.D + 1):
        block = MatrixZq(t.data[(k - 1) * 4: k * 4], p.D)
        assert block == m.scale_pow2(k - 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=1, max_value=8),
       st.integers(min_value=1, max_value=8), st.integers(min_value=1, max_value=12),
       st.integers())
def test_ord_tensor_identity_random(rows, inner, cols, D, seed):
    rng = RngHandle(str(seed))
    p = adhoc_paramset(D=D)
    c = sample_uniform(rng, rows, inner, p)
    s = sample_uniform(rng, inner, cols, p)
    assert ord_bits(c) @ tensor_d(s) == c @ s


def test_ord_tensor_identity_exhaustive_1x1():
    for D in range(1, 5):
        q = 1 << D
        for cv in range(q):
            c = MatrixZq([[cv]], D)
            oc = ord_bits(c)
            for sv in range(q):
                s = MatrixZq([[sv]], D)
                assert (oc @ tensor_d(s)).data[0, 0] == (cv * sv) % q


# -- scheme operations -------------------------------------------------------

def test_kg_stamps_epoch_and_separates_randomness(deployment16):
    d = deployment16
    assert [k.epoch for k in d["keys"]] == list(range(len(d["keys"])))
    assert d["keys"][0].sk_S != d["keys"][1].sk_S


def test_enc_dec_roundtrip(deployment16):
    d = deployment16
    rng = RngHandle(b"ue-rt")
    for _ in range(200):
        m = random_message_bits(rng, d["p"])
        ct = ue_enc(rng, d["p"], d["A"], d["keys"][0], m)
        assert ct.epoch == 0
        assert np.array_equal(ue_dec(d["p"], d["keys"][0], ct), m)


def test_dec_rejects_epoch_mismatch(deployment16):
    d = deployment16
    rng = RngHandle(b"ue-epoch")
    ct = ue_enc(rng, d["p"], d["A"], d["keys"][0], random_message_bits(rng, d["p"]))
    with pytest.raises(EpochMismatchError):
        ue_dec(d["p"], d["keys"][1], ct)


def test_unrelated_key_same_epoch_decrypts_garbage(deployment16):
    d = deployment16
    rng = RngHandle(b"ue-wrongkey")
    wrong = ue_kg(rng, d["p"], d["A"], 0)
    mismatches = 0
    for _ in range(100):
        m = random_message_bits(rng, d["p"])
        ct = ue_enc(rng, d["p"], d["A"], d["keys"][0], m)
        mismatches += not np.array_equal(ue_dec(d["p"], wrong, ct), m)
    assert mismatches >= 99


def test_tg_noiseless_reveals_gadget_structure():
    # with zero noise and an explicit nonzero old secret, the hidden block is
    # exactly the negated gadget stack
    p = noiseless_paramset(D=10, n=8, m_bar=2, n_bar=2)
    rng = RngHandle(b"tg0")
    A = sample_uniform(rng, p.n, p.n, p)
    sk_prev = MatrixZq.from_signed(rng.integers(-1, 2, size=(p.n, p.n_bar)), p.D)
    pk_next = sample_uniform(rng, p.n, p.n_bar, p)
    tok = ue_tg(rng, p, A, sk_prev, pk_next, 1)
    assert tok.d1_a == MatrixZq.zeros(p.n * p.D, p.n, p.D)
    assert tok.d1_b == -tensor_d(sk_prev)
    assert tok.d2_a == MatrixZq.zeros(p.n, p.n, p.D)
    assert tok.d2_b == MatrixZq.zeros(p.n, p.n_bar, p.D)


def test_tg_components_stay_near_their_means(deployment16):
    d = deployment16
    p = d["p"]
    rng = RngHandle(b"tg-instr")
    nD = p.n * p.D
    s1p = sample_chi(rng, nD, p.n, p)
    e1p = sample_chi(rng, nD, p.n, p)
    e1pp = sample_chi(rng, nD, p.n_bar, p)
    s2p = sample_chi(rng, p.n, p.n, p)
    e2p = sample_chi(rng, p.n, p.n, p)
    e2pp = sample_chi(rng, p.n, p.n_bar, p)
    tok = ue_tg_from_randomness(p, d["A"], d["keys"][0].sk_S, d["keys"][1].pk_B, 1,
                                s1p, e1p, e1pp, s2p, e2p, e2pp)
    assert (tok.d1_a - s1p @ d["A"]).max_norm() <= p.s
    assert (tok.d2_a - s2p @ d["A"]).max_norm() <= p.s


def test_update_chain_decrypts_and_respects_error_budget(deployment16):
    d = deployment16
    p = d["p"]
    rng = RngHandle(b"chain")
    per_update_bound = 2 * (p.n**2 * p.D * p.s**3 + p.n**2 * p.s**3) \
        + p.n * p.D * p.s + p.n * p.s**2
    for _ in range(100):
        m = random_message_bits(rng, p)
        ct = ue_enc(rng, p, d["A"], d["keys"][0], m)
        phi_prev = ct.C2 - ct.C1 @ d["keys"][0].sk_S
        for e in range(1, p.T_max + 1):
            ct = ue_upd(rng, p, d["tokens"][e], ct)
            assert ct.epoch == e
            phi = ct.C2 - ct.C1 @ d["keys"][e].sk_S
            assert (phi - phi_prev).max_norm() <= per_update_bound
            phi_prev = phi
        assert np.array_equal(ue_dec(p, d["keys"][p.T_max], ct), m)


def test_update_error_telescopes(deployment16):
    d = deployment16
    p = d["p"]
    rng = RngHandle(b"telescope")
    per_update = 2 * (p.n**2 * p.D * p.s**3 + p.n**2 * p.s**3) \
        + p.n * p.D * p.s + p.n * p.s**2
    m = random_message_bits(rng, p)
    ct = ue_enc(rng, p, d["A"], d["keys"][0], m)
    base = (ct.C2 - ct.C1 @ d["keys"][0].sk_S)
    for e in range(1, p.T_max + 1):
        ct = ue_upd(rng, p, d["tokens"][e], ct)
        drift = ((ct.C2 - ct.C1 @ d["keys"][e].sk_S) - base).max_norm()
        assert drift <= e * per_update


def test_update_requires_consecutive_epoch(deployment16):
    d = deployment16
    rng = RngHandle(b"upd-epoch")
    ct = ue_enc(rng, d["p"], d["A"], d["keys"][0], random_message_bits(rng, d["p"]))
    with pytest.raises(EpochMismatchError):
        ue_upd(rng, d["p"], d["tokens"][2], ct)


def test_update_noiseless_is_exact():
    p = noiseless_paramset(D=12, B=2, n=8, m_bar=2, n_bar=2)
    rng = RngHandle(b"upd0")
    A = sample_uniform(rng, p.n, p.n, p)
    k0, k1 = ue_kg(rng, p, A, 0), ue_kg(rng, p, A, 1)
    tok = ue_tg(rng, p, A, k0.sk_S, k1.pk_B, 1)
    m = random_message_bits(rng, p)
    ct = ue_enc(rng, p, A, k0, m)
    ct1 = ue_upd(rng, p, tok, ct)
    assert np.array_equal(ue_dec(p, k1, ct1), m)
    assert ((ct1.C2 - ct1.C1 @ k1.sk_S) - (ct.C2 - ct.C1 @ k0.sk_S)).max_norm() == 0


def test_updates_are_randomized(deployment16):
    d = deployment16
    rng = RngHandle(b"upd-rand")
    ct = ue_enc(rng, d["p"], d["A"], d["keys"][0], random_message_bits(rng, d["p"]))
    u1 = ue_upd(RngHandle(b"ra"), d["p"], d["tokens"][1], ct)
    u2 = ue_upd(RngHandle(b"rb"), d["p"], d["tokens"][1], ct)
    assert u1.C1 != u2.C1


def test_updated_ciphertext_unreadable_under_old_key(deployment16):
    # uni-directional ciphertext movement: the old secret no longer decrypts
    d = deployment16
    p = d["p"]
    rng = RngHandle(b"uni-ct")
    wrong = 0
    for _ in range(100):
        m = random_message_bits(rng, p)
        ct = ue_enc(rng, p, d["A"], d["keys"][0], m)
        ct1 = ue_upd(rng, p, d["tokens"][1], ct)
        old_view = pke_dec(p, d["keys"][0].sk_S, PkeCiphertext(C1=ct1.C1, C2=ct1.C2))
        wrong += not np.array_equal(old_view, m)
    assert wrong >= 99


# -- backward-leak key derivation ---------------------------------------------

def test_derive_prev_secret_100_trials(deployment16):
    d = deployment16
    p = d["p"]
    for t in range(100):
        rng = RngHandle(f"derive-{t}")
        k0, k1 = ue_kg(rng, p, d["A"], 0), ue_kg(rng, p, d["A"], 1)
        tok = ue_tg(rng, p, d["A"], k0.sk_S, k1.pk_B, 1)
        assert derive_prev_secret(p, k1.sk_S, tok) == k0.sk_S


def test_derive_prev_secret_noiseless():
    p = noiseless_paramset(D=8, n=8, m_bar=2, n_bar=2)
    rng = RngHandle(b"derive0")
    A = sample_uniform(rng, p.n, p.n, p)
    sk_prev = MatrixZq.from_signed(rng.integers(-1, 2, size=(p.n, p.n_bar)), p.D)
    k1 = ue_kg(rng, p, A, 1)
    tok = ue_tg(rng, p, A, sk_prev, k1.pk_B, 1)
    assert derive_prev_secret(p, k1.sk_S, tok) == sk_prev
    # with no noise every plane below the sign cutoff works; the rule takes
    # the highest one
    assert select_recovery_plane(p) == p.D - 1


def test_no_valid_plane_on_undersized_modulus():
    cramped = adhoc_paramset(D=6, B=1, n=8, s=1)
    with pytest.raises(NoValidPlaneError):
        select_recovery_plane(cramped)
    rng = RngHandle(b"cramped")
    A = sample_uniform(rng, cramped.n, cramped.n, cramped)
    k0, k1 = ue_kg(rng, cramped, A, 0), ue_kg(rng, cramped, A, 1)
    tok = ue_tg(rng, cramped, A, k0.sk_S, k1.pk_B, 1)
    with pytest.raises(NoValidPlaneError):
        derive_prev_secret(cramped, k1.sk_S, tok)


def test_token_epoch_must_be_positive(deployment16):
    d = deployment16
    with pytest.raises(EpochMismatchError):
        ue_tg(RngHandle(b"e0"), d["p"], d["A"], d["keys"][0].sk_S,
              d["keys"][1].pk_B, 0)
