"""Security experiment machinery: oracles, leakage bookkeeping, closures.

A SecurityGame holds the full oracle state for one experiment run: epoch
keys and tokens, the query log L, the challenge-equal log, the plaintext
pair set used for trivial-win detection on decryption, and the leakage sets
K / T / C.  Oracles return None where the pseudocode returns bottom.

The starred closures model what an adversary can infer beyond what it
corrupted directly, in the backward-leak setting: a future key plus the
token between them reveals the past key; two adjacent known keys reveal the
token; a known challenge ciphertext plus known tokens lets it ride forward
(and, for bi-directional ciphertext updates, backward) through epochs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrix import MatrixZq, RngHandle
from .params import ParamSet
from .pke import bytes_from_bits
from .ue import (EpochKey, UeCiphertext, UpdateToken, ue_dec, ue_enc,
                 ue_kg, ue_tg, ue_upd)


@dataclass
class LeakageSets:
    K: set[int] = field(default_factory=set)    # corrupted epoch keys
    T: set[int] = field(default_factory=set)    # corrupted tokens
    C: set[int] = field(default_factory=set)    # challenge-equal epochs seen
    l: int = 0                                  # highest epoch index reached


@dataclass
class LRecord:
    qid: int
    ct: UeCiphertext
    epoch: int
    m_bytes: bytes


def _ct_key(ct: UeCiphertext) -> tuple:
    return (ct.epoch, ct.C1.data.tobytes(), ct.C2.data.tobytes())


class SecurityGame:
    """One experiment instance; single-threaded by contract."""

    def __init__(self, rng: RngHandle, p: ParamSet, A: MatrixZq, b: int):
        if b not in (0, 1):
            raise ValueError("challenge bit must be 0 or 1")
        self.rng = rng
        self.p = p
        self.A = A
        self.b = b
        self.e = 0
        self.keys: dict[int, EpochKey] = {0: ue_kg(rng, p, A, 0)}
        self.tokens: dict[int, UpdateToken] = {}      # no token into epoch 0
        self.qid = 0
        self.twf = 0
        self.phase = 0
        self.challenge_epoch: int | None = None
        self.chall_ct: UeCiphertext | None = None
        self._chall_msgs: tuple[bytes, bytes] | None = None
        self.L: dict[tuple, LRecord] = {}
        self.L_tilde: list[tuple[UeCiphertext, int]] = []
        self.Q_tilde_star: set[tuple[bytes, int]] = set()
        self.leakage = LeakageSets()
        self.trace: list[tuple] = []

    # -- oracles ---------------------------------------------------------

    def o_enc(self, m) -> UeCiphertext:
        self.qid += 1
        ct = ue_enc(self.rng, self.p, self.A, self.keys[self.e], m)
        rec = LRecord(self.qid, ct, self.e, bytes_from_bits(np.asarray(m, dtype=np.uint8)))
        self.L[_ct_key(ct)] = rec
        self.trace.append(("enc", self.qid, self.e))
        return ct

    def o_dec(self, ct: UeCiphertext):
        """Decrypt under the current key; flags a trivial win on challenge
        plaintexts.  CPA-model stub: never used by the experiment verdict."""
        try:
            m = ue_dec(self.p, self.keys[self.e], ct)
        except Exception:
            self.trace.append(("dec", "reject"))
            return None
        if (bytes_from_bits(m), self.e) in self.Q_tilde_star:
            self.twf = 1
        self.trace.append(("dec", self.e))
        return m

    def o_next(self) -> None:
        self.e += 1
        self.leakage.l = self.e
        self.keys[self.e] = ue_kg(self.rng, self.p, self.A, self.e)
        self.tokens[self.e] = ue_tg(self.rng, self.p, self.A,
                                    self.keys[self.e - 1].sk_S,
                                    self.keys[self.e].pk_B, self.e)
        if self.phase == 1:
            self.chall_ct = ue_upd(self.rng, self.p, self.tokens[self.e], self.chall_ct)
            self.leakage.C.add(self.e)
            self.L_tilde.append((self.chall_ct, self.e))
            for mb in self._chall_msgs:
                self.Q_tilde_star.add((mb, self.e))
        self.trace.append(("next", self.e))

    def o_upd(self, ct_prev: UeCiphertext):
        rec = self.L.get(_ct_key(ct_prev))
        if rec is None or rec.epoch != self.e - 1:
            self.trace.append(("upd", "reject"))
            return None
        ct = ue_upd(self.rng, self.p, self.tokens[self.e], ct_prev)
        self.L[_ct_key(ct)] = LRecord(rec.qid, ct, self.e, rec.m_bytes)
        self.trace.append(("upd", rec.qid, self.e))
        return ct

    def o_corr(self, inp: str, e_hat: int):
        if e_hat > self.e:
            self.trace.append(("corr", "reject"))
            return None
        if inp == "key":
            self.leakage.K.add(e_hat)
            self.trace.append(("corr", "key", e_hat))
            return self.keys[e_hat]
        if inp == "token":
            self.leakage.T.add(e_hat)
            self.trace.append(("corr", "token", e_hat))
            return self.tokens.get(e_hat)      # epoch 0 has no token
        raise ValueError("inp must be 'key' or 'token'")

    def o_chall(self, m_bar, ct_bar: UeCiphertext):
        """Start the challenge phase: fresh encryption of m_bar (b = 0) or an
        update of the recorded ciphertext ct_bar (b = 1)."""
        if self.phase == 1:
            self.trace.append(("chall", "reject"))
            return None
        rec = self.L.get(_ct_key(ct_bar))
        if rec is None or rec.epoch != self.e - 1:
            self.trace.append(("chall", "reject"))
            return None
        self.phase = 1
        self.challenge_epoch = self.e
        m_bar = np.asarray(m_bar, dtype=np.uint8)
        self._chall_msgs = (bytes_from_bits(m_bar), rec.m_bytes)
        if self.b == 0:
            self.chall_ct = ue_enc(self.rng, self.p, self.A, self.keys[self.e], m_bar)
        else:
            self.chall_ct = ue_upd(self.rng, self.p, self.tokens[self.e], ct_bar)
        self.leakage.C.add(self.e)
        self.L_tilde.append((self.chall_ct, self.e))
        for mb in self._chall_msgs:
            self.Q_tilde_star.add((mb, self.e))
        self.trace.append(("chall", self.e))
        return self.chall_ct

    def o_upd_ct(self):
        if self.phase != 1:
            self.trace.append(("upd-ct", "reject"))
            return None
        self.trace.append(("upd-ct", self.e))
        return self.chall_ct


def gs_setup(rng: RngHandle, p: ParamSet, A: MatrixZq, b: int = 0) -> SecurityGame:
    return SecurityGame(rng, p, A, b)


# -- starred leakage closures ---------------------------------------------

def kstar_op_uni(ls: LeakageSets) -> set[int]:
    """Known keys under backward-leak inference, by a right-to-left sweep:
    epoch e is known iff e was corrupted, or e+1 is known and token e+1 is."""
    known: set[int] = set()
    for e in range(ls.l, -1, -1):
        if e in ls.K or ((e + 1) in known and (e + 1) in ls.T):
            known.add(e)
    return known


def tstar_op_uni(ls: LeakageSets, kstar: set[int]) -> set[int]:
    """Known tokens: corrupted, or wedged between two known keys."""
    return {e for e in range(ls.l + 1)
            if e in ls.T or (e in kstar and (e - 1) in kstar)}


def cstar(ls: LeakageSets, tstar: set[int], cc: str = "uni") -> set[int]:
    """Challenge-equal epochs reachable through known tokens.

    uni: a known version at e-1 plus token e rides forward to e.
    bi:  additionally, a known version at e+1 plus token e+1 rides back to e.
    """
    if cc not in ("uni", "bi"):
        raise ValueError("cc must be 'uni' or 'bi'")
    known = set(ls.C)
    changed = True
    while changed:
        changed = False
        for e in range(ls.l + 1):
            if e in known:
                continue
            if (e - 1) in known and e in tstar:
                known.add(e)
                changed = True
            elif cc == "bi" and (e + 1) in known and (e + 1) in tstar:
                known.add(e)
                changed = True
    return known


def run_experiment(adversary, b: int, rng: RngHandle, p: ParamSet,
                   A: MatrixZq | None = None) -> int:
    """Drive one experiment: Setup, adversary against the oracles, verdict.

    The adversary is any callable taking the game and returning a bit.  If
    the final leakage admits a trivial win (a known key at a challenge-equal
    epoch), the adversary's answer is replaced by a fresh uniform bit.
    """
    if A is None:
        from .pke import pke_setup
        _, A = pke_setup(rng, p)
    game = gs_setup(rng, p, A, b)
    b_prime = int(adversary(game))
    ks = kstar_op_uni(game.leakage)
    ts = tstar_op_uni(game.leakage, ks)
    cs = cstar(game.leakage, ts, cc="uni")
    if ks & cs:
        game.twf = 1
    if game.twf == 1:
        b_prime = game.rng.bit()
    return b_prime
