"""Command-line surface: key lifecycle, file encryption, bound checks,
benchmarks, and the test-oracle commands.

Exit codes are stable: 0 success, 2 usage error (bad flags or values),
3 malformed envelope or mismatched input files, 4 epoch mismatch,
5 message length error, 6 unknown parameter-set name or bench target.

File encryption frames the plaintext inside the ell-bit message block as an
8-byte little-endian length followed by the raw bytes and zero padding, so
decryption recovers the exact input.  Parameter sets with ell < 72 bits
cannot hold the frame and are rejected for file encryption.
"""

from __future__ import annotations

import json
import secrets
import struct
import sys

import click
import numpy as np

from . import bench as bench_mod
from . import envelope as env
from .game import cstar, gs_setup, kstar_op_uni, tstar_op_uni
from .hybrids import (high_bits_projection, hyb_update_sampler,
                      make_update_instance, real_update_sampler, sim_ue_enc,
                      smudging_estimate, statistical_distance_estimate)
from .matrix import DimensionMismatchError, RngHandle, gen_public_matrix
from .params import (UnknownParamSetError, bound_sides, empirical_chain_epochs,
                     load_paramset, max_certified_epochs, params_dump,
                     registered_names, validate_correctness_bound)
from .pke import (MessageLengthError, bits_from_bytes, bytes_from_bits,
                  pke_enc, pke_setup)
from .ue import (EpochKey, EpochMismatchError, UeCiphertext, ue_dec, ue_kg,
                 ue_tg, ue_upd)

EXIT_OK = 0
EXIT_MALFORMED = 3
EXIT_EPOCH = 4
EXIT_MSGLEN = 5
EXIT_UNKNOWN_NAME = 6

_ERROR_CODES = (
    (env.MalformedEnvelopeError, EXIT_MALFORMED),
    (DimensionMismatchError, EXIT_MALFORMED),
    (EpochMismatchError, EXIT_EPOCH),
    (MessageLengthError, EXIT_MSGLEN),
    (UnknownParamSetError, EXIT_UNKNOWN_NAME),
    (bench_mod.UnknownBenchTargetError, EXIT_UNKNOWN_NAME),
)


def _run(fn):
    try:
        fn()
    except tuple(e for e, _ in _ERROR_CODES) as exc:
        for err_type, code in _ERROR_CODES:
            if isinstance(exc, err_type):
                click.echo(f"error: {exc}", err=True)
                sys.exit(code)
        raise


def _rng_from(seed_hex: str | None, label: str) -> RngHandle:
    raw = bytes.fromhex(seed_hex) if seed_hex else secrets.token_bytes(32)
    return RngHandle(raw).derive(label)


# -- message framing --------------------------------------------------------

def message_capacity(p) -> int:
    """Largest file (in bytes) one ciphertext can carry."""
    if p.ell < 72:
        raise MessageLengthError(
            f"{p.name}: message space of {p.ell} bits cannot hold the 8-byte "
            "length frame")
    return (p.ell - 64) // 8


def pack_message(data: bytes, p) -> np.ndarray:
    cap = message_capacity(p)
    if len(data) > cap:
        raise MessageLengthError(
            f"message of {len(data)} bytes exceeds capacity {cap} of {p.name}")
    block = struct.pack("<Q", len(data)) + data + b"\x00" * (cap - len(data))
    bits = np.zeros(p.ell, dtype=np.uint8)
    bits[:8 * len(block)] = bits_from_bytes(block, 8 * len(block))
    return bits


def unpack_message(bits: np.ndarray, p) -> bytes:
    cap = message_capacity(p)
    block = bytes_from_bits(bits)[:8 + cap]
    (length,) = struct.unpack_from("<Q", block, 0)
    if length > cap:
        raise MessageLengthError(f"decoded length {length} exceeds capacity {cap}")
    return block[8:8 + length]


# -- command group -----------------------------------------------------------

@click.group()
def main():
    """Updatable encryption tool: rotate keys, update ciphertexts in place."""


@main.group()
def params():
    """Inspect registered parameter sets."""


@params.command("list")
def params_list():
    for name in registered_names():
        p = load_paramset(name)
        click.echo(f"{name:18} id={p.paramset_id:<3} n={p.n:<5} D={p.D:<3} "
                   f"B={p.B} {p.m_bar}x{p.n_bar} s={p.s} mode={p.gen_mode}")


@params.command("show")
@click.argument("name")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Also write the dump as a paramset envelope file.")
def params_show(name, out_path):
    def body():
        p = load_paramset(name)
        click.echo(params_dump(p), nl=False)
        if out_path:
            with open(out_path, "wb") as fh:
                fh.write(env.pack_paramset(p))
            click.echo(f"wrote {out_path}")
    _run(body)


@main.command()
@click.option("--params", "params_name", required=True, help="Parameter set name.")
@click.option("--epoch", type=click.IntRange(min=0), required=True)
@click.option("--seed", "seed_hex", default=None,
              help="Hex seed; reuse one seed across epochs to share the public matrix.")
@click.option("--out-key", type=click.Path(), required=True)
@click.option("--out-pub", type=click.Path(), required=True)
def keygen(params_name, epoch, seed_hex, out_key, out_pub):
    """Generate an epoch key; writes the secret key file and the public-key file."""
    def body():
        p = load_paramset(params_name)
        master = bytes.fromhex(seed_hex) if seed_hex else secrets.token_bytes(32)
        a_seed = RngHandle(master).derive("a-seed").bytes(env.A_SEED_LEN)
        A = gen_public_matrix(a_seed, p)
        key = ue_kg(RngHandle(master).derive(f"epoch:{epoch}"), p, A, epoch)
        with open(out_key, "wb") as fh:
            fh.write(env.pack_epoch_key(p, key, a_seed))
        with open(out_pub, "wb") as fh:
            fh.write(env.pack_public_key(p, epoch, key.pk_B, a_seed))
        click.echo(f"wrote {out_key} and {out_pub} ({p.name}, epoch {epoch})")
    _run(body)


def _load_key_material(path):
    """Accept an epoch-key or public-key file; return (p, epoch, pk_B, a_seed)."""
    e = env.read_envelope_file(path)
    if e.kind == env.KIND_EPOCH_KEY:
        key, a_seed = e.payload
        return e.p, e.epoch, key.pk_B, a_seed
    if e.kind == env.KIND_PUBLIC_KEY:
        pk_B, a_seed = e.payload
        return e.p, e.epoch, pk_B, a_seed
    raise env.MalformedEnvelopeError(
        f"expected a key file, got {env.KIND_NAMES[e.kind]}")


@main.command()
@click.option("--key", "key_path", type=click.Path(exists=True), required=True)
@click.option("--message-file", type=click.Path(exists=True), required=True)
@click.option("--seed", "seed_hex", default=None)
@click.option("--out", type=click.Path(), required=True)
def encrypt(key_path, message_file, seed_hex, out):
    """Encrypt a file under an epoch key (public-key file suffices)."""
    def body():
        p, epoch, pk_B, a_seed = _load_key_material(key_path)
        with open(message_file, "rb") as fh:
            data = fh.read()
        bits = pack_message(data, p)
        A = gen_public_matrix(a_seed, p)
        ct = pke_enc(_rng_from(seed_hex, "encrypt"), p, A, pk_B, bits)
        with open(out, "wb") as fh:
            fh.write(env.pack_ciphertext(p, UeCiphertext(epoch, ct.C1, ct.C2)))
        click.echo(f"wrote {out} (epoch {epoch})")
    _run(body)


@main.command()
@click.option("--key", "key_path", type=click.Path(exists=True), required=True)
@click.option("--ct", "ct_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
def decrypt(key_path, ct_path, out):
    """Decrypt a ciphertext file with the matching epoch key."""
    def body():
        ke = env.read_envelope_file(key_path, expect_kind=env.KIND_EPOCH_KEY)
        ce = env.read_envelope_file(ct_path, expect_kind=env.KIND_CIPHERTEXT)
        if ke.p.paramset_id != ce.p.paramset_id:
            raise env.MalformedEnvelopeError("key and ciphertext use different parameter sets")
        key, _ = ke.payload
        ct = ce.payload
        if ct.epoch != key.epoch:
            raise EpochMismatchError(
                f"ciphertext epoch {ct.epoch} != key epoch {key.epoch}")
        bits = ue_dec(ke.p, key, ct)
        data = unpack_message(bits, ke.p)
        with open(out, "wb") as fh:
            fh.write(data)
        click.echo(f"wrote {out} ({len(data)} bytes)")
    _run(body)


@main.command()
@click.option("--prev-key", type=click.Path(exists=True), required=True,
              help="Epoch-key file for epoch e.")
@click.option("--next-pub", type=click.Path(exists=True), required=True,
              help="Public-key file for epoch e+1.")
@click.option("--seed", "seed_hex", default=None)
@click.option("--out", type=click.Path(), required=True)
def token(prev_key, next_pub, seed_hex, out):
    """Generate the update token from the old secret key and new public key."""
    def body():
        ke = env.read_envelope_file(prev_key, expect_kind=env.KIND_EPOCH_KEY)
        pe = env.read_envelope_file(next_pub, expect_kind=env.KIND_PUBLIC_KEY)
        if ke.p.paramset_id != pe.p.paramset_id:
            raise env.MalformedEnvelopeError("key files use different parameter sets")
        key, a_seed_prev = ke.payload
        pk_next, a_seed_next = pe.payload
        if a_seed_prev != a_seed_next:
            raise env.MalformedEnvelopeError(
                "keys belong to different deployments (public-matrix seeds differ)")
        if pe.epoch != ke.epoch + 1:
            raise EpochMismatchError(
                f"need consecutive epochs, got {ke.epoch} -> {pe.epoch}")
        A = gen_public_matrix(a_seed_prev, ke.p)
        tok = ue_tg(_rng_from(seed_hex, "token"), ke.p, A, key.sk_S, pk_next, pe.epoch)
        with open(out, "wb") as fh:
            fh.write(env.pack_token(ke.p, tok))
        click.echo(f"wrote {out} (token into epoch {pe.epoch})")
    _run(body)


@main.command()
@click.option("--token", "token_path", type=click.Path(exists=True), required=True)
@click.option("--ct", "ct_path", type=click.Path(exists=True), required=True)
@click.option("--seed", "seed_hex", default=None)
@click.option("--out", type=click.Path(), required=True)
def update(token_path, ct_path, seed_hex, out):
    """Re-encrypt a ciphertext file to the token's target epoch."""
    def body():
        te = env.read_envelope_file(token_path, expect_kind=env.KIND_TOKEN)
        ce = env.read_envelope_file(ct_path, expect_kind=env.KIND_CIPHERTEXT)
        if te.p.paramset_id != ce.p.paramset_id:
            raise env.MalformedEnvelopeError("token and ciphertext use different parameter sets")
        ct2 = ue_upd(_rng_from(seed_hex, "update"), te.p, te.payload, ce.payload)
        with open(out, "wb") as fh:
            fh.write(env.pack_ciphertext(te.p, ct2))
        click.echo(f"wrote {out} (epoch {ct2.epoch})")
    _run(body)


@main.command("verify-bound")
@click.option("--params", "params_name", required=True)
@click.option("--max-epochs", "T", type=click.IntRange(min=1), required=True)
def verify_bound(params_name, T):
    """Evaluate the epoch-correctness inequality for T chained updates."""
    def body():
        p = load_paramset(params_name)
        lhs, rhs = bound_sides(p, T)
        ok = validate_correctness_bound(p, T)
        click.echo(f"parameter set : {p.name}")
        click.echo(f"epoch budget T: {T}")
        click.echo(f"noise bound   : {lhs}")
        click.echo(f"per-update cap: q/(T*2^(B+1)) = {rhs} "
                   f"(~{float(rhs):.4f})")
        cert = max_certified_epochs(p)
        click.echo(f"verdict       : {'certified' if ok else 'NOT certified'} for T={T}")
        click.echo(f"certified up to T={'unbounded' if cert is None else cert}; "
                   f"empirically clean chains observed up to T={empirical_chain_epochs(p)}")
        if not ok:
            sys.exit(1)
    _run(body)


@main.command("bench")
@click.option("--level", "levels", multiple=True, default=("640", "976", "1344"),
              help="Repeatable; one of 640 / 976 / 1344.")
@click.option("--mode", "modes", multiple=True, default=("aes-like", "shake-like"))
@click.option("--runs", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--out", "out_csv", type=click.Path(), default=None,
              help="Also write machine-readable CSV here.")
def bench(levels, modes, runs, out_csv):
    """Time UE.KG / UE.Enc / UE.Dec / UE.TG / UE.Upd per level and mode."""
    def body():
        results = bench_mod.run_benchmarks(levels, modes, runs)
        click.echo(bench_mod.format_table(results), nl=False)
        if out_csv:
            with open(out_csv, "w") as fh:
                fh.write(bench_mod.to_csv(results))
            click.echo(f"wrote {out_csv}")
    _run(body)


# -- scripted security-game runner -------------------------------------------

def _run_game_script(records: list[dict], p, rng: RngHandle, b: int) -> dict:
    _, A = pke_setup(rng, p)
    game = gs_setup(rng, p, A, b)
    by_qid: dict[int, object] = {}
    guess = 0
    lines = []

    for i, rec in enumerate(records):
        op = rec.get("op")
        if op == "enc":
            ct = game.o_enc(bits_from_bytes(bytes.fromhex(rec["message"]), p.ell))
            by_qid[game.qid] = ct
            lines.append(f"[{i}] enc -> qid {game.qid} at epoch {game.e}")
        elif op == "next":
            game.o_next()
            lines.append(f"[{i}] next -> epoch {game.e}")
        elif op == "upd":
            prev = by_qid.get(rec["qid"])
            out = game.o_upd(prev) if prev is not None else None
            if out is not None:
                by_qid[rec["qid"]] = out
            lines.append(f"[{i}] upd qid {rec['qid']} -> "
                         + ("ok" if out is not None else "reject"))
        elif op == "corr":
            out = game.o_corr(rec["inp"], rec["epoch"])
            lines.append(f"[{i}] corr {rec['inp']} @ {rec['epoch']} -> "
                         + ("ok" if out is not None else "reject"))
        elif op == "chall":
            prev = by_qid.get(rec["qid"])
            out = game.o_chall(
                bits_from_bytes(bytes.fromhex(rec["message"]), p.ell), prev) \
                if prev is not None else None
            lines.append(f"[{i}] chall -> " + ("ok" if out is not None else "reject"))
        elif op == "upd-ct":
            out = game.o_upd_ct()
            lines.append(f"[{i}] upd-ct -> " + ("ok" if out is not None else "reject"))
        elif op == "dec":
            target = by_qid.get(rec["qid"]) if "qid" in rec else game.chall_ct
            out = game.o_dec(target) if target is not None else None
            lines.append(f"[{i}] dec -> " + ("reject" if out is None
                                             else bytes_from_bits(out).hex()))
        elif op == "guess":
            guess = int(rec["bit"])
            lines.append(f"[{i}] guess {guess}")
        else:
            raise click.ClickException(f"script record {i}: unknown op {op!r}")

    ls = game.leakage
    ks = kstar_op_uni(ls)
    ts = tstar_op_uni(ls, ks)
    cs = cstar(ls, ts, cc="uni")
    twf = game.twf or (1 if ks & cs else 0)
    returned = game.rng.bit() if twf else guess
    return {
        "lines": lines, "K": sorted(ls.K), "T": sorted(ls.T), "C": sorted(ls.C),
        "K*": sorted(ks), "T*": sorted(ts), "C*": sorted(cs),
        "twf": twf, "guess": guess, "returned": returned,
    }


@main.command("game-run")
@click.option("--script", "script_path", type=click.Path(exists=True), required=True,
              help="JSON-lines trace: one {\"op\": ..., ...} record per line.")
@click.option("--params", "params_name", default="toy-16", show_default=True)
@click.option("--bit", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--seed", "seed_hex", default=None)
def game_run(script_path, params_name, bit, seed_hex):
    """Replay a scripted oracle trace and report leakage sets and the verdict."""
    def body():
        p = load_paramset(params_name)
        with open(script_path) as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        report = _run_game_script(records, p, _rng_from(seed_hex, "game"), bit)
        for line in report["lines"]:
            click.echo(line)
        for key in ("K", "T", "C", "K*", "T*", "C*"):
            click.echo(f"{key:3}= {report[key]}")
        click.echo(f"twf={report['twf']} "
                   f"verdict={'trivial-win' if report['twf'] else 'clean'} "
                   f"guess={report['guess']} returned={report['returned']}")
    _run(body)


@main.command("hybrids-test")
@click.option("--params", "params_name", default="toy-16", show_default=True)
@click.option("--samples", type=click.IntRange(min=100), default=20000, show_default=True)
@click.option("--seed", "seed_hex", default=None)
def hybrids_test(params_name, samples, seed_hex):
    """Run the hybrid/simulator statistical checks and print the distances."""
    def body():
        p = load_paramset(params_name)
        rng = _rng_from(seed_hex or "1bad5eed", "hybrids")
        inst = make_update_instance(p)
        proj = high_bits_projection(p)

        pairs = min(500, samples)
        agree = 0
        real = real_update_sampler(inst, rng.derive("agree-real"))
        hyb = hyb_update_sampler(inst, rng.derive("agree-hyb"))
        for _ in range(pairs):
            a = ue_dec(p, _key_next(inst), real())
            b = ue_dec(p, _key_next(inst), hyb())
            agree += bool(np.array_equal(a, b) and np.array_equal(a, inst.m))
        click.echo(f"decrypt agreement      : {agree}/{pairs}")

        d_rh = statistical_distance_estimate(
            real_update_sampler(inst, rng.derive("d-real")),
            hyb_update_sampler(inst, rng.derive("d-hyb")), samples, proj)
        d_rr = statistical_distance_estimate(
            real_update_sampler(inst, rng.derive("b-real-1")),
            real_update_sampler(inst, rng.derive("b-real-2")), samples, proj)
        click.echo(f"real-vs-hybrid distance: {d_rh:.5f} (baseline {d_rr:.5f})")

        sm, sm_base = smudging_estimate(1, 1024, max(samples, 1_000_000), rng.derive("smudge"))
        click.echo(f"smudging distance      : {sm:.5f} (baseline {sm_base:.5f}, "
                   f"analytic {1 / 2049:.5f})")

        draws = max(2, samples // (p.m_bar * p.n))
        flat = np.concatenate([
            sim_ue_enc(rng.derive(f"sim{i}"), p).C1.data.ravel() >> (p.D - 4)
            for i in range(draws)])
        counts = np.bincount(flat, minlength=16)
        expected = flat.size / 16
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        click.echo(f"sim uniformity chi2(15): {chi2:.2f} (alpha=0.001 cutoff 37.70)")
    _run(body)


def _key_next(inst) -> EpochKey:
    return EpochKey(epoch=1, sk_S=inst.sk_next, pk_B=inst.pk_next)


if __name__ == "__main__":
    main()
