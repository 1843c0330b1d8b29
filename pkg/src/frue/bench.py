"""Timing harness for the five scheme operations across parameter levels.

Only the library calls are timed (no I/O), on the monotonic clock, with one
discarded warm-up call per operation.  Reports the per-operation mean and
sample standard deviation; a single run reports a standard deviation of 0.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

from .matrix import RngHandle, gen_public_matrix
from .params import ParamSet, UnknownParamSetError, load_paramset
from .pke import random_message_bits
from .ue import ue_dec, ue_enc, ue_kg, ue_tg, ue_upd

BENCH_OPS = ("UE.KG", "UE.Enc", "UE.Dec", "UE.TG", "UE.Upd")
BENCH_LEVELS = ("640", "976", "1344")
CSV_COLUMNS = ("level", "mode", "op", "runs", "mean_s", "std_s")


class UnknownBenchTargetError(ValueError):
    """Level / gen-mode combination is not benchable."""


@dataclass(frozen=True)
class BenchResult:
    level: str
    mode: str
    op: str
    runs: int
    mean_s: float
    std_s: float


def paramset_for(level: str, mode: str) -> ParamSet:
    suffix = {"aes-like": "aes", "shake-like": "shake"}.get(mode)
    if suffix is None or str(level) not in BENCH_LEVELS:
        raise UnknownBenchTargetError(f"no benchmark target for level={level} mode={mode}")
    try:
        return load_paramset(f"frodo-{level}-{suffix}")
    except UnknownParamSetError as exc:
        raise UnknownBenchTargetError(str(exc)) from None


def _time_op(fn, runs: int) -> tuple[float, float]:
    fn()  # warm-up, discarded
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if runs > 1 else 0.0
    return mean, std


def bench_level(level: str, mode: str, runs: int,
                seed: bytes = b"frue-bench") -> list[BenchResult]:
    if runs < 1:
        raise ValueError("runs must be >= 1")
    p = paramset_for(level, mode)
    rng = RngHandle(seed)
    A = gen_public_matrix(rng.bytes(16), p)
    k0 = ue_kg(rng, p, A, 0)
    k1 = ue_kg(rng, p, A, 1)
    tok = ue_tg(rng, p, A, k0.sk_S, k1.pk_B, 1)
    m = random_message_bits(rng, p)
    ct = ue_enc(rng, p, A, k0, m)

    ops = {
        "UE.KG": lambda: ue_kg(rng, p, A, 0),
        "UE.Enc": lambda: ue_enc(rng, p, A, k0, m),
        "UE.Dec": lambda: ue_dec(p, k0, ct),
        "UE.TG": lambda: ue_tg(rng, p, A, k0.sk_S, k1.pk_B, 1),
        "UE.Upd": lambda: ue_upd(rng, p, tok, ct),
    }
    out = []
    for op in BENCH_OPS:
        mean, std = _time_op(ops[op], runs)
        out.append(BenchResult(str(level), mode, op, runs, mean, std))
    return out


def run_benchmarks(levels, modes, runs: int, seed: bytes = b"frue-bench") -> list[BenchResult]:
    results = []
    for level in levels:
        for mode in modes:
            results.extend(bench_level(str(level), mode, runs, seed=seed))
    return results


def to_csv(results: list[BenchResult]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in results:
        lines.append(f"{r.level},{r.mode},{r.op},{r.runs},{r.mean_s:.6f},{r.std_s:.6f}")
    return "\n".join(lines) + "\n"


def format_table(results: list[BenchResult]) -> str:
    blocks = []
    seen = []
    for r in results:
        if (r.level, r.mode) not in seen:
            seen.append((r.level, r.mode))
    for level, mode in seen:
        rows = [r for r in results if (r.level, r.mode) == (level, mode)]
        blocks.append(f"frodo-{level} ({mode}), {rows[0].runs} runs")
        blocks.append(f"  {'operation':<8} {'mean [s]':>12} {'std [s]':>12}")
        for r in rows:
            blocks.append(f"  {r.op:<8} {r.mean_s:>12.6f} {r.std_s:>12.6f}")
        blocks.append("")
    return "\n".join(blocks)
