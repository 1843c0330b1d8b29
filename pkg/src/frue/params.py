"""Parameter sets: registry, validation, and the epoch-correctness bound.

Every scheme constant lives in a ParamSet: the modulus exponent D (q = 2**D),
the message width B, the LWE dimension n, the ciphertext block shape
(m_bar x n_bar), and the error distribution chi given as a cumulative table
over its support {-s, ..., s}.

The three production-scale sets reuse the FrodoKEM reference constants
(dimensions 640 / 976 / 1344, with their published error tables).  The toy
sets are first-class registered sets so that exhaustive and statistical tests
are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class UnknownParamSetError(KeyError):
    """Raised when a parameter-set name is not registered."""


GEN_MODES = ("aes-like", "shake-like", "toy")


@dataclass(frozen=True)
class ParamSet:
    """Immutable bundle of scheme constants.

    chi_cdf is the cumulative sampling table: an entry value v is produced
    with probability (chi_cdf[v] - chi_cdf[v-1]) / 2**chi_sample_bits
    (v = 0 uses chi_cdf[0] + 1 counts), then a uniform sign is applied.
    """

    name: str
    D: int                 # modulus exponent, q = 2**D
    B: int                 # message bits packed per matrix entry
    n: int                 # LWE dimension
    m_bar: int             # ciphertext rows
    n_bar: int             # ciphertext / key columns
    s: int                 # support bound of chi: values lie in [-s, s]
    chi_cdf: tuple[int, ...]
    chi_sample_bits: int
    T_max: int             # operational epoch budget for this set
    gen_mode: str
    paramset_id: int

    def __post_init__(self) -> None:
        if not (1 <= self.B <= self.D <= 16):
            raise ValueError(f"need 1 <= B <= D <= 16, got B={self.B} D={self.D}")
        if self.n <= 0 or self.n % 8 != 0:
            raise ValueError(f"n must be a positive multiple of 8, got {self.n}")
        if self.m_bar <= 0 or self.n_bar <= 0:
            raise ValueError("m_bar and n_bar must be positive")
        if self.s < 0:
            raise ValueError("s must be non-negative")
        if self.T_max < 1:
            raise ValueError("T_max must be positive")
        if self.gen_mode not in GEN_MODES:
            raise ValueError(f"unknown gen_mode {self.gen_mode!r}")
        if len(self.chi_cdf) != self.s + 1:
            raise ValueError("chi_cdf must have s + 1 entries")
        if any(b < a for a, b in zip(self.chi_cdf, self.chi_cdf[1:])):
            raise ValueError("chi_cdf must be non-decreasing")
        if any(c < 0 for c in self.chi_cdf):
            raise ValueError("chi_cdf entries must be non-negative")
        if self.chi_cdf[-1] != (1 << self.chi_sample_bits) - 1:
            raise ValueError("chi_cdf must end at 2**chi_sample_bits - 1")

    @property
    def q(self) -> int:
        return 1 << self.D

    @property
    def ell(self) -> int:
        """Message length in bits: B * m_bar * n_bar."""
        return self.B * self.m_bar * self.n_bar

    def chi_pmf(self) -> dict[int, Fraction]:
        """Exact probability mass of chi on {-s, ..., s}, derived from chi_cdf."""
        denom = 1 << self.chi_sample_bits
        counts = [self.chi_cdf[0] + 1]
        counts += [self.chi_cdf[k] - self.chi_cdf[k - 1] for k in range(1, self.s + 1)]
        pmf = {0: Fraction(counts[0], denom)}
        for z in range(1, self.s + 1):
            half = Fraction(counts[z], 2 * denom)
            pmf[z] = half
            pmf[-z] = half
        return pmf


def bound_sides(p: ParamSet, T: int) -> tuple[int, Fraction]:
    """Both sides of the epoch-correctness inequality, exactly.

    Left side is the worst-case infinity norm of the noise one update adds:
    2*(n**2*D*s**3 + n**2*s**3) + n*D*s + n*s**2.  Right side is the per-update
    budget q / (T * 2**(B+1)) that keeps T chained updates decodable.
    """
    n, D, s = p.n, p.D, p.s
    lhs = 2 * (n * n * D * s**3 + n * n * s**3) + n * D * s + n * s * s
    rhs = Fraction(p.q, T * (1 << (p.B + 1)))
    return lhs, rhs


def validate_correctness_bound(p: ParamSet, T: int) -> bool:
    """True iff the set is certified for T chained updates (exact arithmetic)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    lhs, rhs = bound_sides(p, T)
    return lhs < rhs


def max_certified_epochs(p: ParamSet) -> int | None:
    """Largest T with the bound satisfied; 0 if none, None if unbounded (s = 0)."""
    lhs, _ = bound_sides(p, 1)
    if lhs == 0:
        return None
    # lhs < q / (T * 2**(B+1))  <=>  T < q / (lhs * 2**(B+1))
    return (p.q - 1) // (lhs * (1 << (p.B + 1)))


# Support-1 table giving P(0) = 1/2 and P(+/-1) = 1/4.
_TOY_CDF = (16383, 32767)

# FrodoKEM reference error tables (15-bit cumulative form; the sampler draws
# one extra sign bit).  Cross-checked in tests: each implied mass function is
# symmetric, sums to exactly 1, and has the documented variance.
_CDF_640 = (4643, 13363, 20579, 25843, 29227, 31145, 32103, 32525,
            32689, 32745, 32762, 32766, 32767)
_CDF_976 = (5638, 15915, 23689, 28571, 31116, 32217, 32613, 32731,
            32760, 32766, 32767)
_CDF_1344 = (9142, 23462, 30338, 32361, 32725, 32765, 32767)


def _frodo(name: str, n: int, D: int, B: int, cdf: tuple[int, ...],
           mode: str, pid: int) -> ParamSet:
    return ParamSet(name=name, D=D, B=B, n=n, m_bar=8, n_bar=8,
                    s=len(cdf) - 1, chi_cdf=cdf, chi_sample_bits=15,
                    T_max=16, gen_mode=mode, paramset_id=pid)


_REGISTRY: dict[str, ParamSet] = {}
for _p in (
    _frodo("frodo-640-shake", 640, 15, 2, _CDF_640, "shake-like", 1),
    _frodo("frodo-976-shake", 976, 16, 3, _CDF_976, "shake-like", 2),
    _frodo("frodo-1344-shake", 1344, 16, 4, _CDF_1344, "shake-like", 3),
    _frodo("frodo-640-aes", 640, 15, 2, _CDF_640, "aes-like", 11),
    _frodo("frodo-976-aes", 976, 16, 3, _CDF_976, "aes-like", 12),
    _frodo("frodo-1344-aes", 1344, 16, 4, _CDF_1344, "aes-like", 13),
    # Small enough for exhaustive tests, big enough q for certified updates:
    # the bound holds up to T = 7, and T_max = 4 is the advertised budget.
    ParamSet(name="toy-16", D=16, B=1, n=8, m_bar=16, n_bar=8, s=1,
             chi_cdf=_TOY_CDF, chi_sample_bits=15, T_max=4,
             gen_mode="toy", paramset_id=100),
    # 8-bit modulus for exhaustive encode/decode sweeps; never bound-certified.
    ParamSet(name="toy-8", D=8, B=2, n=8, m_bar=4, n_bar=4, s=1,
             chi_cdf=_TOY_CDF, chi_sample_bits=15, T_max=1,
             gen_mode="toy", paramset_id=101),
):
    _REGISTRY[_p.name] = _p

_ALIASES = {
    "frodo-640": "frodo-640-shake",
    "frodo-976": "frodo-976-shake",
    "frodo-1344": "frodo-1344-shake",
}

# Largest epoch budget at which chained update-then-decrypt ran clean in
# this library's own trials (0 = a single update already corrupts at least
# one decode).  The production sets fail after one hop: the update noise is
# orders of magnitude past q / 2**(B+1), so only the toy-16 geometry rotates.
EMPIRICAL_CHAIN_EPOCHS = {
    "frodo-640-shake": 0, "frodo-976-shake": 0, "frodo-1344-shake": 0,
    "frodo-640-aes": 0, "frodo-976-aes": 0, "frodo-1344-aes": 0,
    "toy-16": 4, "toy-8": 0,
}


def registered_names() -> list[str]:
    return sorted(_REGISTRY, key=lambda name: _REGISTRY[name].paramset_id)


def load_paramset(name: str) -> ParamSet:
    """Look up a registered set (aliases like "frodo-640" resolve to SHAKE)."""
    canonical = _ALIASES.get(name, name)
    try:
        return _REGISTRY[canonical]
    except KeyError:
        raise UnknownParamSetError(name) from None


def load_by_id(paramset_id: int) -> ParamSet:
    for p in _REGISTRY.values():
        if p.paramset_id == paramset_id:
            return p
    raise UnknownParamSetError(f"id {paramset_id}")


def empirical_chain_epochs(p: ParamSet) -> int:
    return EMPIRICAL_CHAIN_EPOCHS.get(p.name, 0)


def params_dump(p: ParamSet) -> str:
    """Plain key=value dump of every constant, for audit and file payloads."""
    lines = [
        f"name={p.name}",
        f"paramset_id={p.paramset_id}",
        f"D={p.D}",
        f"q={p.q}",
        f"B={p.B}",
        f"n={p.n}",
        f"m_bar={p.m_bar}",
        f"n_bar={p.n_bar}",
        f"s={p.s}",
        f"chi_sample_bits={p.chi_sample_bits}",
        "chi_cdf=" + ",".join(str(c) for c in p.chi_cdf),
        f"T_max={p.T_max}",
        f"gen_mode={p.gen_mode}",
        f"message_bits={p.ell}",
    ]
    certified = max_certified_epochs(p)
    lines.append(f"bound_certified_epochs={'unbounded' if certified is None else certified}")
    lines.append(f"empirical_chain_epochs={empirical_chain_epochs(p)}")
    return "\n".join(lines) + "\n"
