"""Analytical evaluators: erased-edge distribution, ensemble bit erasure
probability, stopping-set probability and the combined error estimate.

All sums are carried out in exact rationals; ``float()`` is applied only when
a caller asks for a double.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .ensemble import DegreeSpec, binom, to_fraction
from .genpoly import count_recursion, output_poly

BINOMIAL_BASES = ("n", "k")


@dataclass(frozen=True)
class AnalysisRequest:
    k: int
    n: int
    spec: DegreeSpec
    epsilon: Fraction = Fraction(0)
    e_size_range: tuple[int, int] | None = None
    s_max: int | None = None
    z_max: int | None = None
    eq14_binomial_base: str = "n"

    def __post_init__(self):
        eps = to_fraction(self.epsilon)
        if not 0 <= eps <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
        object.__setattr__(self, "epsilon", eps)
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be positive")
        if self.s_max is not None and not 0 <= self.s_max <= self.k:
            raise ValueError(f"s_max must lie in [0, k={self.k}]")
        if self.z_max is not None and not 0 <= self.z_max <= self.n:
            raise ValueError(f"z_max must lie in [0, n={self.n}]")
        if self.e_size_range is not None:
            lo, hi = self.e_size_range
            if not 0 <= lo <= hi <= self.n:
                raise ValueError(f"e_size_range must satisfy 0 <= lo <= hi <= n={self.n}")
        if self.eq14_binomial_base not in BINOMIAL_BASES:
            raise ValueError(f"eq14_binomial_base must be one of {BINOMIAL_BASES}")

    @property
    def s_limit(self) -> int:
        return self.k if self.s_max is None else self.s_max

    @property
    def z_limit(self) -> int:
        return self.n if self.z_max is None else self.z_max


@dataclass
class AnalysisReport:
    pb_uncorrectable: Fraction
    per_e_breakdown: dict[int, Fraction]
    stopping_term: Fraction | None = None
    stopping_term_per_bit: Fraction | None = None
    integrated: Fraction | None = None
    clamp_events: int = 0
    flags: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict, compare=False)


def edge_distribution(spec: DegreeSpec, n: int, e_size: int) -> dict[int, Fraction]:
    """Distribution of the number of edges hanging off ``e_size`` erased outputs."""
    if not 0 <= e_size <= n:
        raise ValueError(f"e_size must lie in [0, {n}]")
    poly = output_poly(spec, n)
    total = comb(n, e_size)
    return {
        b: Fraction(c, total)
        for (a, b), c in sorted(poly.terms.items())
        if a == e_size
    }


def _pattern_weight(n: int, e_size: int, eps: Fraction) -> Fraction:
    return comb(n, e_size) * eps**e_size * (1 - eps) ** (n - e_size)


def avg_bit_erasure(req: AnalysisRequest) -> AnalysisReport:
    """Ensemble-average bit erasure probability from uncorrectable sets.

    For every erasure size the erased-edge distribution is combined with the
    probability that the maximal uncorrectable set holds ``V`` inputs, using
    an edge budget of ``|e| * d_max``.  A spec with ``row_weight`` takes the
    constant-row-weight generating function ``(1 + y z^r)^k``.
    """
    t0 = time.perf_counter()
    k, n, spec, eps = req.k, req.n, req.spec, req.epsilon
    lo, hi = req.e_size_range or (0, n)
    budget_max = hi * spec.d_max
    table = count_recursion(k, budget_max, spec)
    T = table.T(k)
    poly = output_poly(spec, n)

    per_e: dict[int, Fraction] = {}
    for e_size in range(lo, hi + 1):
        weight = _pattern_weight(n, e_size, eps)
        budget = e_size * spec.d_max
        total = comb(n, e_size)
        inner = Fraction(0)
        if weight:
            for L in range(1, budget + 1):
                num = poly.terms.get((e_size, L), 0)
                if not num:
                    continue
                lost = sum(V * table.M(k, budget, L, V) for V in range(1, k + 1))
                inner += Fraction(num, total) * Fraction(lost, k * T)
        per_e[e_size] = weight * inner

    pb = sum(per_e.values(), Fraction(0))
    flags = [
        f"slice_out_of_range:e={e_size}"
        for e_size, val in per_e.items()
        if not 0 <= val <= _pattern_weight(n, e_size, eps)
    ]
    if not 0 <= pb <= 1:
        flags.append("pb_out_of_range")
    return AnalysisReport(
        pb_uncorrectable=pb,
        per_e_breakdown=per_e,
        clamp_events=table.clamp_events,
        flags=flags,
        metadata={
            "k": k,
            "n": n,
            "epsilon": f"{eps.numerator}/{eps.denominator}",
            "path": "row_weight" if spec.lambda_ is None else "lambda",
            "e_size_range": [lo, hi],
            "edge_budget": "e_size*d_max",
            "count_recursion_bases": "N(0,E)=1; N(k,E<0)=0; negative N clamped to 0",
        },
        timings={"pb_seconds": time.perf_counter() - t0},
    )


def _miss_probability(spec: DegreeSpec, total: int, removed: int) -> Fraction:
    """``sum_d rho_d C(total - removed, d) / C(total, d)``; 0/0 terms count as 0."""
    out = Fraction(0)
    for d, p in spec.rho:
        den = binom(total, d)
        if den:
            out += p * Fraction(binom(total - removed, d), den)
    return out


def _zero_one_probabilities(k: int, spec: DegreeSpec, s: int) -> tuple[Fraction, Fraction]:
    p0 = Fraction(0)
    p1 = Fraction(0)
    for d, p in spec.rho:
        den = binom(k, d)
        if not den:
            continue
        p0 += p * Fraction(binom(k - s, d), den)
        p1 += p * Fraction(s * binom(k - s, d - 1), den)
    return p0, p1


def a_s(k: int, n: int, spec: DegreeSpec, s: int, z: int) -> Fraction:
    """Probability that exactly ``z`` outputs miss a fixed ``s``-subset of
    inputs and no output hits it exactly once."""
    if not 0 <= s <= k:
        raise ValueError(f"s must lie in [0, {k}]")
    if not 0 <= z <= n:
        raise ValueError(f"z must lie in [0, {n}]")
    p0, p1 = _zero_one_probabilities(k, spec, s)
    return comb(n, z) * p0**z * (1 - p0 - p1) ** (n - z)


def a_s_marginal(k: int, n: int, spec: DegreeSpec, s: int, z: int) -> Fraction:
    """z-marginal with the degree-one condition folded out:
    ``C(n, z) p0^z (1 - p0)^(n - z)``; sums to one over ``z``."""
    p0, _ = _zero_one_probabilities(k, spec, s)
    return comb(n, z) * p0**z * (1 - p0) ** (n - z)


def stopping_set_probability(k: int, n: int, spec: DegreeSpec, s: int,
                             z_max: int | None = None,
                             binomial_base: str = "n") -> Fraction:
    """Upper bound on the probability of a maximal stopping set of size ``s``.

    ``C(k, s) * sum_z a_s(z) * (1 - sum_d rho_d C(N - z, d) / C(N, d))^(k - s)``
    with ``N = n`` (default) or ``N = k``.
    """
    if not 1 <= s <= k:
        raise ValueError(f"s must lie in [1, {k}]")
    if binomial_base not in BINOMIAL_BASES:
        raise ValueError(f"binomial_base must be one of {BINOMIAL_BASES}")
    z_max = n if z_max is None else z_max
    base = n if binomial_base == "n" else k
    total = Fraction(0)
    for z in range(z_max + 1):
        weight = a_s(k, n, spec, s, z)
        if not weight:
            continue
        trailing = 1 - _miss_probability(spec, base, z)
        total += weight * trailing ** (k - s)
    return comb(k, s) * total


def stopping_term(k: int, n: int, spec: DegreeSpec, s_max: int, z_max: int | None = None,
                  binomial_base: str = "n") -> Fraction:
    """``sum_{s=1..s_max} s * S(k, n, s)``."""
    return sum(
        (s * stopping_set_probability(k, n, spec, s, z_max, binomial_base)
         for s in range(1, s_max + 1)),
        Fraction(0),
    )


def integrated_error(req: AnalysisRequest) -> AnalysisReport:
    """Uncorrectable-set term plus the structural stopping-set term."""
    report = avg_bit_erasure(req)
    t0 = time.perf_counter()
    st = stopping_term(req.k, req.n, req.spec, req.s_limit, req.z_limit, req.eq14_binomial_base)
    report.stopping_term = st
    report.stopping_term_per_bit = st / req.k
    report.integrated = report.pb_uncorrectable + st
    if report.integrated > 1:
        report.flags.append("integrated_gt_1")
    report.metadata.update({
        "eq15_exponent": "k-s",
        "eq14_binomial_base": req.eq14_binomial_base,
        "s_max": req.s_limit,
        "z_max": req.z_limit,
        "stopping_weight": "s (per-bit variant divides by k)",
        "reduced_argument_variant": "unimplemented",
    })
    report.timings["stopping_seconds"] = time.perf_counter() - t0
    return report
