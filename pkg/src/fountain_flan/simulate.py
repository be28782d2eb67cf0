"""Empirical ground truth: Monte Carlo and exhaustive decoding over the BEC.

Monte Carlo trials are grouped in fixed blocks of ``BLOCK`` trials.  Block
``b`` of grid point ``i`` draws from a Philox generator keyed by
``SeedSequence([seed, i, b])``, so trial ``t`` always sees the same random
numbers no matter how many workers run or in which order blocks finish.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from math import comb, factorial, sqrt
from typing import Sequence

import numpy as np

from .analysis import AnalysisReport
from .decoder import peel_residual_mask
from .ensemble import CodeInstance, DegreeSpec, sample_code, to_fraction
from .exceptions import GuardViolation

METRICS = ("bit", "trivial_bit", "block")
MODES = ("monte_carlo", "exhaustive_patterns", "exhaustive_tiny_ensemble")
BLOCK = 4096
MAX_EXHAUSTIVE_N = 22
LOOKUP_MAX_N = 16
TINY_LIMITS = {"k": 4, "n": 5, "d_max": 2}


def default_workers() -> int:
    env = os.environ.get("FOUNTAIN_FLAN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def code_hash(code: CodeInstance) -> str:
    blob = json.dumps(code.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SimConfig:
    k: int
    n: int
    spec: DegreeSpec | None
    epsilons: tuple[Fraction, ...]
    trials: int = 10_000
    seed: int = 0
    mode: str = "monte_carlo"
    metric: str = "bit"
    code: CodeInstance | None = None
    workers: int | None = field(default=None, compare=False)

    def __post_init__(self):
        eps = tuple(to_fraction(e) for e in self.epsilons)
        for e in eps:
            if not 0 <= e <= 1:
                raise ValueError(f"epsilon must lie in [0, 1], got {e}")
        object.__setattr__(self, "epsilons", eps)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.code is not None and (self.code.k != self.k or self.code.n != self.n):
            raise ValueError("fixed code does not match (k, n)")
        if self.code is None and self.spec is None:
            raise ValueError("need either a degree spec or a fixed code")
        if self.mode == "exhaustive_patterns":
            if self.n > MAX_EXHAUSTIVE_N:
                raise GuardViolation(f"exhaustive_patterns needs n <= {MAX_EXHAUSTIVE_N}, got n={self.n}")
            if self.code is None:
                raise ValueError("exhaustive_patterns needs a fixed code")
        if self.mode == "exhaustive_tiny_ensemble":
            if self.spec is None:
                raise ValueError("exhaustive_tiny_ensemble needs a degree spec")
            _check_tiny(self.k, self.n, self.spec)


@dataclass(frozen=True)
class SimPoint:
    epsilon: Fraction
    estimate: float
    stderr: float | None
    trials: int
    exact: Fraction | None = None


@dataclass(frozen=True)
class SimResult:
    mode: str
    metric: str
    points: tuple[SimPoint, ...]
    seed: int | None = None
    code_hash: str | None = None


def _metric_numerator(residual: int, metric: str) -> int:
    if metric == "block":
        return 1 if residual else 0
    return bin(residual).count("1")


def _metric_denominator(k: int, metric: str) -> int:
    return 1 if metric == "block" else k


def _pattern_value(code: CodeInstance, out_masks: list[int], erased_mask: int, metric: str) -> int:
    full = (1 << code.k) - 1
    if metric == "trivial_bit":
        covered = 0
        for i, m in enumerate(out_masks):
            if not erased_mask >> i & 1:
                covered |= m
        return bin(full & ~covered).count("1")
    residual = peel_residual_mask(code, erased_mask)
    return _metric_numerator(residual, metric)


def _out_masks(code: CodeInstance) -> list[int]:
    masks = []
    for nb in code.out_adj:
        m = 0
        for j in nb:
            m |= 1 << j
        masks.append(m)
    return masks


def pattern_table(code: CodeInstance, metric: str = "bit") -> np.ndarray:
    """Metric numerator for every erasure mask ``0 .. 2^n - 1``."""
    if code.n > MAX_EXHAUSTIVE_N:
        raise GuardViolation(f"pattern table needs n <= {MAX_EXHAUSTIVE_N}, got n={code.n}")
    masks = _out_masks(code)
    return np.array(
        [_pattern_value(code, masks, e, metric) for e in range(1 << code.n)], dtype=np.int64
    )


def exhaustive_bit_erasure(code: CodeInstance, epsilon, metric: str = "bit") -> Fraction:
    """Exact failure metric averaged over all ``2^n`` erasure patterns."""
    if code.n > MAX_EXHAUSTIVE_N:
        raise GuardViolation(f"exhaustive mode needs n <= {MAX_EXHAUSTIVE_N}, got n={code.n}")
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    eps = to_fraction(epsilon)
    if not 0 <= eps <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    table = pattern_table(code, metric)
    by_weight = [0] * (code.n + 1)
    for mask, val in enumerate(table.tolist()):
        by_weight[bin(mask).count("1")] += val
    total = sum(
        (eps**w * (1 - eps) ** (code.n - w) * s for w, s in enumerate(by_weight)),
        Fraction(0),
    )
    return total / _metric_denominator(code.k, metric)


def _check_tiny(k: int, n: int, spec: DegreeSpec) -> None:
    lim = TINY_LIMITS
    if k > lim["k"] or n > lim["n"] or spec.d_max > lim["d_max"]:
        raise GuardViolation(
            f"tiny ensemble needs k <= {lim['k']}, n <= {lim['n']}, d_max <= {lim['d_max']}; "
            f"got k={k}, n={n}, d_max={spec.d_max}"
        )
    if spec.d_max > k:
        raise GuardViolation(f"d_max={spec.d_max} exceeds k={k}")


def exhaustive_tiny_ensemble(k: int, n: int, spec: DegreeSpec, epsilon, metric: str = "bit") -> Fraction:
    """Exact ensemble average of :func:`exhaustive_bit_erasure` over all labeled codes.

    Each output independently is erased (prob ``eps``) or arrives with
    neighbourhood ``S`` (prob ``(1 - eps) rho_|S| / C(k, |S|)``).  Decoding
    only sees the multiset of arrived neighbourhoods, so the sum runs over
    multisets weighted by multinomial coefficients.
    """
    _check_tiny(k, n, spec)
    eps = to_fraction(epsilon)
    if not 0 <= eps <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    options: list[tuple[int, Fraction]] = [(-1, eps)]  # -1 marks an erased output
    for d, p in spec.rho:
        share = (1 - eps) * p / comb(k, d)
        for combo in combinations(range(k), d):
            m = 0
            for j in combo:
                m |= 1 << j
            options.append((m, share))
    denom = _metric_denominator(k, metric)
    total = Fraction(0)
    for pick in combinations_with_replacement(range(len(options)), n):
        counts: dict[int, int] = {}
        for o in pick:
            counts[o] = counts.get(o, 0) + 1
        weight = Fraction(factorial(n))
        for o, c in counts.items():
            weight = weight / factorial(c) * options[o][1] ** c
        if not weight:
            continue
        arrived = [options[o][0] for o in counts if options[o][0] >= 0]
        total += weight * _metric_from_arrived(k, arrived, metric)
    return total / denom


def _metric_from_arrived(k: int, arrived: list[int], metric: str) -> int:
    full = (1 << k) - 1
    covered = 0
    for m in arrived:
        covered |= m
    if metric == "trivial_bit":
        return bin(full & ~covered).count("1")
    unknown = full
    live = list(arrived)
    progress = True
    while progress:
        progress = False
        nxt = []
        for m in live:
            r = m & unknown
            if r == 0:
                continue
            if r & (r - 1) == 0:
                unknown &= ~r
                progress = True
            else:
                nxt.append(m)
        live = nxt
    return _metric_numerator(unknown, metric)


def _block_generator(seed: int, eps_index: int, block: int) -> np.random.Generator:
    key = np.random.SeedSequence([seed, eps_index, block]).generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_block(cfg: SimConfig, eps_index: int, eps: float, block: int, size: int,
               table: np.ndarray | None) -> tuple[int, int]:
    rng = _block_generator(cfg.seed, eps_index, block)
    code_seeds = None
    if cfg.code is None:
        code_seeds = rng.integers(0, 2**63 - 1, size=size)
    erased = rng.random((size, cfg.n)) < eps
    weights = np.left_shift(np.int64(1), np.arange(cfg.n, dtype=np.int64))
    masks = erased.astype(np.int64) @ weights
    if table is not None:
        vals = table[masks]
        return int(vals.sum()), int((vals * vals).sum())
    s = s2 = 0
    code = cfg.code
    for t in range(size):
        if code_seeds is not None:
            code = sample_code(cfg.k, cfg.n, cfg.spec, int(code_seeds[t]))
        v = _pattern_value(code, _out_masks(code), int(masks[t]), cfg.metric)
        s += v
        s2 += v * v
    return s, s2


def mc_bit_erasure(cfg: SimConfig) -> SimResult:
    """Monte Carlo estimate of the decoding failure metric on an i.i.d. BEC."""
    if cfg.mode != "monte_carlo":
        raise ValueError("mc_bit_erasure needs mode='monte_carlo'")
    table = None
    if cfg.code is not None and cfg.n <= LOOKUP_MAX_N:
        table = pattern_table(cfg.code, cfg.metric)
    denom = _metric_denominator(cfg.k, cfg.metric)
    workers = cfg.workers or default_workers()
    blocks = [(b, min(BLOCK, cfg.trials - b * BLOCK)) for b in range(-(-cfg.trials // BLOCK))]
    points = []
    for i, eps in enumerate(cfg.epsilons):
        feps = float(eps)
        jobs = [(cfg, i, feps, b, size, table) for b, size in blocks]
        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(lambda a: _run_block(*a), jobs))
        else:
            parts = [_run_block(*a) for a in jobs]
        # exact integer sums, combined in block order
        s = sum(p[0] for p in parts)
        s2 = sum(p[1] for p in parts)
        N = cfg.trials
        mean = Fraction(s, N * denom)
        if N > 1:
            var = Fraction(s2 * N - s * s, N * (N - 1) * denom * denom)
            stderr = sqrt(float(var) / N)
        else:
            stderr = float("nan")
        points.append(SimPoint(eps, float(mean), stderr, N))
    return SimResult(
        mode=cfg.mode,
        metric=cfg.metric,
        points=tuple(points),
        seed=cfg.seed,
        code_hash=code_hash(cfg.code) if cfg.code is not None else None,
    )


def simulate(cfg: SimConfig) -> SimResult:
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "monte_carlo":
        return mc_bit_erasure(cfg)
    points = []
    for eps in cfg.epsilons:
        if cfg.mode == "exhaustive_patterns":
            exact = exhaustive_bit_erasure(cfg.code, eps, cfg.metric)
            count = 1 << cfg.n
        else:
            exact = exhaustive_tiny_ensemble(cfg.k, cfg.n, cfg.spec, eps, cfg.metric)
            count = 0
        points.append(SimPoint(eps, float(exact), None, count, exact))
    return SimResult(
        mode=cfg.mode,
        metric=cfg.metric,
        points=tuple(points),
        seed=None,
        code_hash=code_hash(cfg.code) if cfg.code is not None else None,
    )


@dataclass(frozen=True)
class ComparisonRow:
    epsilon: Fraction
    pb_uncorrectable: Fraction
    integrated: Fraction | None
    empirical: float
    empirical_exact: Fraction | None
    stderr: float | None
    gap: float
    rel_gap: float | None
    verdict: str
    clamp_events: int
    empirical_alt: float | Fraction | None = None


def _verdict(analytical: Fraction, point: SimPoint) -> str:
    if point.exact is not None:
        return "exact_match" if point.exact == analytical else "divergent"
    if point.stderr is not None and abs(float(analytical) - point.estimate) <= 3 * point.stderr:
        return "within_3_sigma"
    return "divergent"


def compare_report(analytical: Sequence[AnalysisReport], empirical: SimResult,
                   alt: SimResult | None = None) -> list[ComparisonRow]:
    """Line up analytical reports with empirical points, one row per epsilon.

    The verdict compares the uncorrectable-set value with the empirical
    metric.  It is descriptive only; nothing here raises on divergence.
    """
    if len(analytical) != len(empirical.points):
        raise ValueError("analytical and empirical grids differ in length")
    alt_points = alt.points if alt is not None else [None] * len(empirical.points)
    if len(alt_points) != len(empirical.points):
        raise ValueError("alternate empirical grid differs in length")
    rows = []
    for rep, pt, ap in zip(analytical, empirical.points, alt_points):
        eps = rep.metadata.get("epsilon")
        if eps is not None and Fraction(eps) != pt.epsilon:
            raise ValueError(f"epsilon mismatch: {eps} vs {pt.epsilon}")
        ref = pt.exact if pt.exact is not None else pt.estimate
        gap = float(rep.pb_uncorrectable - Fraction(ref)) if pt.exact is not None \
            else float(rep.pb_uncorrectable) - pt.estimate
        rel = abs(gap) / abs(float(ref)) if float(ref) else None
        rows.append(ComparisonRow(
            epsilon=pt.epsilon,
            pb_uncorrectable=rep.pb_uncorrectable,
            integrated=rep.integrated,
            empirical=pt.estimate,
            empirical_exact=pt.exact,
            stderr=pt.stderr,
            gap=gap,
            rel_gap=rel,
            verdict=_verdict(rep.pb_uncorrectable, pt),
            clamp_events=rep.clamp_events,
            empirical_alt=None if ap is None else (ap.exact if ap.exact is not None else ap.estimate),
        ))
    return rows
