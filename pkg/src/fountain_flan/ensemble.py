"""Degree distributions, LT-code sampling, encoding and the received view.

A code is stored as its output-side adjacency: ``out_adj[i]`` holds the input
indices XORed into output symbol ``i``.  Equivalently this is the ``k x n``
binary generator matrix with ``G[j, i] = 1`` iff ``j in out_adj[i]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import InputFormatError, SpecError


def to_fraction(value) -> Fraction:
    """Parse ``value`` to an exact rational.

    Strings may be decimals (``"0.25"``) or ``"num/den"``.  Floats go through
    their shortest round-trip decimal so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise SpecError(f"not a probability: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"cannot parse probability {value!r}") from exc
    raise SpecError(f"cannot parse probability {value!r}")


def _normalize_pmf(pmf, name: str, min_degree: int) -> tuple[tuple[int, Fraction], ...]:
    if isinstance(pmf, Mapping):
        items = list(pmf.items())
    else:
        items = [tuple(p) for p in pmf]
    out: dict[int, Fraction] = {}
    for deg, mass in items:
        if isinstance(deg, bool) or int(deg) != deg:
            raise SpecError(f"{name}: degree {deg!r} is not an integer")
        deg = int(deg)
        if deg < min_degree:
            raise SpecError(f"{name}: degree {deg} below {min_degree}")
        mass = to_fraction(mass)
        if mass < 0:
            raise SpecError(f"{name}: negative mass at degree {deg}")
        out[deg] = out.get(deg, Fraction(0)) + mass
    out = {d: p for d, p in out.items() if p != 0}
    if not out:
        raise SpecError(f"{name} is empty")
    total = sum(out.values())
    if total != 1:
        raise SpecError(f"{name} sums to {total}, not 1")
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class DegreeSpec:
    """Output degree distribution ``rho`` plus an optional input-side model.

    The input side is either an input degree distribution ``lambda_`` or a
    constant row weight ``row_weight`` (every input has that degree), or left
    unspecified.  Only the analytical evaluators use the input side; sampling
    draws from ``rho`` alone.
    """

    rho: tuple[tuple[int, Fraction], ...]
    lambda_: tuple[tuple[int, Fraction], ...] | None = None
    row_weight: int | None = None

    def __init__(self, rho, lambda_=None, row_weight=None):
        object.__setattr__(self, "rho", _normalize_pmf(rho, "rho", 1))
        if lambda_ is not None and row_weight is not None:
            raise SpecError("give either lambda_ or row_weight, not both")
        if lambda_ is not None:
            lambda_ = _normalize_pmf(lambda_, "lambda", 0)
        if row_weight is not None:
            if isinstance(row_weight, bool) or int(row_weight) != row_weight or row_weight < 1:
                raise SpecError(f"row_weight must be an integer >= 1, got {row_weight!r}")
            row_weight = int(row_weight)
        object.__setattr__(self, "lambda_", lambda_)
        object.__setattr__(self, "row_weight", row_weight)

    @property
    def rho_map(self) -> dict[int, Fraction]:
        return dict(self.rho)

    @property
    def lambda_map(self) -> dict[int, Fraction] | None:
        return None if self.lambda_ is None else dict(self.lambda_)

    @property
    def d_max(self) -> int:
        return self.rho[-1][0]

    @property
    def d_min(self) -> int:
        return self.rho[0][0]

    @property
    def v_max(self) -> int | None:
        if self.lambda_ is not None:
            return self.lambda_[-1][0]
        return self.row_weight

    def input_degree_pmf(self) -> tuple[tuple[int, Fraction], ...] | None:
        """Input degree pmf, with a row weight seen as a point mass."""
        if self.lambda_ is not None:
            return self.lambda_
        if self.row_weight is not None:
            return ((self.row_weight, Fraction(1)),)
        return None

    def to_json(self) -> dict:
        doc: dict = {"rho": [[d, _frac_str(p)] for d, p in self.rho]}
        if self.lambda_ is not None:
            doc["lambda"] = [[j, _frac_str(p)] for j, p in self.lambda_]
        if self.row_weight is not None:
            doc["row_weight"] = self.row_weight
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "DegreeSpec":
        if not isinstance(doc, Mapping) or "rho" not in doc:
            raise InputFormatError("degree spec needs a 'rho' list")
        try:
            return cls(doc["rho"], doc.get("lambda"), doc.get("row_weight"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise InputFormatError(f"malformed degree spec: {exc}") from exc


def _frac_str(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def ideal_soliton(k: int) -> DegreeSpec:
    """Ideal soliton: ``rho(1) = 1/k`` and ``rho(d) = 1/(d(d-1))`` up to ``k``."""
    if k < 2:
        raise SpecError("ideal soliton needs k >= 2")
    rho = {1: Fraction(1, k)}
    for d in range(2, k + 1):
        rho[d] = Fraction(1, d * (d - 1))
    return DegreeSpec(rho)


@dataclass(frozen=True)
class CodeInstance:
    """Bipartite LT code graph with ``k`` inputs and ``n`` outputs."""

    k: int
    out_adj: tuple[tuple[int, ...], ...]
    in_adj: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        rows = []
        for i, nb in enumerate(self.out_adj):
            nb = tuple(sorted(nb))
            if len(set(nb)) != len(nb):
                raise ValueError(f"output {i} has repeated neighbors")
            if nb and (nb[0] < 0 or nb[-1] >= self.k):
                raise ValueError(f"output {i} has neighbor outside [0, {self.k})")
            rows.append(nb)
        object.__setattr__(self, "out_adj", tuple(rows))
        inv: list[set[int]] = [set() for _ in range(self.k)]
        for i, nb in enumerate(rows):
            for j in nb:
                inv[j].add(i)
        object.__setattr__(self, "in_adj", tuple(frozenset(s) for s in inv))

    @classmethod
    def from_adjacency(cls, k: int, out_adj: Iterable[Iterable[int]]) -> "CodeInstance":
        return cls(int(k), tuple(tuple(int(j) for j in nb) for nb in out_adj))

    @property
    def n(self) -> int:
        return len(self.out_adj)

    @property
    def edge_count(self) -> int:
        return sum(len(nb) for nb in self.out_adj)

    def generator_matrix(self) -> np.ndarray:
        """Dense ``k x n`` 0/1 generator matrix."""
        G = np.zeros((self.k, self.n), dtype=np.uint8)
        for i, nb in enumerate(self.out_adj):
            G[list(nb), i] = 1
        return G

    def to_json(self) -> dict:
        return {"k": self.k, "n": self.n, "outputs": [list(nb) for nb in self.out_adj]}

    @classmethod
    def from_json(cls, doc: Mapping) -> "CodeInstance":
        try:
            k = doc["k"]
            outputs = doc["outputs"]
            code = cls.from_adjacency(k, outputs)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed code file: {exc}") from exc
        if "n" in doc and doc["n"] != code.n:
            raise InputFormatError(f"code file says n={doc['n']} but lists {code.n} outputs")
        return code


def check_integral_exponents(pmf, count: int, what: str, tol: float = 1e-9) -> dict[int, int]:
    """Return ``{degree: mass * count}`` as integers, or raise ``SpecError``.

    Ensemble generating functions raise ``(1 + x z^d)`` to ``mass * count``;
    the exponent has to be a whole number of nodes.
    """
    out = {}
    for deg, mass in pmf:
        exact = mass * count
        nearest = round(exact)
        if abs(float(exact - nearest)) > tol:
            raise SpecError(
                f"{what}: {mass} * {count} = {float(exact):.6g} is not an integer"
            )
        if nearest:
            out[deg] = int(nearest)
    return out


def _cdf(spec: DegreeSpec) -> tuple[np.ndarray, np.ndarray]:
    degrees = np.array([d for d, _ in spec.rho], dtype=np.int64)
    cum = np.cumsum([float(p) for _, p in spec.rho])
    cum[-1] = 1.0
    return degrees, cum


def sample_code(k: int, n: int, spec: DegreeSpec, seed) -> CodeInstance:
    """Draw an LT code: each output picks ``d ~ rho`` then a uniform ``d``-subset.

    RNG contract: ``numpy.random.default_rng(seed)``; per output, one
    ``rng.random()`` is inverted against the cumulative ``rho`` (first index
    with ``u < cdf``), followed by ``rng.choice(k, size=d, replace=False)``.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    if spec.d_max > k:
        raise SpecError(f"d_max={spec.d_max} exceeds k={k}")
    rng = np.random.default_rng(seed)
    degrees, cum = _cdf(spec)
    rows = []
    for _ in range(n):
        d = int(degrees[int(np.searchsorted(cum, rng.random(), side="right"))])
        rows.append(tuple(int(j) for j in rng.choice(k, size=d, replace=False)))
    return CodeInstance(k, tuple(rows))


def encode(code: CodeInstance, x: Sequence[int]) -> list[int]:
    """XOR-encode the bit vector ``x`` (length ``k``) into ``n`` output bits."""
    if len(x) != code.k:
        raise ValueError(f"expected {code.k} input bits, got {len(x)}")
    out = []
    for nb in code.out_adj:
        t = 0
        for j in nb:
            t ^= int(x[j]) & 1
        out.append(t)
    return out


def received_submatrix(code: CodeInstance, erased: Iterable[int]) -> CodeInstance:
    """Drop the erased output columns; inputs are untouched."""
    erased = set(erased)
    bad = [i for i in erased if not 0 <= i < code.n]
    if bad:
        raise ValueError(f"erasure indices out of range: {sorted(bad)}")
    return CodeInstance(code.k, tuple(nb for i, nb in enumerate(code.out_adj) if i not in erased))


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def load_degree_spec(path) -> DegreeSpec:
    return DegreeSpec.from_json(load_json(path))


def load_code(path) -> CodeInstance:
    return CodeInstance.from_json(load_json(path))


def binom(n: int, r: int) -> int:
    """Binomial coefficient that is 0 outside ``0 <= r <= n``."""
    if r < 0 or n < 0 or r > n:
        return 0
    return comb(n, r)
