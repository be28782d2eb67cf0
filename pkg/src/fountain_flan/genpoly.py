"""Exact generating-function counting for the ensemble error analysis.

Polynomials are sparse in two variables: ``x`` (or ``y``) marks a node and
``z`` marks an edge.  Coefficients are Python ints, probabilities are
``fractions.Fraction``; nothing in here touches floating point.
"""
from __future__ import annotations

import logging
import threading
from fractions import Fraction
from math import comb, factorial
from typing import Mapping

from .ensemble import DegreeSpec, check_integral_exponents
from .exceptions import SpecError

log = logging.getLogger(__name__)


class SparsePoly2:
    """Bivariate polynomial ``sum c[a, b] x^a z^b`` with integer coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], int] | None = None):
        self.terms = {ab: int(c) for ab, c in (terms or {}).items() if c}

    @classmethod
    def one(cls) -> "SparsePoly2":
        return cls({(0, 0): 1})

    @classmethod
    def binomial(cls, z_power: int) -> "SparsePoly2":
        """``1 + x z^z_power``."""
        return cls({(0, 0): 1, (1, z_power): 1})

    def __mul__(self, other: "SparsePoly2") -> "SparsePoly2":
        return poly_mul(self, other)

    def __add__(self, other: "SparsePoly2") -> "SparsePoly2":
        out = dict(self.terms)
        for ab, c in other.terms.items():
            out[ab] = out.get(ab, 0) + c
        return SparsePoly2(out)

    def __pow__(self, m: int) -> "SparsePoly2":
        return poly_pow(self, m)

    def __eq__(self, other) -> bool:
        return isinstance(other, SparsePoly2) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "SparsePoly2(0)"
        parts = [f"{c}*x^{a}*z^{b}" for (a, b), c in sorted(self.terms.items())]
        return "SparsePoly2(" + " + ".join(parts) + ")"

    def x_degree(self) -> int:
        return max((a for a, _ in self.terms), default=0)


def poly_mul(f: SparsePoly2, g: SparsePoly2) -> SparsePoly2:
    out: dict[tuple[int, int], int] = {}
    for (a1, b1), c1 in f.terms.items():
        for (a2, b2), c2 in g.terms.items():
            key = (a1 + a2, b1 + b2)
            out[key] = out.get(key, 0) + c1 * c2
    return SparsePoly2(out)


def poly_pow(f: SparsePoly2, m: int) -> SparsePoly2:
    if m < 0:
        raise ValueError("negative power")
    result = SparsePoly2.one()
    base = f
    while m:
        if m & 1:
            result = poly_mul(result, base)
        m >>= 1
        if m:
            base = poly_mul(base, base)
    return result


def coef(f: SparsePoly2, a: int, b: int) -> int:
    return f.terms.get((a, b), 0)


def _binomial_power(z_power: int, m: int) -> SparsePoly2:
    # (1 + x z^p)^m expanded directly by the binomial theorem
    return SparsePoly2({(t, t * z_power): comb(m, t) for t in range(m + 1)})


def degree_product(exponents: Mapping[int, int]) -> SparsePoly2:
    """``prod_d (1 + x z^d)^{exponents[d]}``."""
    out = SparsePoly2.one()
    for d, m in sorted(exponents.items()):
        out = poly_mul(out, _binomial_power(d, m))
    return out


_output_poly_cache: dict = {}


def output_poly(spec: DegreeSpec, n: int) -> SparsePoly2:
    key = (spec.rho, n)
    poly = _output_poly_cache.get(key)
    if poly is None:
        poly = degree_product(check_integral_exponents(spec.rho, n, "rho_d * n"))
        _output_poly_cache[key] = poly
    return poly


def edge_count_numerator(spec: DegreeSpec, n: int, e_size: int, L: int) -> int:
    """Number of ``e_size``-subsets of the ``n`` outputs carrying ``L`` edges in total."""
    if not 0 <= e_size <= n:
        raise ValueError(f"e_size must lie in [0, {n}]")
    return coef(output_poly(spec, n), e_size, L)


def _input_pmf(spec: DegreeSpec):
    pmf = spec.input_degree_pmf()
    if pmf is None:
        raise SpecError("input side unspecified: need lambda or row_weight")
    return pmf


def socket_total(k: int, spec: DegreeSpec) -> int:
    """Total number of input-side edge sockets, ``sum_j j * lambda_j * k``."""
    total = sum(j * m for j, m in _input_pmf(spec)) * k
    nearest = round(total)
    if abs(float(total - nearest)) > 1e-9:
        raise SpecError(f"edge total {float(total):.6g} for k={k} is not an integer")
    return int(nearest)


def total_maps_T(k: int, spec: DegreeSpec) -> int:
    """Factorial of the socket count: all edge matchings of the ensemble."""
    return factorial(socket_total(k, spec))


def input_exponents(k: int, spec: DegreeSpec, strict: bool = True) -> dict[int, int]:
    """How many of ``k`` inputs have each degree.

    ``strict`` demands ``lambda_j * k`` be integral.  Sub-problems of the
    recursion (``k' < k`` inputs) use largest-remainder apportionment so the
    counts always sum to ``k'``.
    """
    pmf = _input_pmf(spec)
    if strict:
        return check_integral_exponents(pmf, k, "lambda_j * k")
    raw = [(j, m * k) for j, m in pmf]
    counts = {j: int(x) for j, x in raw}  # floor, masses are >= 0
    short = k - sum(counts.values())
    # ties broken towards the smaller degree for determinism
    order = sorted(raw, key=lambda jx: (-(jx[1] - int(jx[1])), jx[0]))
    for j, _ in order[:short]:
        counts[j] += 1
    return {j: c for j, c in counts.items() if c}


def _input_poly(k: int, spec: DegreeSpec, strict: bool) -> SparsePoly2:
    if spec.lambda_ is None and spec.row_weight is not None:
        # constant row weight: (1 + y z^r)^k
        return _binomial_power(spec.row_weight, k)
    return degree_product(input_exponents(k, spec, strict))


def m1_count(k: int, L: int, V: int, spec: DegreeSpec, strict: bool = True) -> int:
    """Weighted count of ``V``-subsets of inputs with at most ``L`` edges.

    ``sum_{l <= L} coef(prod_j (1 + y z^j)^{lambda_j k}, y^V z^l) * l!``
    """
    if L < 0 or V < 0 or V > k:
        return 0
    poly = _input_poly(k, spec, strict)
    return sum(c * factorial(b) for (a, b), c in poly.terms.items() if a == V and b <= L)


class CountTable:
    """Memoized ``T``, ``M1``, ``M``, ``N`` and ``Q`` for one input ensemble.

    ``N(k', E')`` counts matchings of ``k'`` inputs against an edge budget
    ``E'`` that contain no uncorrectable set; its third slot in the usual
    notation is always 0 and is dropped here.  Recursion::

        M(k', E', L, V) = M1(k', L, V) * N(k' - V, E' - L)
        Q(k', E', L)    = sum_{V=1..k'} M(k', E', L, V)
        N(k', E')       = T(k') - sum_{L'=0..E'} Q(k', E', L')

    with ``N(0, 0) = 1`` and ``N(k', E') = 0`` for ``E' < 0``.  A negative
    ``N`` is clamped to 0 and counted in ``clamp_events``.
    """

    def __init__(self, k: int, spec: DegreeSpec):
        self.k = k
        self.spec = spec
        # top level must be a genuine ensemble; sub-sizes are apportioned
        self._sockets_top = socket_total(k, spec)
        if spec.lambda_ is not None:
            input_exponents(k, spec, strict=True)
        self._lock = threading.Lock()
        self._T: dict[int, int] = {}
        self._m1_prefix: dict[int, dict[int, list[int]]] = {}
        self._N: dict[tuple[int, int], int] = {}
        self._clamped: set[tuple[int, int]] = set()

    @property
    def clamp_events(self) -> int:
        return len(self._clamped)

    def _sockets(self, kk: int) -> int:
        if kk == self.k:
            return self._sockets_top
        if self.spec.lambda_ is None:
            return self.spec.row_weight * kk
        return sum(j * c for j, c in input_exponents(kk, self.spec, strict=False).items())

    def T(self, kk: int) -> int:
        val = self._T.get(kk)
        if val is None:
            val = factorial(self._sockets(kk))
            self._T[kk] = val
        return val

    def _prefix(self, kk: int) -> dict[int, list[int]]:
        table = self._m1_prefix.get(kk)
        if table is None:
            poly = _input_poly(kk, self.spec, strict=kk == self.k)
            max_l = max((b for _, b in poly.terms), default=0)
            rows: dict[int, list[int]] = {}
            for (a, b), c in poly.terms.items():
                rows.setdefault(a, [0] * (max_l + 1))[b] += c * factorial(b)
            for row in rows.values():
                for l in range(1, len(row)):
                    row[l] += row[l - 1]
            table = rows
            self._m1_prefix[kk] = table
        return table

    def M1(self, kk: int, L: int, V: int) -> int:
        if L < 0 or V < 0 or V > kk:
            return 0
        row = self._prefix(kk).get(V)
        if row is None:
            return 0
        return row[min(L, len(row) - 1)]

    def N(self, kk: int, budget: int) -> int:
        if budget < 0:
            return 0
        key = (kk, budget)
        val = self._N.get(key)
        if val is not None:
            return val
        if kk == 0:
            val = 1
        else:
            val = self.T(kk) - sum(self.Q(kk, budget, l) for l in range(budget + 1))
            if val < 0:
                with self._lock:
                    if key not in self._clamped:
                        log.info("N(%d, %d) = %d < 0, clamped to 0", kk, budget, val)
                    self._clamped.add(key)
                val = 0
        self._N[key] = val
        return val

    def M(self, kk: int, budget: int, L: int, V: int) -> int:
        if L < 0 or V < 1 or V > kk:
            return 0
        m1 = self.M1(kk, L, V)
        if not m1:
            return 0
        return m1 * self.N(kk - V, budget - L)

    def Q(self, kk: int, budget: int, L: int) -> int:
        return sum(self.M(kk, budget, L, V) for V in range(1, kk + 1))

    def fill(self, budget: int) -> "CountTable":
        """Evaluate bottom-up up to ``budget`` (avoids deep recursion)."""
        for kk in range(self.k + 1):
            for b in range(budget + 1):
                self.N(kk, b)
        return self


_tables: dict = {}
_tables_lock = threading.Lock()


def count_recursion(k: int, E: int, spec: DegreeSpec) -> CountTable:
    """Shared, memoized :class:`CountTable` for ``(k, spec)`` filled to ``E``."""
    if E < 0:
        raise ValueError("E must be nonnegative")
    key = (k, spec.rho, spec.lambda_, spec.row_weight)
    with _tables_lock:
        table = _tables.get(key)
        if table is None:
            table = CountTable(k, spec)
            _tables[key] = table
    return table.fill(E)


def p_eLV(k: int, n: int, e_size: int, L: int, V: int, spec: DegreeSpec,
          E: int | None = None) -> Fraction:
    """Probability that the maximal uncorrectable set has ``V`` nodes and ``L`` edges.

    ``E`` is the erased-edge budget; by default ``e_size * d_max``.  ``V = 0``
    returns the complement of the ``V >= 1`` masses so each ``(e, L)`` slice
    sums to one (this mass can be negative when the counts overshoot).
    """
    if E is None:
        E = e_size * spec.d_max
    table = count_recursion(k, E, spec)
    T = table.T(k)
    if V == 0:
        return 1 - sum((Fraction(table.M(k, E, L, v), T) for v in range(1, k + 1)), Fraction(0))
    return Fraction(table.M(k, E, L, V), T)
