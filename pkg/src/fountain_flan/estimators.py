"""scikit-learn style front ends.

``PeelingDecoder`` is fit on a code and transforms erasure masks into
residual masks.  ``ErasureAnalyzer`` and ``MonteCarloErasure`` are fit on an
ensemble (or a fixed code) and predict failure probabilities for an array of
erasure probabilities, so they drop into grid searches and pipelines.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import AnalysisRequest, integrated_error
from .decoder import ge_recoverable, maximal_uncorrectable_set, peel_decode
from .ensemble import CodeInstance, DegreeSpec, to_fraction
from .simulate import METRICS, SimConfig, exhaustive_bit_erasure, mc_bit_erasure


def check_code(code) -> CodeInstance:
    """Accept a :class:`CodeInstance`, a ``k x n`` 0/1 generator matrix or a code JSON dict."""
    if isinstance(code, CodeInstance):
        return code
    if isinstance(code, dict):
        return CodeInstance.from_json(code)
    G = check_array(code, dtype=np.int64, ensure_min_samples=1, ensure_min_features=0)
    if not np.isin(G, (0, 1)).all():
        raise ValueError("generator matrix must be 0/1")
    return CodeInstance.from_adjacency(G.shape[0], [np.flatnonzero(G[:, i]) for i in range(G.shape[1])])


def check_erasures(E, n: int) -> np.ndarray:
    """2-D boolean array of erasure indicators, one row per pattern."""
    E = check_array(E, dtype=None, ensure_min_features=0)
    if E.shape[1] != n:
        raise ValueError(f"expected {n} columns (one per output), got {E.shape[1]}")
    if not np.isin(E, (0, 1)).all():
        raise ValueError("erasure indicators must be 0/1")
    return E.astype(bool)


def check_epsilons(eps) -> list[Fraction]:
    arr = np.asarray(eps, dtype=object).ravel()
    out = [to_fraction(e.item() if hasattr(e, "item") else e) for e in arr]
    for e in out:
        if not 0 <= e <= 1:
            raise ValueError(f"epsilon outside [0, 1]: {e}")
    return out


def _degree_spec(rho, lambda_, row_weight) -> DegreeSpec:
    if isinstance(rho, DegreeSpec):
        return rho
    return DegreeSpec(rho, lambda_, row_weight)


class PeelingDecoder(TransformerMixin, BaseEstimator):
    """Structural BEC decoder.

    Parameters
    ----------
    decoder : {"peeling", "ml", "uncorrectable"}
        ``peeling`` runs BP, ``ml`` is Gaussian elimination over GF(2) and
        ``uncorrectable`` reports only inputs with every neighbor erased.
    """

    def __init__(self, decoder="peeling"):
        self.decoder = decoder

    def fit(self, X, y=None):
        if self.decoder not in ("peeling", "ml", "uncorrectable"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        self.code_ = check_code(X)
        self.n_features_in_ = self.code_.n
        return self

    def _unresolved(self, erased):
        code = self.code_
        if self.decoder == "peeling":
            return peel_decode(code, erased).residual
        if self.decoder == "ml":
            return frozenset(range(code.k)) - ge_recoverable(code, erased)
        return maximal_uncorrectable_set(code, erased)

    def transform(self, E):
        """Boolean ``(patterns, k)`` matrix: True where the input stays unknown."""
        check_is_fitted(self, "code_")
        E = check_erasures(E, self.code_.n)
        out = np.zeros((E.shape[0], self.code_.k), dtype=bool)
        for r, row in enumerate(E):
            idx = list(self._unresolved(np.flatnonzero(row).tolist()))
            out[r, idx] = True
        return out

    def predict(self, E):
        """Fraction of unresolved inputs per pattern."""
        return self.transform(E).mean(axis=1)


class ErasureAnalyzer(BaseEstimator):
    """Analytical bit erasure probability of an LT ensemble.

    ``predict`` returns the combined estimate (uncorrectable sets plus the
    stopping-set term) as doubles; ``report`` gives the exact breakdown.
    """

    def __init__(self, k=1, n=1, rho=None, lambda_=None, row_weight=None,
                 s_max=None, z_max=None, eq14_binomial_base="n", output="integrated"):
        self.k = k
        self.n = n
        self.rho = rho
        self.lambda_ = lambda_
        self.row_weight = row_weight
        self.s_max = s_max
        self.z_max = z_max
        self.eq14_binomial_base = eq14_binomial_base
        self.output = output

    def fit(self, X=None, y=None):
        if self.rho is None:
            raise ValueError("rho is required")
        if self.output not in ("integrated", "pb_uncorrectable", "stopping_term"):
            raise ValueError(f"unknown output {self.output!r}")
        self.spec_ = _degree_spec(self.rho, self.lambda_, self.row_weight)
        # validates every request parameter once, at fit time
        self._request(Fraction(0))
        return self

    def _request(self, eps):
        return AnalysisRequest(self.k, self.n, self.spec_, eps, s_max=self.s_max,
                               z_max=self.z_max, eq14_binomial_base=self.eq14_binomial_base)

    def report(self, epsilon):
        check_is_fitted(self, "spec_")
        return integrated_error(self._request(to_fraction(epsilon)))

    def predict_exact(self, epsilons) -> list[Fraction]:
        check_is_fitted(self, "spec_")
        return [getattr(self.report(e), self.output) for e in check_epsilons(epsilons)]

    def predict(self, epsilons) -> np.ndarray:
        return np.array([float(v) for v in self.predict_exact(epsilons)])


class MonteCarloErasure(BaseEstimator):
    """Empirical failure rate of a fixed code (``fit(code)``) or of the ensemble
    ``rho`` (``fit()`` with ``rho`` set), by Monte Carlo or exact enumeration."""

    def __init__(self, k=None, n=None, rho=None, trials=10_000, seed=0,
                 metric="bit", exhaustive=False):
        self.k = k
        self.n = n
        self.rho = rho
        self.trials = trials
        self.seed = seed
        self.metric = metric
        self.exhaustive = exhaustive

    def fit(self, X=None, y=None):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        self.code_ = None if X is None else check_code(X)
        self.spec_ = None if self.rho is None else _degree_spec(self.rho, None, None)
        if self.code_ is None and self.spec_ is None:
            raise ValueError("fit needs a code or rho")
        if self.exhaustive and self.code_ is None:
            raise ValueError("exhaustive mode needs a fixed code")
        return self

    def _dims(self):
        if self.code_ is not None:
            return self.code_.k, self.code_.n
        if self.k is None or self.n is None:
            raise ValueError("k and n are required for ensemble simulation")
        return self.k, self.n

    def predict(self, epsilons) -> np.ndarray:
        check_is_fitted(self, "spec_")
        eps = check_epsilons(epsilons)
        if self.exhaustive:
            return np.array([float(exhaustive_bit_erasure(self.code_, e, self.metric)) for e in eps])
        k, n = self._dims()
        cfg = SimConfig(k, n, self.spec_, tuple(eps), trials=self.trials, seed=self.seed,
                        metric=self.metric, code=self.code_)
        self.result_ = mc_bit_erasure(cfg)
        return np.array([p.estimate for p in self.result_.points])
