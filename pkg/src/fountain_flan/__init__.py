"""Finite-length erasure analysis of LT codes: uncorrectable sets, stopping
sets, exact ensemble counting and a decoding simulation harness."""

__version__ = "0.1.0"

from .analysis import (AnalysisReport, AnalysisRequest, a_s, avg_bit_erasure, edge_distribution,
                       integrated_error, stopping_set_probability)
from .decoder import (DecodeOutcome, ErasurePattern, StoppingSetReport, enumerate_stopping_sets,
                      ge_recoverable, is_stopping_set, maximal_uncorrectable_set, peel_decode)
from .ensemble import (CodeInstance, DegreeSpec, encode, ideal_soliton, received_submatrix,
                       sample_code)
from .estimators import ErasureAnalyzer, MonteCarloErasure, PeelingDecoder
from .exceptions import FountainError, GuardViolation, InputFormatError, SpecError
from .simulate import (SimConfig, SimResult, compare_report, exhaustive_bit_erasure,
                       exhaustive_tiny_ensemble, mc_bit_erasure)
