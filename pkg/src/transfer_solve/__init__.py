"""Holomorphic solutions of k-th order transfer equations on a strip.

Solves ``y(s+k) = F(s, y(s), ..., y(s+k-1))`` by iterating infinite
compositions on the far-left half-strip and continuing forward.
"""

from .continuation import EvalGrid, evaluate, evaluate_grid
from .core import (ContractionViolation, Disk, DomainEscape, DomainSpec, HypothesisFailure,
                   LeftCutoff, NoConvergence, NonFiniteValue, OutsideStrip, Rect, Strip,
                   Tolerances, TransferError, TruncationLimit)
from .fexpr import EvalError, ParseError, parse
from .problemfile import load_problem
from .solver import ProblemSpec, SolutionHandle, ensure_contractive, solve

__version__ = "0.1.0"
