"""JSON problem files.

Example::

    {
      "order": 2,
      "expression": "exp(s+z1)+exp(s+z2)",
      "strip": {"half_height": 1.0},
      "cutoff_hint": 1.0,
      "domain": {"type": "disk", "center": [0, 0], "radius": 4, "anchor": [0, 0]},
      "parameters": [[0.5, 0]],
      "tolerances": {"tail_eps": 1e-12}
    }

Rectangles use ``"type": "rect"`` with ``lo`` and ``hi`` corners.
Unknown keys are rejected at every level.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import fexpr
from .core import Disk, DomainSpec, LeftCutoff, Rect, Strip, Tolerances, TransferError
from .solver import ProblemSpec

Pair = tuple[float, float]


class ProblemFileError(TransferError):
    kind = "problem_file"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StripModel(_Strict):
    half_height: float = Field(gt=0)


class DiskModel(_Strict):
    type: Literal["disk"]
    center: Pair = (0.0, 0.0)
    radius: float = Field(gt=0)
    anchor: Pair


class RectModel(_Strict):
    type: Literal["rect"]
    lo: Pair
    hi: Pair
    anchor: Pair


class TolerancesModel(_Strict):
    tail_eps: Optional[float] = Field(default=None, gt=0)
    iter_eps: Optional[float] = Field(default=None, gt=0)
    residual_tol: Optional[float] = Field(default=None, gt=0)
    max_trunc: Optional[int] = Field(default=None, ge=1)
    max_levels: Optional[int] = Field(default=None, ge=1)
    far_left_margin: Optional[float] = Field(default=None, gt=0)
    lipschitz_target: Optional[float] = Field(default=None, gt=0, lt=1)


class ProblemFile(_Strict):
    order: int = Field(ge=1)
    expression: str
    strip: StripModel
    cutoff_hint: float = Field(default=1.0, gt=0)
    domain: Annotated[Union[DiskModel, RectModel], Field(discriminator="type")]
    parameters: Optional[list[Pair]] = None
    tolerances: Optional[TolerancesModel] = None

    @field_validator("expression")
    @classmethod
    def _nonempty(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("expression is empty")
        return v

    def to_problem(self) -> ProblemSpec:
        """Build the solver input; raises :class:`fexpr.ParseError` on a bad formula."""
        expr = fexpr.parse(self.expression, self.order)
        d = self.domain
        anchor = complex(*d.anchor)
        shape = (Disk(complex(*d.center), d.radius) if isinstance(d, DiskModel)
                 else Rect(complex(*d.lo), complex(*d.hi)))
        tol = Tolerances(**{k: v for k, v in (self.tolerances or TolerancesModel())
                            .model_dump().items() if v is not None})
        try:
            domain = DomainSpec(shape, anchor)
            return ProblemSpec(
                self.order, expr, Strip(self.strip.half_height), LeftCutoff(self.cutoff_hint),
                domain, tuple(complex(*w) for w in self.parameters or ()), tol)
        except ValueError as exc:
            raise ProblemFileError(str(exc)) from exc


def load_problem_file(path: str | Path) -> ProblemFile:
    """Read and validate; IO errors propagate as ``OSError``."""
    text = Path(path).read_text()
    try:
        return ProblemFile.model_validate(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc}") from exc
    except ValidationError as exc:
        raise ProblemFileError(str(exc)) from exc


def load_problem(path: str | Path) -> ProblemSpec:
    return load_problem_file(path).to_problem()
