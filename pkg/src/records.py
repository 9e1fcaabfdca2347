"""
On-disk formats: factor DB, ICP DB, factor-state, run records and checkpoints.

Every file is an indented JSON document validated by a pydantic model.
Rationals travel as ``"num/den"`` strings so nothing is rounded; coefficient
lists are low-to-high JSON integers.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Literal, TypeVar

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationError,
    model_validator,
)

from src.config import (
    C0_INFLATION,
    CUT_EPS_FACTOR,
    DEFAULT_REL_TOL,
    HANDOFF_REMAINING,
    POOL_MAX_DENOMINATOR,
    WORKER_COUNT,
)

logger = logging.getLogger(__name__)


class RecordError(ValueError):
    """A data file is missing, unreadable or does not match its schema."""


# ── Rationals ────────────────────────────────────────────────────────────────

def parse_rational(value: object) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise ValueError(f"cannot read {value!r} as a rational")


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


Rational = Annotated[
    Fraction,
    BeforeValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
]


class _Model(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")


# ── Knowledge base files ─────────────────────────────────────────────────────

class FactorDB(_Model):
    """``factors`` maps factor-id → coefficient list (low to high)."""

    description: str = ""
    factors: dict[str, list[int]]


class IcpEntry(_Model):
    degree: int = Field(ge=1)
    factors: str                   # e.g. "h1^48 h2^17 h3^6 h5^2 h10 h14"
    t: str                         # printed normalized norm, e.g. "0.42591455"
    source: str = ""
    status: Literal["published", "erratum"] = "published"
    note: str = ""


class IcpDB(_Model):
    description: str = ""
    icps: list[IcpEntry] = []


class FactorStateFile(_Model):
    """Precomputed known factors F for one degree (from factor-multiplicity methods)."""

    degree: int = Field(ge=1)
    factors: str = ""
    coefficients: list[int] | None = None
    c0: Rational | None = None

    @model_validator(mode="after")
    def _one_source(self) -> FactorStateFile:
        if self.factors and self.coefficients is not None:
            raise ValueError("give either 'factors' or 'coefficients', not both")
        return self


# ── Search configuration ─────────────────────────────────────────────────────

SearchMode = Literal["combined", "bnb", "resultant"]


class SearchConfig(_Model):
    n: int = Field(ge=1)
    mode: SearchMode = "combined"
    factors: str = ""                      # F on [0,1] in factor-id notation
    coefficients: list[int] | None = None  # or F given explicitly
    c0: Rational | None = None
    handoff_remaining: int = Field(default=HANDOFF_REMAINING, ge=0)
    rel_tol: Rational = DEFAULT_REL_TOL
    cut_eps: Rational = CUT_EPS_FACTOR
    c0_inflation: Rational = C0_INFLATION
    pool_denominator: int = Field(default=POOL_MAX_DENOMINATOR, ge=1)
    worker_count: int = Field(default=WORKER_COUNT, ge=1)
    deduce: bool = True


# ── Results ──────────────────────────────────────────────────────────────────

class EnclosureRecord(_Model):
    lo: Rational
    hi: Rational


class SearchStats(_Model):
    nodes_dequeued: int = 0
    nodes_pruned: int = 0
    nodes_created: int = 0
    lp_solves: int = 0
    handoffs: int = 0
    vectors_enumerated: int = 0
    candidates_normed: int = 0


class RunRecord(_Model):
    config: SearchConfig
    degree: int
    forced: list[str] = []                 # linear factors deduced on [0,1]
    odd: bool                              # p = (2x-1) q(x(1-x)) rather than q(x(1-x))
    known_factor: list[int]                # F on [0,1/4], in y = x(1-x)
    missing_factor: list[int]              # G on [0,1/4]
    factored: str                          # e.g. "h1^48 h2^17 h3^6"
    cofactor: list[int]                    # part not covered by the factor DB
    coefficients: list[int]                # p on [0,1]
    norm: EnclosureRecord
    t: str
    t_enclosure: EnclosureRecord
    stats: SearchStats = SearchStats()
    wall_time: float = 0.0
    created_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())


class NodeRecord(_Model):
    constraints: list[tuple[int, Literal["fixed", "lower", "upper"], int]]
    bound: Rational
    a_bar: list[Rational]
    depth: int


class Checkpoint(_Model):
    g: int
    upper: Rational
    incumbent: list[int] | None = None
    incumbent_norm: EnclosureRecord | None = None
    queue: list[NodeRecord] = []
    stats: SearchStats = SearchStats()
    saved_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())


# ── Load / save ──────────────────────────────────────────────────────────────

ModelT = TypeVar("ModelT", bound=BaseModel)


def load_model(path: Path, model: type[ModelT]) -> ModelT:
    """Read and validate ``path``; any failure becomes a :class:`RecordError`."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
        return model.model_validate(json.loads(raw))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        logger.error("Cannot load %s as %s: %s", path, model.__name__, exc)
        raise RecordError(f"{path}: {exc}") from exc


def save_model(path: Path, record: BaseModel) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(record.model_dump(mode="json"), indent=2, ensure_ascii=False),
        encoding="utf-8",
    )
    logger.info("%s saved to %s.", type(record).__name__, path)
