"""Pipeline configuration: one validated model shared by CLI and service.

Configs live as JSON files; every report echoes the fully-populated model
(defaults included) so an experiment is reproducible from its report alone.
Validation is front-loaded: any violated invariant fails fast with a
field-level message before computation starts.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError
from .grids import BallDomain, BoxDomain, DomainGrid, DomainSpec, build_domain_grid
from .spherequad import SphereQuadrature, build_sphere_quadrature
from .synthesis import default_lambda_ladder

logger = logging.getLogger(__name__)

__all__ = ["DomainModel", "EpsTargets", "ParticleParams", "PipelineConfig",
           "load_config", "config_from_dict"]


class DomainModel(BaseModel):
    """Ball (center + radius) or axis-aligned box (lo/hi corners)."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["ball", "box"] = "ball"
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float | None = None
    lo: tuple[float, float, float] | None = None
    hi: tuple[float, float, float] | None = None

    @model_validator(mode="after")
    def _check_shape(self) -> "DomainModel":
        if self.kind == "ball":
            if self.radius is None or self.radius <= 0:
                raise ValueError("ball domain requires radius > 0")
            if self.lo is not None or self.hi is not None:
                raise ValueError("ball domain takes center/radius, not lo/hi")
        else:
            if self.lo is None or self.hi is None:
                raise ValueError("box domain requires lo and hi corners")
            if any(h <= l for l, h in zip(self.lo, self.hi)):
                raise ValueError("box domain requires hi > lo per axis")
        return self

    def to_domain(self) -> DomainSpec:
        if self.kind == "ball":
            return BallDomain(center=self.center, radius=float(self.radius))
        return BoxDomain(lo=self.lo, hi=self.hi)


class EpsTargets(BaseModel):
    """Error budget: Step-1 target eps1, Step-2 allowance eps2, total eps.

    The budget must be internally consistent: eps >= eps1 + eps2 |D|/(4 pi).
    """

    model_config = ConfigDict(extra="forbid")

    eps1: float = Field(default=1e-3, gt=0.0)
    eps2: float = Field(default=1e-3, ge=0.0)
    eps: float = Field(default=0.05, gt=0.0)


class ParticleParams(BaseModel):
    """Per-particle capacitance (or radius), impedance, and dilution bounds."""

    model_config = ConfigDict(extra="forbid")

    C0: float | None = Field(default=None, gt=0.0)
    a: float | None = Field(default=None, gt=0.0)
    zeta: float | tuple[float, float] | Literal["inf"] | None = None
    ka_max: float = Field(default=0.1, gt=0.0)
    a_over_d_max: float = Field(default=0.1, gt=0.0)
    max_retries: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def _check_capacitance(self) -> "ParticleParams":
        if (self.C0 is None) == (self.a is None):
            raise ValueError("exactly one of C0 or a must be given")
        return self

    @field_validator("zeta")
    @classmethod
    def _check_zeta(cls, v):
        if v is None or v == "inf":
            return v
        z = complex(*v) if isinstance(v, tuple) else complex(v)
        if z == 0:
            raise ValueError("zeta must be nonzero (omit it for sound-soft particles)")
        if z.real < 0:
            raise ValueError("zeta must have nonnegative real part")
        return v

    @property
    def base_capacitance(self) -> float:
        """Sound-soft capacitance C0 (from the radius when given as a)."""
        return float(self.C0) if self.C0 is not None else 4.0 * math.pi * float(self.a)

    @property
    def radius(self) -> float:
        """Geometric particle radius."""
        return float(self.a) if self.a is not None else float(self.C0) / (4.0 * math.pi)

    @property
    def zeta_value(self) -> complex | None:
        """Impedance as a complex number; None means sound-soft (zeta = inf)."""
        if self.zeta is None or self.zeta == "inf":
            return None
        return complex(*self.zeta) if isinstance(self.zeta, tuple) else complex(self.zeta)


class PipelineConfig(BaseModel):
    """Everything a subcommand needs, with explicit defaults."""

    model_config = ConfigDict(extra="forbid")

    domain: DomainModel
    resolution: int = Field(default=16, ge=2)
    k: float = Field(default=1.0, gt=0.0)
    alpha: tuple[float, float, float] = (0.0, 0.0, 1.0)
    quadrature_order: int = Field(default=12, ge=1)
    eps_targets: EpsTargets = Field(default_factory=EpsTargets)
    delta: float = Field(default=1e-3, gt=0.0,
                         description="clipping threshold relative to max|u|")
    lambda_ladder: list[float] = Field(default_factory=default_lambda_ladder)
    solver_tol: float = Field(default=1e-8, gt=0.0)
    particles: ParticleParams | None = None
    M_list: list[int] = Field(default_factory=lambda: [100, 1000, 5000])
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: str = "out"
    threads: int = Field(default=1, ge=1)

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, v):
        norm = math.sqrt(sum(c * c for c in v))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"alpha must be a unit vector, |alpha| = {norm}")
        return v

    @field_validator("lambda_ladder")
    @classmethod
    def _check_ladder(cls, v):
        if not v:
            raise ValueError("lambda_ladder must be nonempty")
        if any(l <= 0 for l in v):
            raise ValueError("lambda_ladder entries must be positive")
        if any(a <= b for a, b in zip(v, v[1:])):
            raise ValueError("lambda_ladder must be strictly decreasing")
        return v

    @field_validator("M_list")
    @classmethod
    def _check_m_list(cls, v):
        if not v:
            raise ValueError("M_list must be nonempty")
        if any(m < 0 for m in v):
            raise ValueError("M_list entries must be nonnegative")
        return v

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, v):
        if not v:
            raise ValueError("seeds must be nonempty")
        return v

    @model_validator(mode="after")
    def _check_budget(self) -> "PipelineConfig":
        volume = self.domain.to_domain().volume
        floor = self.eps_targets.eps1 + self.eps_targets.eps2 * volume / (4.0 * math.pi)
        if self.eps_targets.eps < floor - 1e-15:
            raise ValueError(
                f"eps_targets.eps = {self.eps_targets.eps} is below the budget floor "
                f"eps1 + eps2*|D|/(4*pi) = {floor:.6g} for this domain"
            )
        return self

    # -- construction helpers ------------------------------------------------

    def build_grid(self) -> DomainGrid:
        return build_domain_grid(self.domain.to_domain(), self.resolution)

    def build_quadrature(self) -> SphereQuadrature:
        return build_sphere_quadrature(self.quadrature_order)

    def echo(self) -> dict:
        """JSON-safe dump with every default made explicit."""
        return self.model_dump(mode="json")


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def config_from_dict(data: dict) -> PipelineConfig:
    """Validate a raw dict into a PipelineConfig; field-level errors."""
    try:
        return PipelineConfig(**data)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid configuration: {_format_validation_error(exc)}",
                                 errors=exc.errors(include_url=False)) from exc


def load_config(path) -> PipelineConfig:
    """Load and validate a JSON config file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must contain a JSON object")
    return config_from_dict(data)
