"""Request/response models for the HTTP service.

Payloads carry the same information as the CSV artifacts but in typed JSON:
grids are shipped as (domain, resolution) and rebuilt server-side — cell
coordinates are derivable, so only values travel — and patterns are shipped
as (k, alpha, order, values) against the product quadrature of that order.
Converters to and from the in-memory objects live next to each model.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..config import DomainModel, PipelineConfig
from ..errors import ConfigurationError
from ..fields import ComplexField
from ..grids import build_domain_grid
from ..particles import DensityField, ParticleEnsemble
from ..spherequad import FarFieldPattern, build_sphere_quadrature
from ..storage import domain_to_json

__all__ = [
    "FieldPayload", "DensityPayload", "PatternPayload", "EnsemblePayload",
    "ForwardRequest", "ForwardResponse", "DesignRequest", "DesignResponse",
    "SimulateRequest", "SimulateResponse", "SimulationRun",
    "ValidateRequest", "ValidateResponse", "HealthResponse",
]


def _domain_model(domain) -> DomainModel:
    return DomainModel(**domain_to_json(domain))


class FieldPayload(BaseModel):
    """Complex field as (grid spec, values); cells are rebuilt server-side."""

    model_config = ConfigDict(extra="forbid")

    role: str
    domain: DomainModel
    resolution: int = Field(ge=2)
    re: list[float]
    im: list[float]

    @classmethod
    def from_field(cls, field: ComplexField) -> "FieldPayload":
        return cls(role=field.role, domain=_domain_model(field.grid.domain),
                   resolution=field.grid.resolution,
                   re=field.values.real.tolist(), im=field.values.imag.tolist())

    def to_field(self) -> ComplexField:
        grid = build_domain_grid(self.domain.to_domain(), self.resolution)
        if len(self.re) != grid.n_cells or len(self.im) != grid.n_cells:
            raise ConfigurationError(
                f"field payload carries {len(self.re)} values for a grid of "
                f"{grid.n_cells} cells"
            )
        values = np.asarray(self.re) + 1j * np.asarray(self.im)
        return ComplexField(grid=grid, values=values, role=self.role)


class DensityPayload(BaseModel):
    """Particle density plus the capacitance it was derived with."""

    model_config = ConfigDict(extra="forbid")

    domain: DomainModel
    resolution: int = Field(ge=2)
    values: list[float]
    capacitance_re: float
    capacitance_im: float = 0.0

    @classmethod
    def from_density(cls, density: DensityField) -> "DensityPayload":
        c0 = complex(density.capacitance)
        return cls(domain=_domain_model(density.grid.domain),
                   resolution=density.grid.resolution,
                   values=density.values.tolist(),
                   capacitance_re=c0.real, capacitance_im=c0.imag)

    def to_density(self) -> DensityField:
        grid = build_domain_grid(self.domain.to_domain(), self.resolution)
        if len(self.values) != grid.n_cells:
            raise ConfigurationError(
                f"density payload carries {len(self.values)} values for a grid of "
                f"{grid.n_cells} cells"
            )
        return DensityField(grid=grid, values=np.asarray(self.values),
                            capacitance=complex(self.capacitance_re, self.capacitance_im))


class PatternPayload(BaseModel):
    """Far-field samples on the product quadrature of the declared order."""

    model_config = ConfigDict(extra="forbid")

    k: float = Field(gt=0.0)
    alpha: tuple[float, float, float]
    order: int = Field(ge=1)
    re: list[float]
    im: list[float]

    @classmethod
    def from_pattern(cls, pattern: FarFieldPattern) -> "PatternPayload":
        if pattern.quadrature.order < 1:
            raise ConfigurationError("pattern quadrature does not declare its order")
        return cls(k=pattern.k, alpha=pattern.alpha, order=pattern.quadrature.order,
                   re=pattern.values.real.tolist(), im=pattern.values.imag.tolist())

    def to_pattern(self) -> FarFieldPattern:
        quad = build_sphere_quadrature(self.order)
        if len(self.re) != quad.n_nodes or len(self.im) != quad.n_nodes:
            raise ConfigurationError(
                f"pattern payload carries {len(self.re)} values for a quadrature of "
                f"{quad.n_nodes} nodes"
            )
        values = np.asarray(self.re) + 1j * np.asarray(self.im)
        return FarFieldPattern(quadrature=quad, values=values, k=self.k, alpha=self.alpha)


class EnsemblePayload(BaseModel):
    """Particle positions, radii, and capacitances, plus run metadata."""

    model_config = ConfigDict(extra="forbid")

    positions: list[tuple[float, float, float]]
    radii: list[float]
    cap_re: list[float]
    cap_im: list[float]
    k: float = Field(gt=0.0)
    a_max: float = 0.0
    d_min: float = 0.0
    meta: dict = Field(default_factory=dict)

    @classmethod
    def from_ensemble(cls, ens: ParticleEnsemble, meta: dict | None = None) -> "EnsemblePayload":
        return cls(positions=[tuple(p) for p in ens.positions.tolist()],
                   radii=ens.radii.tolist(),
                   cap_re=ens.capacitances.real.tolist(),
                   cap_im=ens.capacitances.imag.tolist(),
                   k=ens.k, a_max=ens.a_max,
                   d_min=ens.d_min if np.isfinite(ens.d_min) else 0.0,
                   meta=dict(meta or {}))

    def to_ensemble(self) -> ParticleEnsemble:
        m = len(self.positions)
        if not (len(self.radii) == len(self.cap_re) == len(self.cap_im) == m):
            raise ConfigurationError("ensemble payload arrays disagree in length")
        return ParticleEnsemble(
            positions=np.asarray(self.positions, dtype=float).reshape(m, 3),
            radii=np.asarray(self.radii, dtype=float),
            capacitances=np.asarray(self.cap_re) + 1j * np.asarray(self.cap_im),
            k=self.k, a_max=self.a_max, d_min=self.d_min,
        )


class ForwardRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: PipelineConfig
    q: FieldPayload


class ForwardResponse(BaseModel):
    pattern: PatternPayload
    report: dict


class DesignRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: PipelineConfig
    target: PatternPayload


class DesignResponse(BaseModel):
    h: FieldPayload
    u: FieldPayload
    q: FieldPayload
    density: DensityPayload | None = None
    report: dict


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: PipelineConfig
    q: FieldPayload | None = None
    density: DensityPayload | None = None


class SimulationRun(BaseModel):
    M: int
    seed: int
    ensemble: EnsemblePayload
    pattern: PatternPayload


class SimulateResponse(BaseModel):
    runs: list[SimulationRun]
    reference: PatternPayload | None = None
    report: dict


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: PipelineConfig


class ValidateResponse(BaseModel):
    report: dict


class HealthResponse(BaseModel):
    status: str
    version: str
