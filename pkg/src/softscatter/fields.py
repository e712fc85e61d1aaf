"""Complex-valued fields sampled on a domain grid.

A single container covers every cell-sampled function in the pipeline; the
``role`` tag records which one (the potential q, the background q0, the
auxiliary density h, the total field u, or a capacitance density C) so that
serialized artifacts stay self-describing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .grids import DomainGrid

__all__ = ["ComplexField", "FIELD_ROLES", "field_norm", "zero_field", "plane_wave"]

FIELD_ROLES = frozenset({"potential_q", "background_q0", "density_h", "field_u", "capacitance_C"})


@dataclass(frozen=True)
class ComplexField:
    """Complex samples at the cells of a :class:`DomainGrid`."""

    grid: DomainGrid
    values: np.ndarray = field(repr=False)  # (N,) complex
    role: str = "potential_q"

    def __post_init__(self):
        if self.role not in FIELD_ROLES:
            raise ConfigurationError(f"unknown field role {self.role!r}")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_cells,):
            raise ConfigurationError(
                f"field has {v.shape} values for a grid of {self.grid.n_cells} cells"
            )
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, role: str | None = None) -> "ComplexField":
        return ComplexField(grid=self.grid, values=np.asarray(values, dtype=complex),
                            role=self.role if role is None else role)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def field_norm(f: ComplexField) -> float:
    """Volume-weighted L2(D) norm: sqrt(sum_m w_m |v_m|^2)."""
    return float(np.sqrt(np.sum(f.grid.cell_weights * np.abs(f.values) ** 2)))


def zero_field(grid: DomainGrid, role: str) -> ComplexField:
    return ComplexField(grid=grid, values=np.zeros(grid.n_cells, dtype=complex), role=role)


def plane_wave(grid: DomainGrid, alpha, k: float) -> ComplexField:
    """Incident plane wave e^{i k alpha.x} sampled at the cell centers."""
    a = np.asarray(alpha, dtype=float)
    phase = grid.cell_centers @ (1j * k * a)  # (N,)
    return ComplexField(grid=grid, values=np.exp(phase), role="field_u")
