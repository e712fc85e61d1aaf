"""Direct scattering solves and far-field amplitudes.

For a potential q on a bounded domain the total field satisfies the volume
integral equation

    u(x) = e^{ik alpha.x} - int_D G(x, y) q(y) u(y) dy,

collocated on the grid of q (see :mod:`softscatter.kernels` for the discrete
kernel).  The far field of the scattered wave is then

    A(beta) = -(1/4 pi) int_D e^{-ik beta.x} q(x) u(x) dx,

the coefficient of e^{ikr}/r in u - u0.  The dense system is LU-factored
once per potential; additional incident directions reuse the factorization,
which is what makes reciprocity checks over many direction pairs cheap.
The reported residual is the relative Euclidean residual of the discrete
system, verified matrix-free after the solve (the factorization is trusted
for nothing).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import SolverFailure
from .fields import ComplexField, plane_wave
from .grids import DomainGrid
from .kernels import apply_volume_kernel, assemble_system
from .spherequad import FarFieldPattern, SphereQuadrature

logger = logging.getLogger(__name__)

__all__ = [
    "ScatteringSolution",
    "ScatteringOperator",
    "forward_solve",
    "scattering_amplitude",
    "amplitude_at",
    "born_amplitude",
]


@dataclass(frozen=True)
class ScatteringSolution:
    """Total field u for a potential q, with solve diagnostics."""

    u: ComplexField
    q: ComplexField
    k: float
    alpha: tuple[float, float, float]
    residual: float

    @property
    def grid(self) -> DomainGrid:
        return self.q.grid


class ScatteringOperator:
    """LU-factored discrete operator I + K diag(q) for one potential.

    Assembling and factoring the dense system is the expensive step; this
    class does it once and then serves any number of incident directions
    (the right-hand side is the only thing that changes).
    """

    def __init__(self, q: ComplexField, k: float):
        if not k > 0:
            raise SolverFailure(f"wavenumber must be positive, got {k}")
        self.q = q
        self.k = float(k)
        a = assemble_system(q.grid, self.k, q.values)
        logger.info("factoring %dx%d scattering system", q.grid.n_cells, q.grid.n_cells)
        self._lu = lu_factor(a, overwrite_a=True, check_finite=False)

    def solve_rhs(self, rhs: np.ndarray) -> np.ndarray:
        return lu_solve(self._lu, rhs, check_finite=False)

    def residual(self, u: np.ndarray, rhs: np.ndarray) -> float:
        """Relative residual ||u + K(q u) - rhs|| / ||rhs||, matrix-free."""
        r = u + apply_volume_kernel(self.q.grid, self.k, self.q.values * u) - rhs
        denom = float(np.linalg.norm(rhs))
        return float(np.linalg.norm(r)) / denom if denom > 0 else float(np.linalg.norm(r))

    def solve(self, alpha, tol: float = 1e-8) -> ScatteringSolution:
        """Solve for one incident plane-wave direction."""
        u0 = plane_wave(self.q.grid, alpha, self.k).values
        u = self.solve_rhs(u0)
        res = self.residual(u, u0)
        if not np.isfinite(res) or res > tol:
            raise SolverFailure(
                f"scattering solve residual {res:.3e} exceeds tolerance {tol:.3e}",
                residual=res,
            )
        alpha_t = tuple(float(c) for c in np.asarray(alpha, dtype=float))
        return ScatteringSolution(
            u=ComplexField(grid=self.q.grid, values=u, role="field_u"),
            q=self.q, k=self.k, alpha=alpha_t, residual=res,
        )


def forward_solve(q: ComplexField, alpha, k: float, tol: float = 1e-8) -> ScatteringSolution:
    """Solve the direct scattering problem for one potential and direction.

    Parameters
    ----------
    q : ComplexField
        Potential on a domain grid (may be complex-valued).
    alpha : array_like
        Incident unit direction.
    k : float
        Wavenumber, > 0.
    tol : float
        Maximum accepted relative residual of the discrete system.

    Returns
    -------
    ScatteringSolution

    Raises
    ------
    SolverFailure
        If the achieved residual exceeds ``tol``.
    """
    return ScatteringOperator(q, k).solve(alpha, tol=tol)


def _far_field_at(directions: np.ndarray, grid: DomainGrid, k: float,
                  density: np.ndarray) -> np.ndarray:
    """-(1/4 pi) sum_m e^{-ik beta.x_m} density_m w_m for each direction."""
    phases = np.exp(-1j * k * (directions @ grid.cell_centers.T))  # (Q, N)
    return -(1.0 / (4.0 * np.pi)) * phases @ (density * grid.cell_weights)


def scattering_amplitude(sol: ScatteringSolution, quad: SphereQuadrature) -> FarFieldPattern:
    """Far-field pattern of a scattering solution at the quadrature nodes."""
    values = _far_field_at(quad.nodes, sol.grid, sol.k, sol.q.values * sol.u.values)
    return FarFieldPattern(quadrature=quad, values=values, k=sol.k, alpha=sol.alpha)


def amplitude_at(sol: ScatteringSolution, directions: np.ndarray) -> np.ndarray:
    """Far-field amplitude at arbitrary unit directions, shape (Q,)."""
    d = np.atleast_2d(np.asarray(directions, dtype=float))
    return _far_field_at(d, sol.grid, sol.k, sol.q.values * sol.u.values)


def born_amplitude(q: ComplexField, alpha, k: float, quad: SphereQuadrature) -> FarFieldPattern:
    """First-order (Born) amplitude: the far-field integral with u = u0.

    Serves as an independent oracle for weak potentials, where it matches
    the full solve to O(||q||^2).
    """
    u0 = plane_wave(q.grid, alpha, k).values
    values = _far_field_at(quad.nodes, q.grid, k, q.values * u0)
    alpha_t = tuple(float(c) for c in np.asarray(alpha, dtype=float))
    return FarFieldPattern(quadrature=quad, values=values, k=k, alpha=alpha_t)
