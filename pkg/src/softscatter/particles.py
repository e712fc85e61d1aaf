"""Small soft particles: densities, sampling, and Foldy-Lax solves.

A potential step q - q0 is realized by a density of small acoustically soft
spheres, N(x) = (q(x) - q0(x)) / C0 particles per unit volume, where C0 is
the per-particle capacitance; a sphere of radius a has C = 4 pi a.  That
convention is fixed by consistency with the far field: Foldy-Lax with the
kernel e^{ikr}/(4 pi r) then reproduces the soft-sphere amplitude -a in the
ka -> 0 limit.  Impedance particles (u_N = zeta u on the surface) enter
through the corrected capacitance C_zeta = C0 / (1 + C0 / (zeta |S|)).

The many-body solve uses the Foldy-Lax system

    c_j = -g_j [ u0(x_j) + sum_{m != j} G(x_j, x_m) c_m ],

with the radiation-corrected coupling g = C / (1 + ikC / (4 pi)), whose
one-particle closed form -g/(4 pi) = -a/(1 + ika) matches the exact
s-wave soft-sphere amplitude -sin(ka) e^{-ika} / k to O((ka)^2).  The far
field is A(beta) = (1/4 pi) sum_m c_m e^{-ik beta.x_m}.

Sampling draws an inhomogeneous Poisson configuration cell by cell with a
hard-core rejection step (minimum pairwise distance d_min), backed by a
spatial hash; streams are keyed by a single integer seed through a
counter-based generator, so a configuration is reproducible from
(density, seed) alone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve as dense_solve
from scipy.spatial import cKDTree

from .errors import (
    ConfigurationError,
    PackingError,
    RealizabilityError,
    SingularImpedanceError,
    SolverFailure,
)
from .fields import ComplexField
from .grids import DomainGrid
from .spherequad import FarFieldPattern, SphereQuadrature

logger = logging.getLogger(__name__)

__all__ = [
    "DensityField",
    "ParticleEnsemble",
    "sphere_capacitance",
    "impedance_capacitance",
    "particle_density",
    "sample_particles",
    "foldy_lax_coefficients",
    "foldy_lax_solve",
]

# Hard-sphere packing fraction (diameter d_min) above which Poisson
# placement with bounded retries is considered infeasible.  Random close
# packing sits near 0.64; staying well below keeps rejection rates small.
_MAX_PACKING_FRACTION = 0.3


def sphere_capacitance(a: float) -> float:
    """Capacitance 4 pi a of a sphere of radius a (Gaussian-free units)."""
    if not a > 0:
        raise ConfigurationError(f"sphere radius must be positive, got {a}")
    return 4.0 * np.pi * a


def impedance_capacitance(c0: float, zeta: complex | float | None,
                          surface_area: float) -> complex:
    """Effective capacitance C_zeta = C0 / (1 + C0 / (zeta |S|)).

    ``zeta`` of None or infinity returns C0 (the sound-soft limit).
    Only Re(zeta) >= 0 is accepted; a vanishing denominator raises
    :class:`SingularImpedanceError`.
    """
    if not c0 > 0:
        raise ConfigurationError(f"capacitance must be positive, got {c0}")
    if not surface_area > 0:
        raise ConfigurationError(f"surface area must be positive, got {surface_area}")
    if zeta is None or (not isinstance(zeta, complex) and math.isinf(zeta)) \
            or (isinstance(zeta, complex) and (math.isinf(zeta.real) or math.isinf(zeta.imag))):
        return complex(c0)
    z = complex(zeta)
    if z == 0:
        raise ConfigurationError("impedance zeta must be nonzero (use None for sound-soft)")
    if z.real < 0:
        raise ConfigurationError(f"impedance must have Re(zeta) >= 0, got {zeta}")
    denom = 1.0 + c0 / (z * surface_area)
    if abs(denom) < 1e-12:
        raise SingularImpedanceError(
            f"impedance correction is singular: 1 + C0/(zeta |S|) = {denom}"
        )
    return c0 / denom


@dataclass(frozen=True)
class DensityField:
    """Particles per unit volume on a grid, plus the capacitance behind it.

    ``capacitance`` is the per-particle value the density was derived with;
    it is what sampling needs to set the particle radius and what the
    effective medium sees as C(x) = N(x) * C0.
    """

    grid: DomainGrid
    values: np.ndarray = field(repr=False)  # (N,) real, >= 0
    capacitance: complex = 1.0
    total_expected: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ConfigurationError("density values must match the grid")
        if np.any(v < 0):
            raise ConfigurationError("particle density must be nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(
            self, "total_expected", float(np.sum(v * self.grid.cell_weights))
        )


def particle_density(q: ComplexField, q0: ComplexField, c0: complex,
                     imag_tol: float = 1e-9) -> DensityField:
    """Density N(x) = (q(x) - q0(x)) / C0 realizing the potential step.

    Raises
    ------
    RealizabilityError
        If any cell yields a density with negative real part or an
        imaginary part above ``imag_tol`` (relative to the largest value);
        the error lists the offending cells and suggests the impedance
        correction, which rotates C0 in the complex plane.
    """
    if q.grid is not q0.grid and q.grid != q0.grid:
        raise ConfigurationError("q and q0 must live on the same grid")
    c0 = complex(c0)
    if c0 == 0:
        raise ConfigurationError("capacitance C0 must be nonzero")
    n = (q.values - q0.values) / c0  # (N,) complex
    scale = max(float(np.max(np.abs(n))), 1.0) if n.size else 1.0
    bad_imag = np.abs(n.imag) > imag_tol * scale
    bad_real = n.real < -imag_tol * scale
    bad = bad_imag | bad_real
    if np.any(bad):
        idx = np.flatnonzero(bad)
        sample = ", ".join(
            f"cell {i}: N={n[i]:.3e}" for i in idx[:5]
        ) + (", ..." if idx.size > 5 else "")
        raise RealizabilityError(
            f"(q - q0)/C0 is not a nonnegative real density on {idx.size} of "
            f"{n.size} cells ({sample}); an impedance boundary condition "
            "changes C0 to C_zeta = C0/(1 + C0/(zeta |S|)) and can rotate the "
            "quotient onto the positive real axis",
            offending_cells=[int(i) for i in idx[:64]],
            n_offending=int(idx.size),
        )
    values = np.where(n.real > 0, n.real, 0.0)
    return DensityField(grid=q.grid, values=values, capacitance=c0)


@dataclass(frozen=True)
class ParticleEnsemble:
    """Positions, radii, and capacitances of M small particles."""

    positions: np.ndarray = field(repr=False)     # (M, 3)
    radii: np.ndarray = field(repr=False)         # (M,)
    capacitances: np.ndarray = field(repr=False)  # (M,) complex
    k: float = 1.0
    a_max: float = 0.0
    d_min: float = 0.0

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def validate(self, ka_max: float = 0.1, a_over_d_max: float = 0.1) -> None:
        """Check the smallness and separation invariants."""
        if self.count == 0:
            return
        if not np.all(self.radii > 0):
            raise ConfigurationError("particle radii must be positive")
        a_max = float(np.max(self.radii))
        if self.k * a_max > ka_max * (1 + 1e-12):
            raise ConfigurationError(
                f"k*a = {self.k * a_max:.3e} violates the smallness bound {ka_max}"
            )
        if self.count > 1:
            tree = cKDTree(self.positions)
            dists, _ = tree.query(self.positions, k=2)
            nearest = float(np.min(dists[:, 1]))
            if nearest < self.d_min * (1 - 1e-12):
                raise ConfigurationError(
                    f"pairwise distance {nearest:.3e} under the floor {self.d_min:.3e}"
                )
            if self.d_min <= 2 * a_max:
                raise ConfigurationError("d_min must exceed 2*a_max (no touching particles)")
            if a_max / self.d_min > a_over_d_max * (1 + 1e-12):
                raise ConfigurationError(
                    f"a/d = {a_max / self.d_min:.3e} violates the dilute bound {a_over_d_max}"
                )


def sample_particles(density: DensityField, seed: int, *, radius: float | None = None,
                     ka_max: float = 0.1, a_over_d_max: float = 0.1, k: float = 1.0,
                     max_retries: int = 100) -> ParticleEnsemble:
    """Draw a hard-core Poisson configuration matching a density field.

    Cell counts are Poisson with mean N(x_c) w_c; positions are uniform in
    the cell (re-drawn until inside the domain), and any draw closer than
    d_min = a / a_over_d_max to an accepted particle is rejected and
    retried, up to ``max_retries`` times.  All particles share one radius
    a = |C0| / (4 pi) (or ``radius`` when given, e.g. for impedance
    particles whose capacitance is not 4 pi a), so the realized capacitance
    per unit volume tracks N(x) C0 by construction.

    Raises
    ------
    PackingError
        If the requested density exceeds the hard-core feasibility bound,
        or a particle exhausts its retries.  The error reports the largest
        feasible density for these constraints.
    """
    if max_retries < 1:
        raise ConfigurationError("max_retries must be >= 1")
    if not k > 0:
        raise ConfigurationError(f"wavenumber must be positive, got {k}")
    a = float(radius) if radius is not None else abs(density.capacitance) / (4.0 * np.pi)
    if not a > 0:
        raise ConfigurationError(f"particle radius must be positive, got {a}")
    if k * a > ka_max:
        raise ConfigurationError(
            f"k*a = {k * a:.3e} exceeds ka_max = {ka_max}; reduce C0 or the radius"
        )
    d_min = a / a_over_d_max
    grid = density.grid

    # Feasibility: spheres of diameter d_min at number density N fill the
    # fraction N * pi/6 * d_min^3; cap it well below random close packing.
    n_max = float(np.max(density.values)) if density.values.size else 0.0
    max_feasible = _MAX_PACKING_FRACTION * 6.0 / (np.pi * d_min**3)
    if n_max > max_feasible:
        raise PackingError(
            f"density {n_max:.3e} exceeds the hard-core feasibility bound "
            f"{max_feasible:.3e} for d_min={d_min:.3e}",
            max_feasible_density=max_feasible,
        )

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    counts = rng.poisson(density.values * grid.cell_weights)  # (N_cells,)
    spacing = grid.spacing  # (3,)
    cell_lo = grid.cell_centers - 0.5 * spacing[None, :]

    positions: list[np.ndarray] = []
    buckets: dict[tuple[int, int, int], list[int]] = {}
    inv_d = 1.0 / d_min
    d2 = d_min * d_min

    def clear_of_neighbors(p: np.ndarray) -> bool:
        cx, cy, cz = (int(math.floor(p[0] * inv_d)), int(math.floor(p[1] * inv_d)),
                      int(math.floor(p[2] * inv_d)))
        for bx in (cx - 1, cx, cx + 1):
            for by in (cy - 1, cy, cy + 1):
                for bz in (cz - 1, cz, cz + 1):
                    for j in buckets.get((bx, by, bz), ()):
                        dp = positions[j] - p
                        if dp @ dp < d2:
                            return False
        return True

    for ci in np.flatnonzero(counts):
        lo = cell_lo[ci]
        for _ in range(int(counts[ci])):
            for _ in range(max_retries):
                p = lo + rng.random(3) * spacing
                if not grid.domain.contains(p[None, :])[0]:
                    continue
                if not clear_of_neighbors(p):
                    continue
                key = (int(math.floor(p[0] * inv_d)), int(math.floor(p[1] * inv_d)),
                       int(math.floor(p[2] * inv_d)))
                buckets.setdefault(key, []).append(len(positions))
                positions.append(p)
                break
            else:
                raise PackingError(
                    f"exhausted {max_retries} retries placing a particle in cell "
                    f"{int(ci)}; density {density.values[ci]:.3e} is too high for "
                    f"d_min={d_min:.3e}",
                    max_feasible_density=max_feasible, cell=int(ci),
                )

    m = len(positions)
    pos = np.array(positions).reshape(m, 3)
    ens = ParticleEnsemble(
        positions=pos,
        radii=np.full(m, a),
        capacitances=np.full(m, complex(density.capacitance)),
        k=float(k), a_max=a, d_min=d_min,
    )
    ens.validate(ka_max=ka_max, a_over_d_max=a_over_d_max)
    logger.info("sampled %d particles (expected %.1f) at a=%.3e, seed=%d",
                m, density.total_expected, a, int(seed))
    return ens


def foldy_lax_coefficients(ens: ParticleEnsemble, alpha, k: float) -> np.ndarray:
    """Scattering coefficients c solving (I + diag(g) G) c = -g u0.

    g is the radiation-corrected coupling C/(1 + ikC/(4 pi)); G is the
    off-diagonal kernel matrix between particle centers.
    """
    m = ens.count
    if m == 0:
        return np.zeros(0, dtype=complex)
    g = ens.capacitances / (1.0 + 1j * k * ens.capacitances / (4.0 * np.pi))  # (M,)
    u0 = np.exp(1j * k * (ens.positions @ np.asarray(alpha, dtype=float)))  # (M,)
    if m == 1:
        return -g * u0
    diff = ens.positions[:, None, :] - ens.positions[None, :, :]  # (M, M, 3)
    r = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))
    np.fill_diagonal(r, 1.0)
    kernel = np.exp(1j * k * r) / (4.0 * np.pi * r)
    np.fill_diagonal(kernel, 0.0)
    system = g[:, None] * kernel
    idx = np.arange(m)
    system[idx, idx] += 1.0
    try:
        c = dense_solve(system, -g * u0, overwrite_a=True, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - d_min prevents this
        raise SolverFailure(f"Foldy-Lax system is singular: {exc}") from exc
    if not np.all(np.isfinite(c)):
        raise SolverFailure("Foldy-Lax solve produced non-finite coefficients")
    return c


def foldy_lax_solve(ens: ParticleEnsemble, alpha, k: float,
                    quad: SphereQuadrature) -> FarFieldPattern:
    """Far-field pattern A(beta) = (1/4 pi) sum_m c_m e^{-ik beta.x_m}."""
    alpha_t = tuple(float(x) for x in np.asarray(alpha, dtype=float))
    if ens.count == 0:
        return FarFieldPattern(quadrature=quad,
                               values=np.zeros(quad.n_nodes, dtype=complex),
                               k=k, alpha=alpha_t)
    c = foldy_lax_coefficients(ens, alpha, k)
    phases = np.exp(-1j * k * (quad.nodes @ ens.positions.T))  # (Q, M)
    values = (1.0 / (4.0 * np.pi)) * phases @ c
    return FarFieldPattern(quadrature=quad, values=values, k=k, alpha=alpha_t)
