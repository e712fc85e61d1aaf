"""Effective-medium convergence experiment.

As the particle count M grows with total capacitance held fixed — per-M
capacitance C0(M) = (int_D C dx)/M, radius a = C0/(4 pi) proportional to
1/M while spacing shrinks only like M^{-1/3} — the Foldy-Lax far field of a
sampled cloud should approach the far field of the effective potential
q = q0 + C(x).  This module runs that experiment for q0 = 0: it solves the
effective problem once, then for each (M, seed) samples a cloud from
N(x) = C(x)/C0(M), solves the many-body system, and records the relative
pattern error e = ||A_FL - A_eff|| / ||A_eff||.  The medians over seeds are
expected to be non-increasing in M.

A second, amplitude-free diagnostic tracks how well realized ensembles
carry the capacitance of subdomains: for each of the eight coordinate
octants (anchored at the domain center), the error
|sum_{x_m in octant} C_m - int_octant C dx| is recorded per run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .fields import ComplexField
from .forward import forward_solve, scattering_amplitude
from .particles import DensityField, ParticleEnsemble, foldy_lax_solve, sample_particles
from .spherequad import FarFieldPattern, SphereQuadrature, sphere_norm

logger = logging.getLogger(__name__)

__all__ = ["ConvergenceRecord", "ConvergenceReport", "octant_capacitance_errors",
           "homogenization_check"]


@dataclass(frozen=True)
class ConvergenceRecord:
    """One (M, seed) run of the experiment."""

    M: int
    seed: int
    realized_count: int
    error: float
    octant_error: float


@dataclass(frozen=True)
class ConvergenceReport:
    """All runs plus per-M medians and the monotonicity verdict."""

    records: tuple[ConvergenceRecord, ...]
    medians: dict[int, float]
    octant_medians: dict[int, float]
    reference_norm: float
    monotone: bool
    capacitance_by_m: dict[int, float] = field(default_factory=dict)
    radius_by_m: dict[int, float] = field(default_factory=dict)


def octant_capacitance_errors(ens: ParticleEnsemble, density: DensityField) -> np.ndarray:
    """Capacitance mismatch over the eight coordinate octants.

    Returns |sum C_m - int C dx| per octant, shape (8,), where C(x) is the
    capacitance density N(x) * C0 and octants are taken about the domain
    center.  An empty octant with zero target contributes 0.
    """
    grid = density.grid
    lo, hi = grid.domain.bounding_box()
    center = 0.5 * (lo + hi)  # (3,)
    c_density = density.values * abs(density.capacitance) * grid.cell_weights  # (N,)
    errors = np.zeros(8)
    cell_side = grid.cell_centers >= center[None, :]  # (N, 3) bool
    if ens.count:
        part_side = ens.positions >= center[None, :]  # (M, 3) bool
    for oct_id in range(8):
        signs = np.array([(oct_id >> d) & 1 for d in range(3)], dtype=bool)
        target = float(np.sum(c_density[np.all(cell_side == signs[None, :], axis=1)]))
        realized = 0.0
        if ens.count:
            mask = np.all(part_side == signs[None, :], axis=1)
            realized = float(np.sum(np.abs(ens.capacitances[mask])))
        errors[oct_id] = abs(realized - target)
    return errors


def homogenization_check(q_eff: ComplexField, alpha, k: float, quad: SphereQuadrature,
                         m_list: list[int], seeds: list[int], *,
                         solver_tol: float = 1e-8, ka_max: float = 0.1,
                         a_over_d_max: float = 0.1, max_retries: int = 100,
                         reference: FarFieldPattern | None = None,
                         collect=None) -> ConvergenceReport:
    """Run the effective-medium convergence experiment.

    Parameters
    ----------
    q_eff : ComplexField
        Effective potential; must be real-valued and nonnegative (it plays
        the capacitance density C(x), with q0 = 0).
    m_list : list of int
        Target particle counts, typically increasing; M = 0 records a pure
        zero pattern (error 1 against a nonzero reference).
    seeds : list of int
        One sampled cloud per (M, seed).
    reference : FarFieldPattern, optional
        Reuse a previously computed effective-medium pattern (it must match
        ``quad``); by default one forward solve produces it.
    collect : callable, optional
        Called as collect(record, ensemble, pattern) after each run, for
        callers that persist per-run artifacts.

    Returns
    -------
    ConvergenceReport
    """
    if np.any(np.abs(q_eff.values.imag) > 1e-12) or np.any(q_eff.values.real < 0):
        raise ConfigurationError("homogenization check requires real q_eff >= 0 (q0 = 0)")
    if not m_list:
        raise ConfigurationError("m_list must be nonempty")
    if not seeds:
        raise ConfigurationError("seeds must be nonempty")
    grid = q_eff.grid
    alpha_t = tuple(float(c) for c in np.asarray(alpha, dtype=float))
    if reference is None:
        if q_eff.max_abs() > 0.0:
            sol = forward_solve(q_eff, alpha, k, tol=solver_tol)
            reference = scattering_amplitude(sol, quad)
        else:
            reference = FarFieldPattern(quadrature=quad,
                                        values=np.zeros(quad.n_nodes, dtype=complex),
                                        k=k, alpha=alpha_t)
    ref_norm = sphere_norm(reference)
    total_capacitance = float(np.sum(q_eff.values.real * grid.cell_weights))

    records: list[ConvergenceRecord] = []
    medians: dict[int, float] = {}
    octant_medians: dict[int, float] = {}
    cap_by_m: dict[int, float] = {}
    rad_by_m: dict[int, float] = {}
    for m in m_list:
        if m < 0:
            raise ConfigurationError(f"particle counts must be nonnegative, got {m}")
        errs, oct_errs = [], []
        for seed in seeds:
            if m == 0 or total_capacitance == 0.0:
                pattern = FarFieldPattern(
                    quadrature=quad, values=np.zeros(quad.n_nodes, dtype=complex),
                    k=k, alpha=reference.alpha)
                ens = ParticleEnsemble(
                    positions=np.zeros((0, 3)), radii=np.zeros(0),
                    capacitances=np.zeros(0, dtype=complex), k=k, a_max=0.0, d_min=0.0)
                density = DensityField(grid=grid, values=np.zeros(grid.n_cells),
                                       capacitance=1.0)
            else:
                c0 = total_capacitance / m
                cap_by_m[m] = c0
                rad_by_m[m] = c0 / (4.0 * np.pi)
                density = DensityField(grid=grid, values=q_eff.values.real / c0,
                                       capacitance=c0)
                ens = sample_particles(density, seed, k=k, ka_max=ka_max,
                                       a_over_d_max=a_over_d_max, max_retries=max_retries)
                pattern = foldy_lax_solve(ens, alpha, k, quad)
            diff = quad.norm(pattern.values - reference.values)
            err = diff / ref_norm if ref_norm > 0 else diff
            errs.append(err)
            oct_errs.append(float(np.max(octant_capacitance_errors(ens, density))))
            record = ConvergenceRecord(M=m, seed=int(seed),
                                       realized_count=ens.count, error=err,
                                       octant_error=oct_errs[-1])
            records.append(record)
            if collect is not None:
                collect(record, ens, pattern)
        medians[m] = float(np.median(errs))
        octant_medians[m] = float(np.median(oct_errs))
        logger.info("M=%d: median error %.4f (octant capacitance %.3e)",
                    m, medians[m], octant_medians[m])

    ms = sorted(m for m in medians if m > 0)
    monotone = all(medians[m1] >= medians[m2] for m1, m2 in zip(ms, ms[1:]))
    return ConvergenceReport(
        records=tuple(records), medians=medians, octant_medians=octant_medians,
        reference_norm=ref_norm, monotone=monotone,
        capacitance_by_m=cap_by_m, radius_by_m=rad_by_m,
    )
