"""Orchestration of the four subcommand-level operations.

Each function here is the computational body of one endpoint/subcommand:
it takes a validated :class:`PipelineConfig` plus in-memory inputs and
returns in-memory artifacts and a JSON-safe report that echoes the full
configuration.  File and HTTP plumbing live elsewhere (storage, service,
cli); nothing in this module touches the filesystem.

BLAS thread counts are pinned to ``config.threads`` for the duration of
each operation, which both respects the resource contract and keeps
reduction order — and therefore artifact bytes — reproducible.
"""

from __future__ import annotations

import logging

import numpy as np
from threadpoolctl import threadpool_limits

from .config import PipelineConfig
from .errors import ConfigurationError
from .fields import ComplexField, zero_field
from .forward import amplitude_at, born_amplitude, forward_solve, scattering_amplitude
from .homogenize import homogenization_check
from .particles import DensityField, impedance_capacitance, particle_density
from .spherequad import FarFieldPattern, sphere_norm
from .storage import sanitize_json
from .synthesis import run_design as _run_design_steps

logger = logging.getLogger(__name__)

__all__ = ["run_forward", "run_design", "run_simulate", "run_validate"]


def _check_grid_matches(config: PipelineConfig, field: ComplexField | DensityField,
                        what: str) -> None:
    grid = field.grid
    expected = config.domain.to_domain()
    if grid.domain != expected or grid.resolution != config.resolution:
        raise ConfigurationError(
            f"{what} is sampled on {grid.domain} at resolution {grid.resolution}, "
            f"but the config declares {expected} at resolution {config.resolution}"
        )


def _is_effectively_real(values: np.ndarray, rel: float = 1e-12) -> bool:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0:
        return True
    return float(np.max(np.abs(values.imag))) <= rel * scale


def run_forward(config: PipelineConfig, q: ComplexField) -> tuple[FarFieldPattern, dict]:
    """Solve the direct problem for a stored potential; report diagnostics.

    The report always carries the Born comparison (an O(||q||) bound on
    nonlinearity) and, for real potentials, the optical-theorem defect.
    """
    _check_grid_matches(config, q, "the potential")
    quad = config.build_quadrature()
    with threadpool_limits(limits=config.threads):
        if q.max_abs() == 0.0:
            pattern = FarFieldPattern(quadrature=quad,
                                      values=np.zeros(quad.n_nodes, dtype=complex),
                                      k=config.k, alpha=config.alpha)
            residual = 0.0
            born = pattern
            forward_amp = 0.0 + 0.0j
        else:
            sol = forward_solve(q, config.alpha, config.k, tol=config.solver_tol)
            pattern = scattering_amplitude(sol, quad)
            residual = sol.residual
            born = born_amplitude(q, config.alpha, config.k, quad)
            forward_amp = complex(amplitude_at(sol, np.asarray(config.alpha))[0])

    born_norm = sphere_norm(born)
    diff_norm = quad.norm(pattern.values - born.values)
    born_rel = diff_norm / born_norm if born_norm > 0 else 0.0

    optical = {"applicable": False}
    if _is_effectively_real(q.values):
        lhs = forward_amp.imag
        rhs = (config.k / (4.0 * np.pi)) * sphere_norm(pattern) ** 2
        denom = max(abs(lhs), np.finfo(float).tiny)
        optical = {
            "applicable": True,
            "defect_rel": abs(lhs - rhs) / denom,
            "forward_imag": lhs,
            "flux_integral": rhs,
        }

    report = {
        "born_relative_diff": born_rel,
        "config": config.echo(),
        "optical_theorem": optical,
        "pattern_norm": sphere_norm(pattern),
        "residual": residual,
    }
    return pattern, sanitize_json(report)


def _design_density(config: PipelineConfig, q: ComplexField) -> tuple[DensityField, dict]:
    """Map a designed potential to a particle density using the config."""
    params = config.particles
    c0 = params.base_capacitance
    zeta = params.zeta_value
    capacitance = complex(c0)
    if zeta is not None:
        surface = 4.0 * np.pi * params.radius**2
        capacitance = impedance_capacitance(c0, zeta, surface)
    density = particle_density(q, zero_field(q.grid, "background_q0"), capacitance)
    summary = {
        "capacitance": capacitance,
        "max_density": float(np.max(density.values)) if density.values.size else 0.0,
        "radius": params.radius,
        "total_expected": density.total_expected,
    }
    return density, summary


def run_design(config: PipelineConfig, target: FarFieldPattern) -> dict:
    """Run synthesis Steps 1-3 for a target pattern; optionally a density.

    Returns a dict with keys h, u, q (ComplexFields), density (DensityField
    or None), and report (JSON-safe).  The report's ``within_eps`` flag is
    what the CLI turns into a nonzero exit status.
    """
    if abs(target.k - config.k) > 1e-12 * max(1.0, config.k):
        raise ConfigurationError(
            f"target pattern has k = {target.k}, config declares k = {config.k}"
        )
    if np.linalg.norm(np.asarray(target.alpha) - np.asarray(config.alpha)) > 1e-9:
        raise ConfigurationError(
            f"target pattern has alpha = {target.alpha}, config declares {config.alpha}"
        )
    grid = config.build_grid()
    with threadpool_limits(limits=config.threads):
        h, u, q, synth = _run_design_steps(
            target, grid,
            eps1_target=config.eps_targets.eps1,
            delta_rel=config.delta,
            lambda_ladder=config.lambda_ladder,
            solver_tol=config.solver_tol,
        )
        density = None
        density_summary = None
        if config.particles is not None:
            density, density_summary = _design_density(config, q)

    within = bool(synth.final_error <= config.eps_targets.eps)
    report = {
        "bound": synth.bound,
        "bound_satisfied": synth.bound_satisfied,
        "clip_fraction": synth.clip_fraction,
        "config": config.echo(),
        "consistency_gap": synth.consistency_gap,
        "density": density_summary,
        "eps1_achieved": synth.eps1_achieved,
        "eps2_achieved": synth.eps2_achieved,
        "final_error": synth.final_error,
        "regularization_used": synth.regularization_used,
        "residual": synth.residual,
        "target_norm": synth.target_norm,
        "within_eps": within,
    }
    if not within:
        logger.warning("design final error %.3e exceeds the eps budget %.3e",
                       synth.final_error, config.eps_targets.eps)
    return {"h": h, "u": u, "q": q, "density": density, "report": sanitize_json(report)}


def run_simulate(config: PipelineConfig, q: ComplexField | None = None,
                 density: DensityField | None = None) -> dict:
    """Effective-medium convergence experiment for a potential or density.

    Exactly one of ``q`` and ``density`` must be given.  A density input is
    converted to its effective potential q_eff = N(x) * C0 (requiring a real
    capacitance), after which both paths run the same (M, seed) sweep; per-M
    capacitances C0(M) = int C dx / M follow from the experiment design, so
    the stored density's own C0 only fixes q_eff.

    Returns ensembles, patterns (with metadata tuples (M, seed)), the
    effective-medium reference pattern, and the convergence report.
    """
    if (q is None) == (density is None):
        raise ConfigurationError("exactly one of a potential or a density input is required")
    if density is not None:
        _check_grid_matches(config, density, "the density")
        cap = complex(density.capacitance)
        if abs(cap.imag) > 1e-12 * max(abs(cap), 1.0):
            raise ConfigurationError(
                "the convergence experiment requires a real capacitance; "
                f"the density carries C0 = {cap}"
            )
        q = ComplexField(grid=density.grid,
                         values=density.values * cap.real,
                         role="potential_q")
    else:
        _check_grid_matches(config, q, "the potential")
        if not _is_effectively_real(q.values) or np.any(q.values.real < 0):
            raise ConfigurationError(
                "the convergence experiment requires a real potential with q >= 0 "
                "(it plays the capacitance density C(x) with q0 = 0)"
            )
        q = q.with_values(np.maximum(q.values.real, 0.0).astype(complex))

    params = config.particles
    ka_max = params.ka_max if params is not None else 0.1
    a_over_d = params.a_over_d_max if params is not None else 0.1
    retries = params.max_retries if params is not None else 100

    runs = []

    def collect(record, ens, pattern):
        runs.append({"M": record.M, "seed": record.seed, "ensemble": ens,
                     "pattern": pattern})

    with threadpool_limits(limits=config.threads):
        reference = None
        if q.max_abs() > 0.0:
            sol = forward_solve(q, config.alpha, config.k, tol=config.solver_tol)
            reference = scattering_amplitude(sol, config.build_quadrature())
        report = homogenization_check(
            q, config.alpha, config.k, config.build_quadrature(),
            config.M_list, config.seeds,
            solver_tol=config.solver_tol, ka_max=ka_max, a_over_d_max=a_over_d,
            max_retries=retries, reference=reference, collect=collect,
        )

    json_report = {
        "config": config.echo(),
        "medians": {str(m): v for m, v in sorted(report.medians.items())},
        "monotone_in_M": report.monotone,
        "octant_capacitance_medians": {str(m): v for m, v in
                                       sorted(report.octant_medians.items())},
        "per_particle_capacitance": {str(m): v for m, v in
                                     sorted(report.capacitance_by_m.items())},
        "per_particle_radius": {str(m): v for m, v in sorted(report.radius_by_m.items())},
        "records": [
            {"M": r.M, "error": r.error, "octant_capacitance_error": r.octant_error,
             "realized_count": r.realized_count, "seed": r.seed}
            for r in report.records
        ],
        "reference_norm": report.reference_norm,
    }
    return {"runs": runs, "reference": reference, "report": sanitize_json(json_report)}


def run_validate(config: PipelineConfig) -> dict:
    """Run the invariant battery at the configured scale."""
    from .validation import run_battery  # local import to avoid a cycle

    with threadpool_limits(limits=config.threads):
        return run_battery(config)
