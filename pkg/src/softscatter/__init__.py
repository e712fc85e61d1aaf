"""softscatter: design potentials with prescribed radiation patterns and
realize them as clouds of small acoustically soft particles.

The package covers the full constructive chain: a direct volume-potential
scattering solver with far-field evaluation, the three-step synthesis of a
potential from a target pattern on the unit sphere, the mapping of
potentials to particle densities, hard-core Poisson sampling, a Foldy-Lax
many-body solver, and an effective-medium convergence experiment tying the
two descriptions together.
"""

__version__ = "0.1.0"

from .config import (
    EpsTargets,
    ParticleParams,
    PipelineConfig,
    config_from_dict,
    load_config,
)
from .errors import (
    ConfigurationError,
    PackingError,
    ParseError,
    RealizabilityError,
    SingularArgumentError,
    SingularImpedanceError,
    SoftScatterError,
    SolverFailure,
    SynthesisFailure,
)
from .fields import ComplexField, field_norm, plane_wave, zero_field
from .forward import (
    ScatteringOperator,
    ScatteringSolution,
    amplitude_at,
    born_amplitude,
    forward_solve,
    scattering_amplitude,
)
from .grids import BallDomain, BoxDomain, DomainGrid, build_domain_grid
from .homogenize import ConvergenceReport, homogenization_check, octant_capacitance_errors
from .kernels import apply_volume_kernel, green_kernel, self_cell_weight
from .particles import (
    DensityField,
    ParticleEnsemble,
    foldy_lax_coefficients,
    foldy_lax_solve,
    impedance_capacitance,
    particle_density,
    sample_particles,
    sphere_capacitance,
)
from .spherequad import (
    FarFieldPattern,
    SphereQuadrature,
    build_sphere_quadrature,
    sphere_norm,
    spherical_harmonic,
)
from .synthesis import (
    SynthesisReport,
    field_from_h,
    recover_q,
    run_design,
    synthesize_h,
    verify_pipeline,
)

__all__ = [
    "__version__",
    "BallDomain", "BoxDomain", "DomainGrid", "build_domain_grid",
    "ComplexField", "field_norm", "plane_wave", "zero_field",
    "SphereQuadrature", "FarFieldPattern", "build_sphere_quadrature",
    "sphere_norm", "spherical_harmonic",
    "green_kernel", "self_cell_weight", "apply_volume_kernel",
    "ScatteringOperator", "ScatteringSolution", "forward_solve",
    "scattering_amplitude", "amplitude_at", "born_amplitude",
    "SynthesisReport", "synthesize_h", "field_from_h", "recover_q",
    "verify_pipeline", "run_design",
    "DensityField", "ParticleEnsemble", "sphere_capacitance",
    "impedance_capacitance", "particle_density", "sample_particles",
    "foldy_lax_coefficients", "foldy_lax_solve",
    "ConvergenceReport", "homogenization_check", "octant_capacitance_errors",
    "SoftScatterError", "ConfigurationError", "ParseError",
    "SingularArgumentError", "SolverFailure", "SynthesisFailure",
    "RealizabilityError", "SingularImpedanceError", "PackingError",
    "PipelineConfig", "EpsTargets", "ParticleParams",
    "config_from_dict", "load_config",
]
