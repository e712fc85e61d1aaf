"""Capacitance conventions, density realization, sampling, Foldy-Lax."""

import numpy as np
import pytest
from scipy.spatial import cKDTree

from softscatter import (
    ComplexField,
    ConfigurationError,
    DensityField,
    PackingError,
    ParticleEnsemble,
    RealizabilityError,
    foldy_lax_coefficients,
    foldy_lax_solve,
    impedance_capacitance,
    particle_density,
    sample_particles,
    sphere_capacitance,
    zero_field,
)


def _constant_density(grid, n_per_volume, capacitance):
    vals = np.full(grid.n_cells, float(n_per_volume))
    return DensityField(grid=grid, values=vals, capacitance=capacitance)


def test_sphere_capacitance_convention():
    assert sphere_capacitance(1.0) == pytest.approx(4 * np.pi, rel=1e-15)
    assert sphere_capacitance(0.25) == pytest.approx(np.pi, rel=1e-15)


def test_impedance_absent_or_infinite_keeps_base():
    assert impedance_capacitance(3.0, None, 2.0) == 3.0
    assert impedance_capacitance(3.0, float("inf"), 2.0) == 3.0
    assert impedance_capacitance(3.0, complex(float("inf"), 0.0), 2.0) == 3.0


def test_impedance_unit_case_halves():
    # C0 = |S| = zeta = 1  ->  C = 1 / (1 + 1) = 1/2
    assert impedance_capacitance(1.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_impedance_complex_boundary():
    c0, zeta, area = 2.0, 1.0 + 2.0j, 3.0
    expected = c0 / (1 + c0 / (zeta * area))
    got = impedance_capacitance(c0, zeta, area)
    assert abs(got - expected) < 1e-15


def test_impedance_rejects_dissipation_gain():
    with pytest.raises(ConfigurationError):
        impedance_capacitance(1.0, -1.0, 1.0)
    with pytest.raises(ConfigurationError):
        impedance_capacitance(1.0, -0.5 + 1.0j, 1.0)
    with pytest.raises(ConfigurationError):
        impedance_capacitance(1.0, 0.0, 1.0)


def test_density_from_potential_step(ball_grid_10):
    q = ComplexField(grid=ball_grid_10,
                     values=np.full(ball_grid_10.n_cells, 2.0 + 0j),
                     role="potential_q")
    q0 = zero_field(ball_grid_10, role="background_q0")
    density = particle_density(q, q0, c0=0.5)
    assert np.allclose(density.values, 4.0, atol=1e-15)
    assert density.capacitance == 0.5
    expected_total = 4.0 * np.sum(ball_grid_10.cell_weights)
    assert density.total_expected == pytest.approx(expected_total, rel=1e-12)


def test_density_negative_step_raises_with_cells(ball_grid_10):
    vals = np.zeros(ball_grid_10.n_cells, dtype=complex)
    vals[7] = -1.0
    vals[19] = -2.0
    q = ComplexField(grid=ball_grid_10, values=vals, role="potential_q")
    q0 = zero_field(ball_grid_10, role="background_q0")
    with pytest.raises(RealizabilityError) as err:
        particle_density(q, q0, c0=1.0)
    assert set(err.value.payload["offending_cells"]) >= {7, 19}
    assert "impedance" in str(err.value)


def test_density_complex_step_suggests_impedance(ball_grid_10):
    q = ComplexField(grid=ball_grid_10,
                     values=np.full(ball_grid_10.n_cells, 1.0 + 0.5j),
                     role="potential_q")
    q0 = zero_field(ball_grid_10, role="background_q0")
    with pytest.raises(RealizabilityError) as err:
        particle_density(q, q0, c0=1.0)
    assert "impedance" in str(err.value)


def test_density_complex_capacitance_division(ball_grid_10):
    # complex C0 from an impedance boundary: N = (q - q0)/C0 must stay real
    c0 = impedance_capacitance(1.0, 1.0 + 1.0j, 1.0)
    q_vals = np.full(ball_grid_10.n_cells, 3.0 * c0)
    q = ComplexField(grid=ball_grid_10, values=q_vals, role="potential_q")
    q0 = zero_field(ball_grid_10, role="background_q0")
    density = particle_density(q, q0, c0=c0)
    assert np.allclose(density.values, 3.0, atol=1e-12)


def test_density_field_rejects_negative_values(ball_grid_10):
    vals = np.full(ball_grid_10.n_cells, 1.0)
    vals[0] = -1e-3
    with pytest.raises(ConfigurationError):
        DensityField(grid=ball_grid_10, values=vals, capacitance=1.0)


def test_sampling_is_deterministic(ball_grid_10):
    density = _constant_density(ball_grid_10, 8.0, sphere_capacitance(1e-3))
    ens_a = sample_particles(density, seed=42)
    ens_b = sample_particles(density, seed=42)
    assert ens_a.count == ens_b.count
    assert np.array_equal(ens_a.positions, ens_b.positions)
    ens_c = sample_particles(density, seed=43)
    assert ens_c.count != ens_a.count or not np.array_equal(ens_c.positions, ens_a.positions)


def test_sampling_count_concentrates(ball_grid_10):
    density = _constant_density(ball_grid_10, 120.0, sphere_capacitance(1e-3))
    lam = density.total_expected
    counts = [sample_particles(density, seed=s).count for s in range(5)]
    for c in counts:
        assert abs(c - lam) <= 4.0 * np.sqrt(lam)


def test_sampling_respects_domain_and_hard_core(ball_grid_10):
    a = 2e-3
    density = _constant_density(ball_grid_10, 60.0, sphere_capacitance(a))
    ens = sample_particles(density, seed=3)
    assert ens.count > 10
    radii = np.linalg.norm(ens.positions, axis=1)
    assert np.all(radii <= ball_grid_10.domain.radius)
    tree = cKDTree(ens.positions)
    dists, _ = tree.query(ens.positions, k=2)
    assert np.min(dists[:, 1]) >= ens.d_min
    assert ens.d_min == pytest.approx(a / 0.1, rel=1e-12)
    assert np.all(ens.radii == pytest.approx(a, rel=1e-12))


def test_sampling_explicit_radius_overrides_capacitance(ball_grid_10):
    c_imp = impedance_capacitance(sphere_capacitance(1e-3), 1.0, 4 * np.pi * 1e-6)
    density = _constant_density(ball_grid_10, 8.0, c_imp)
    ens = sample_particles(density, seed=0, radius=1e-3)
    if ens.count:
        assert np.all(ens.radii == pytest.approx(1e-3, rel=1e-12))
        assert np.all(ens.capacitances == c_imp)


def test_sampling_infeasible_density_fails_fast(ball_grid_10):
    # d_min = 0.01 for a = 1e-3, so the cap is 0.3 * 6/(pi d^3) ~ 5.7e5
    density = _constant_density(ball_grid_10, 1e7, sphere_capacitance(1e-3))
    with pytest.raises(PackingError) as err:
        sample_particles(density, seed=0)
    bound = err.value.payload["max_feasible_density"]
    expected = 0.3 * 6.0 / (np.pi * 0.01**3)
    assert bound == pytest.approx(expected, rel=1e-12)


def test_sampling_rejects_large_ka(ball_grid_10):
    density = _constant_density(ball_grid_10, 1.0, sphere_capacitance(0.2))
    with pytest.raises(ConfigurationError):
        sample_particles(density, seed=0, k=1.0)  # k*a = 0.2 > 0.1


def test_single_particle_matches_swave_scattering():
    k, a = 1.0, 0.01
    ens = ParticleEnsemble(
        positions=np.zeros((1, 3)), radii=np.array([a]),
        capacitances=np.array([sphere_capacitance(a)], dtype=complex),
        k=k, a_max=a, d_min=np.inf,
    )
    c = foldy_lax_coefficients(ens, (0.0, 0.0, 1.0), k)
    amplitude = c[0] / (4 * np.pi)
    exact = -np.sin(k * a) * np.exp(-1j * k * a) / k
    assert abs(amplitude - exact) / abs(exact) < 1e-4
    assert abs(amplitude - (-a)) / a < 0.01


def test_single_particle_closed_form_coefficient():
    k, a = 2.0, 0.03
    x = np.array([[0.2, -0.1, 0.4]])
    cap = sphere_capacitance(a)
    ens = ParticleEnsemble(positions=x, radii=np.array([a]),
                           capacitances=np.array([cap], dtype=complex),
                           k=k, a_max=a, d_min=np.inf)
    alpha = np.array([0.0, 1.0, 0.0])
    c = foldy_lax_coefficients(ens, alpha, k)
    g = cap / (1 + 1j * k * cap / (4 * np.pi))
    expected = -g * np.exp(1j * k * x[0] @ alpha)
    assert abs(c[0] - expected) < 1e-15


def test_two_particles_match_explicit_solve():
    k = 1.0
    cap = sphere_capacitance(5e-3)
    pos = np.array([[0.0, 0.0, -0.3], [0.0, 0.0, 0.3]])
    ens = ParticleEnsemble(positions=pos, radii=np.full(2, 5e-3),
                           capacitances=np.full(2, cap, dtype=complex),
                           k=k, a_max=5e-3, d_min=0.6)
    alpha = np.array([0.0, 0.0, 1.0])
    c = foldy_lax_coefficients(ens, alpha, k)

    g = cap / (1 + 1j * k * cap / (4 * np.pi))
    r = 0.6
    green = np.exp(1j * k * r) / (4 * np.pi * r)
    system = np.array([[1.0, g * green], [g * green, 1.0]], dtype=complex)
    rhs = -g * np.exp(1j * k * pos @ alpha)
    expected = np.linalg.solve(system, rhs)
    assert np.max(np.abs(c - expected)) < 1e-15


def test_far_field_from_coefficients(quad_6):
    k = 1.0
    cap = sphere_capacitance(1e-2)
    pos = np.array([[0.1, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, -0.15]])
    ens = ParticleEnsemble(positions=pos, radii=np.full(3, 1e-2),
                           capacitances=np.full(3, cap, dtype=complex),
                           k=k, a_max=1e-2, d_min=0.1)
    alpha = (0.0, 0.0, 1.0)
    pattern = foldy_lax_solve(ens, alpha, k, quad_6)
    c = foldy_lax_coefficients(ens, alpha, k)
    beta = quad_6.nodes[17]
    expected = np.sum(c * np.exp(-1j * k * pos @ beta)) / (4 * np.pi)
    assert abs(pattern.values[17] - expected) < 1e-15


def test_empty_ensemble_scatters_nothing(quad_6):
    ens = ParticleEnsemble(positions=np.zeros((0, 3)), radii=np.zeros(0),
                           capacitances=np.zeros(0, dtype=complex),
                           k=1.0, a_max=0.0, d_min=1.0)
    pattern = foldy_lax_solve(ens, (0.0, 0.0, 1.0), 1.0, quad_6)
    assert np.all(pattern.values == 0)


def test_validate_rejects_overlap():
    ens = ParticleEnsemble(positions=np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1e-4]]),
                           radii=np.full(2, 1e-3),
                           capacitances=np.full(2, 1.0, dtype=complex),
                           k=1.0, a_max=1e-3, d_min=1e-2)
    with pytest.raises(ConfigurationError):
        ens.validate()
