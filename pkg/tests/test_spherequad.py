"""Sphere quadrature exactness and pattern norms."""

import numpy as np
import pytest

from softscatter import (
    ConfigurationError,
    FarFieldPattern,
    build_sphere_quadrature,
    sphere_norm,
    spherical_harmonic,
)

FOUR_PI = 4.0 * np.pi


def test_weights_sum_to_4pi(quad_8):
    assert abs(float(np.sum(quad_8.weights)) - FOUR_PI) < 1e-10


def test_nodes_are_unit_vectors(quad_8):
    norms = np.linalg.norm(quad_8.nodes, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-12


def test_odd_harmonic_integrates_to_zero(quad_8):
    y10 = spherical_harmonic(1, 0, quad_8.nodes)
    assert abs(quad_8.integrate(y10)) < 1e-10


def test_orthonormal_harmonic_norm(quad_8):
    y20 = spherical_harmonic(2, 0, quad_8.nodes)
    assert abs(quad_8.norm(y20) ** 2 - 1.0) < 1e-8


@pytest.mark.parametrize("degree,m", [(0, 0), (1, 1), (3, -2), (5, 0), (7, 4)])
def test_harmonics_orthonormal_up_to_declared_order(quad_8, degree, m):
    # the product rule integrates harmonics exactly up to degree 2*order-1
    y = spherical_harmonic(degree, m, quad_8.nodes)
    assert abs(float(np.sum(quad_8.weights * np.abs(y) ** 2)) - 1.0) < 1e-8


def test_distinct_harmonics_orthogonal(quad_8):
    y11 = spherical_harmonic(1, 1, quad_8.nodes)
    y31 = spherical_harmonic(3, 1, quad_8.nodes)
    inner = float(np.abs(np.sum(quad_8.weights * np.conj(y11) * y31)))
    assert inner < 1e-10


def test_constant_pattern_norm(quad_8):
    p = FarFieldPattern(quadrature=quad_8, values=np.ones(quad_8.n_nodes, complex),
                        k=1.0, alpha=(0, 0, 1))
    assert abs(sphere_norm(p) - np.sqrt(FOUR_PI)) < 1e-10


def test_zero_pattern_norm(quad_8):
    p = FarFieldPattern(quadrature=quad_8, values=np.zeros(quad_8.n_nodes, complex),
                        k=1.0, alpha=(0, 0, 1))
    assert sphere_norm(p) == 0.0


def test_harmonic_pattern_norm_is_one(quad_8):
    vals = spherical_harmonic(1, 0, quad_8.nodes)
    p = FarFieldPattern(quadrature=quad_8, values=vals, k=1.0, alpha=(0, 0, 1))
    assert abs(sphere_norm(p) - 1.0) < 1e-8


def test_norm_absolutely_homogeneous(quad_6):
    rng = np.random.default_rng(3)
    vals = rng.normal(size=quad_6.n_nodes) + 1j * rng.normal(size=quad_6.n_nodes)
    p = FarFieldPattern(quadrature=quad_6, values=vals, k=1.0, alpha=(0, 0, 1))
    c = 2.5 - 1.3j
    scaled = p.with_values(c * vals)
    assert abs(sphere_norm(scaled) - abs(c) * sphere_norm(p)) < 1e-12 * sphere_norm(scaled)


def test_order_floor():
    with pytest.raises(ConfigurationError):
        build_sphere_quadrature(0)


def test_pattern_requires_unit_alpha(quad_6):
    with pytest.raises(ConfigurationError):
        FarFieldPattern(quadrature=quad_6, values=np.zeros(quad_6.n_nodes, complex),
                        k=1.0, alpha=(0, 0, 2))


def test_pattern_requires_matching_length(quad_6):
    with pytest.raises(ConfigurationError):
        FarFieldPattern(quadrature=quad_6, values=np.zeros(3, complex),
                        k=1.0, alpha=(0, 0, 1))
