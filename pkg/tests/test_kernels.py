"""Kernel values, the self-cell integral, and discrete operator consistency."""

import numpy as np
import pytest
from scipy.integrate import quad as sp_quad

from softscatter import (
    BallDomain,
    ConfigurationError,
    SingularArgumentError,
    apply_volume_kernel,
    build_domain_grid,
    green_kernel,
    self_cell_weight,
)
from softscatter.kernels import assemble_system


def test_kernel_at_distance_one_k_pi():
    # e^{i pi} = -1
    val = green_kernel(np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), np.pi)
    assert abs(val - (-1.0 / (4.0 * np.pi))) < 1e-15


def test_kernel_at_distance_2pi_k_one():
    # e^{2 pi i} = 1
    val = green_kernel(np.zeros(3), np.array([0.0, 2.0 * np.pi, 0.0]), 1.0)
    assert abs(val - 1.0 / (8.0 * np.pi**2)) < 1e-15


def test_kernel_coincident_points_rejected():
    with pytest.raises(SingularArgumentError):
        green_kernel(np.ones(3), np.ones(3), 1.0)


def test_kernel_broadcasts():
    x = np.zeros((4, 3))
    y = np.array([[1.0, 0, 0], [0, 2.0, 0], [0, 0, 3.0], [1.0, 1.0, 1.0]])
    vals = green_kernel(x, y, 0.7)
    assert vals.shape == (4,)
    assert abs(vals[0] - np.exp(0.7j) / (4 * np.pi)) < 1e-15


def test_self_weight_static_limit():
    # k -> 0 reduces the integral to int_0^rho r dr = rho^2 / 2
    vol = 4.0 / 3.0 * np.pi * 0.05**3
    val = self_cell_weight(vol, 1e-12)
    assert abs(val - 0.05**2 / 2.0) < 1e-12


def test_self_weight_matches_radial_quadrature():
    # independent oracle: numeric integration of the kernel over the ball,
    # int_B G dV = int_0^rho r e^{ikr} dr
    rho, k = 0.1, 1.0
    vol = 4.0 / 3.0 * np.pi * rho**3
    re, _ = sp_quad(lambda r: r * np.cos(k * r), 0.0, rho, epsabs=1e-14)
    im, _ = sp_quad(lambda r: r * np.sin(k * r), 0.0, rho, epsabs=1e-14)
    assert abs(self_cell_weight(vol, k) - (re + 1j * im)) < 1e-10


def test_self_weight_matches_radial_quadrature_large_krho():
    rho, k = 0.8, 2.0  # k*rho = 1.6, closed-form branch
    vol = 4.0 / 3.0 * np.pi * rho**3
    re, _ = sp_quad(lambda r: r * np.cos(k * r), 0.0, rho, epsabs=1e-14)
    im, _ = sp_quad(lambda r: r * np.sin(k * r), 0.0, rho, epsabs=1e-14)
    assert abs(self_cell_weight(vol, k) - (re + 1j * im)) < 1e-10


def test_self_weight_branches_agree_at_crossover():
    k = 1.0
    for krho in (0.49, 0.51):
        rho = krho / k
        vol = 4.0 / 3.0 * np.pi * rho**3
        closed = (np.exp(1j * krho) * (1.0 - 1j * krho) - 1.0) / k**2
        assert abs(self_cell_weight(vol, k) - closed) < 1e-14


def test_self_weight_order_rho_squared():
    k = 1.0
    vals = []
    for rho in (1e-2, 1e-3, 1e-4):
        vol = 4.0 / 3.0 * np.pi * rho**3
        vals.append(abs(self_cell_weight(vol, k)) / rho**2)
    # |s| / rho^2 -> 1/2
    assert abs(vals[-1] - 0.5) < 1e-6
    assert abs(vals[0] - 0.5) < 1e-3


def test_self_weight_rejects_nonpositive_volume():
    with pytest.raises(ConfigurationError):
        self_cell_weight(0.0, 1.0)


def test_apply_matches_assembled_matrix():
    grid = build_domain_grid(BallDomain(radius=1.0), 6)
    k = 1.3
    rng = np.random.default_rng(11)
    v = rng.normal(size=grid.n_cells) + 1j * rng.normal(size=grid.n_cells)
    # A = I + K diag(1)  =>  K v = (A - I) v
    a = assemble_system(grid, k, np.ones(grid.n_cells, complex))
    dense = a @ v - v
    free = apply_volume_kernel(grid, k, v)
    assert np.max(np.abs(dense - free)) < 1e-12 * np.max(np.abs(dense))


def test_assembled_diagonal_is_self_term():
    grid = build_domain_grid(BallDomain(radius=1.0), 6)
    k = 0.9
    coeff = np.full(grid.n_cells, 2.0 + 0.5j)
    a = assemble_system(grid, k, coeff)
    expected = 1.0 + self_cell_weight(float(grid.cell_weights[0]), k) * coeff[0]
    assert abs(a[3, 3] - expected) < 1e-15


def test_assembled_offdiagonal_entry():
    grid = build_domain_grid(BallDomain(radius=1.0), 6)
    k = 0.9
    coeff = np.ones(grid.n_cells, complex)
    a = assemble_system(grid, k, coeff)
    i, j = 0, grid.n_cells - 1
    g = green_kernel(grid.cell_centers[i], grid.cell_centers[j], k)
    assert abs(a[i, j] - g * grid.cell_weights[j]) < 1e-15
