"""Domain discretization invariants."""

import numpy as np
import pytest

from softscatter import BallDomain, BoxDomain, ConfigurationError, build_domain_grid

BALL_VOLUME = 4.0 / 3.0 * np.pi


def test_unit_box_resolution_2_is_exact():
    grid = build_domain_grid(BoxDomain(lo=(0, 0, 0), hi=(1, 1, 1)), 2)
    assert grid.n_cells == 8
    assert np.allclose(grid.cell_weights, 0.125)
    assert abs(float(np.sum(grid.cell_weights)) - 1.0) < 1e-15


def test_box_volume_exact_at_any_resolution():
    grid = build_domain_grid(BoxDomain(lo=(-1, 0, 2), hi=(1, 3, 2.5)), 7)
    assert abs(float(np.sum(grid.cell_weights)) - 6.0 * 0.5) < 1e-12


def test_ball_volume_within_2_percent_at_32():
    grid = build_domain_grid(BallDomain(radius=1.0), 32)
    covered = float(np.sum(grid.cell_weights))
    assert abs(covered - BALL_VOLUME) < 0.02 * BALL_VOLUME


def test_ball_refinement_improves_volume():
    errs = []
    for res in (16, 24, 32, 48):
        grid = build_domain_grid(BallDomain(radius=1.0), res)
        errs.append(abs(float(np.sum(grid.cell_weights)) - BALL_VOLUME))
    assert errs[0] > errs[-1]
    assert all(e < 0.02 * BALL_VOLUME for e in errs)


def test_all_centers_inside_domain(ball_grid_10):
    r = np.linalg.norm(ball_grid_10.cell_centers, axis=1)
    assert np.all(r <= 1.0)


def test_cell_weights_positive_and_uniform(ball_grid_10):
    w = ball_grid_10.cell_weights
    assert np.all(w > 0)
    assert np.allclose(w, w[0])  # uniform lattice


def test_negative_radius_rejected():
    with pytest.raises(ConfigurationError):
        BallDomain(radius=-1.0)


def test_degenerate_box_rejected():
    with pytest.raises(ConfigurationError):
        BoxDomain(lo=(0, 0, 0), hi=(1, 0, 1))


def test_resolution_floor():
    with pytest.raises(ConfigurationError):
        build_domain_grid(BallDomain(radius=1.0), 1)


def test_off_center_ball():
    grid = build_domain_grid(BallDomain(center=(2.0, -1.0, 0.5), radius=0.5), 20)
    d = np.linalg.norm(grid.cell_centers - np.array([2.0, -1.0, 0.5]), axis=1)
    assert np.all(d <= 0.5)
    assert abs(float(np.sum(grid.cell_weights)) - BALL_VOLUME * 0.125) < 0.02 * BALL_VOLUME * 0.125
