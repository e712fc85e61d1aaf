"""Shared fixtures: small grids and quadratures reused across test modules."""

import numpy as np
import pytest

from softscatter import (
    BallDomain,
    BoxDomain,
    ComplexField,
    build_domain_grid,
    build_sphere_quadrature,
)


@pytest.fixture(scope="session")
def ball_grid_10():
    return build_domain_grid(BallDomain(radius=1.0), 10)


@pytest.fixture(scope="session")
def ball_grid_12():
    return build_domain_grid(BallDomain(radius=1.0), 12)


@pytest.fixture(scope="session")
def box_grid_8():
    return build_domain_grid(BoxDomain(lo=(-0.5, -0.5, -0.5), hi=(0.5, 0.5, 0.5)), 8)


@pytest.fixture(scope="session")
def quad_6():
    return build_sphere_quadrature(6)


@pytest.fixture(scope="session")
def quad_8():
    return build_sphere_quadrature(8)


def gaussian_bump(grid, amplitude, width=3.0):
    """Smooth radial potential with the given peak amplitude."""
    r2 = np.sum(grid.cell_centers**2, axis=1)
    return ComplexField(grid=grid, values=(amplitude * np.exp(-width * r2)).astype(complex),
                        role="potential_q")
