"""Quadrature on the unit sphere and far-field pattern containers.

The rule is a product of Gauss-Legendre in cos(theta) (``order`` nodes) and
a uniform midpoint rule in phi (``2*order`` nodes), which integrates
spherical harmonics exactly up to degree 2*order - 1.  Weights are positive
and sum to 4*pi.  Patterns A(beta) are stored as complex samples at the
quadrature nodes together with the wavenumber k and the incident direction
alpha they belong to; the L2(S^2) norm used throughout the package is the
quadrature norm sqrt(sum_j w_j |A(beta_j)|^2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sph_harm_y

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

__all__ = [
    "SphereQuadrature",
    "FarFieldPattern",
    "build_sphere_quadrature",
    "sphere_norm",
    "spherical_harmonic",
]


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and weights for integration over S^2.

    Attributes
    ----------
    nodes : ndarray
        Unit direction vectors, shape (Q, 3).
    weights : ndarray
        Positive weights in steradians, shape (Q,); sum to 4*pi.
    order : int
        Polar Gauss-Legendre order the rule was built with.
    """

    nodes: np.ndarray = field(repr=False)    # (Q, 3)
    weights: np.ndarray = field(repr=False)  # (Q,)
    order: int = 0

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def validate(self) -> None:
        norms = np.linalg.norm(self.nodes, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-12):
            raise ConfigurationError("quadrature nodes must be unit vectors")
        if not np.all(self.weights > 0):
            raise ConfigurationError("quadrature weights must be positive")
        if abs(float(self.weights.sum()) - 4.0 * np.pi) > 1e-10:
            raise ConfigurationError("quadrature weights must sum to 4*pi")

    def integrate(self, values: np.ndarray) -> complex:
        """Integral of samples at the nodes: sum_j w_j v_j."""
        return complex(np.sum(self.weights * np.asarray(values)))

    def norm(self, values: np.ndarray) -> float:
        """Quadrature L2(S^2) norm of samples at the nodes."""
        v = np.asarray(values)
        return float(np.sqrt(np.sum(self.weights * np.abs(v) ** 2)))


def build_sphere_quadrature(order: int) -> SphereQuadrature:
    """Build the product Gauss-Legendre x uniform-phi rule on S^2.

    Parameters
    ----------
    order : int
        Number of polar nodes; the rule uses 2*order azimuthal nodes, so
        Q = 2*order^2 total.  Must be >= 1.
    """
    if order < 1:
        raise ConfigurationError(f"quadrature order must be >= 1, got {order}")
    t, wt = np.polynomial.legendre.leggauss(order)  # nodes in cos(theta)
    n_phi = 2 * order
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    sin_t = np.sqrt(1.0 - t**2)
    # Outer product of polar and azimuthal rules; polar index varies slowest.
    cos_p, sin_p = np.cos(phi), np.sin(phi)
    nodes = np.empty((order * n_phi, 3))
    nodes[:, 0] = np.outer(sin_t, cos_p).ravel()
    nodes[:, 1] = np.outer(sin_t, sin_p).ravel()
    nodes[:, 2] = np.repeat(t, n_phi)
    weights = np.repeat(wt, n_phi) * (2.0 * np.pi / n_phi)
    quad = SphereQuadrature(nodes=nodes, weights=weights, order=order)
    quad.validate()
    return quad


@dataclass(frozen=True)
class FarFieldPattern:
    """Complex far-field samples A(beta_j) at fixed k and incident alpha."""

    quadrature: SphereQuadrature
    values: np.ndarray = field(repr=False)  # (Q,) complex
    k: float = 1.0
    alpha: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.values.shape != (self.quadrature.n_nodes,):
            raise ConfigurationError("pattern values must match quadrature nodes")
        if not self.k > 0:
            raise ConfigurationError(f"wavenumber must be positive, got {self.k}")
        a = np.asarray(self.alpha, dtype=float)
        if abs(np.linalg.norm(a) - 1.0) > 1e-9:
            raise ConfigurationError(f"incident direction must be a unit vector, got {self.alpha}")

    def with_values(self, values: np.ndarray) -> "FarFieldPattern":
        return FarFieldPattern(quadrature=self.quadrature,
                               values=np.asarray(values, dtype=complex),
                               k=self.k, alpha=self.alpha)


def sphere_norm(pattern: FarFieldPattern) -> float:
    """L2(S^2) norm of a far-field pattern under its own quadrature."""
    return pattern.quadrature.norm(pattern.values)


def spherical_harmonic(degree: int, m: int, directions: np.ndarray) -> np.ndarray:
    """Orthonormal spherical harmonic Y_degree^m at unit vectors.

    Uses the convention with unit L2(S^2) norm, so e.g. Y_0^0 = 1/sqrt(4*pi).

    Parameters
    ----------
    degree, m : int
        Harmonic degree and order, |m| <= degree.
    directions : ndarray
        Unit vectors, shape (Q, 3).

    Returns
    -------
    ndarray
        Complex samples, shape (Q,).
    """
    d = np.asarray(directions, dtype=float)
    theta = np.arccos(np.clip(d[:, 2], -1.0, 1.0))
    phi = np.arctan2(d[:, 1], d[:, 0])
    return sph_harm_y(degree, m, theta, phi)
