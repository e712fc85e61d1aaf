"""Outgoing free-space kernel and its cell-collocation discretization.

The volume integral operator

    (K v)(x) = int_D G(x, y) v(y) dy,     G(x, y) = e^{ik|x-y|} / (4 pi |x-y|),

is discretized by collocation at cell centers: off-diagonal entries are
G(x_i, x_j) w_j, and the diagonal replaces the singular self-interaction by
the analytic integral of G over the ball of volume w_i centered at x_i,

    s(w, k) = int_{|y|<rho} G(0, y) dy = (e^{ik rho}(1 - ik rho) - 1) / k^2,
    rho = (3 w / (4 pi))^{1/3},

which follows from int_0^rho r e^{ikr} dr evaluated in closed form.  For
k*rho < 1/2 the closed form loses digits to cancellation and the power
series rho^2 sum_{m>=0} (m+1)/(m+2)! (ik rho)^m is used instead.

Dense assembly is chunked so that the system matrix for ~7000 cells (the
largest size exercised here, ~0.8 GB complex128) is written exactly once,
in Fortran order, ready for an in-place LU factorization.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .errors import ConfigurationError, SingularArgumentError
from .grids import DomainGrid

logger = logging.getLogger(__name__)

__all__ = ["green_kernel", "self_cell_weight", "apply_volume_kernel", "assemble_system"]

# Rows per assembly/apply chunk; 512 rows x 7238 cols of complex128 is ~57 MB.
_CHUNK = 512

# Below this value of k*rho the closed form for the self term is evaluated
# by series; 18 terms give full double precision at the crossover.
_SELF_SERIES_CUTOFF = 0.5
_SELF_SERIES_TERMS = 18


def green_kernel(x: np.ndarray, y: np.ndarray, k: float) -> np.ndarray | complex:
    """Outgoing Helmholtz kernel e^{ik|x-y|}/(4 pi |x-y|).

    Parameters
    ----------
    x, y : ndarray
        Points of shape (3,) or broadcastable arrays of shape (..., 3).
    k : float
        Wavenumber, > 0.

    Raises
    ------
    SingularArgumentError
        If any point pair coincides; the caller must use
        :func:`self_cell_weight` for the self-interaction instead.
    """
    dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.sqrt(np.sum(dx * dx, axis=-1))
    if np.any(r == 0.0):
        raise SingularArgumentError("green_kernel evaluated at coincident points")
    out = np.exp(1j * k * r) / (4.0 * np.pi * r)
    if out.ndim == 0:
        return complex(out)
    return out


def self_cell_weight(cell_volume: float, k: float) -> complex:
    """Integral of the kernel over the equal-volume ball around its center.

    Equals (e^{ik rho}(1 - ik rho) - 1)/k^2 with rho = (3V/(4 pi))^{1/3};
    tends to rho^2/2 as k -> 0 and is O(rho^2) for small cells.
    """
    if cell_volume <= 0:
        raise ConfigurationError(f"cell volume must be positive, got {cell_volume}")
    rho = (3.0 * cell_volume / (4.0 * np.pi)) ** (1.0 / 3.0)
    z = 1j * k * rho
    if abs(z) < _SELF_SERIES_CUTOFF:
        # rho^2 * sum_{m>=0} (m+1)/(m+2)! * z^m, the Taylor form of the
        # closed expression below; avoids cancellation for small k*rho.
        acc = 0.0 + 0.0j
        term = 1.0 + 0.0j  # z^m
        for m in range(_SELF_SERIES_TERMS):
            acc += (m + 1) / math.factorial(m + 2) * term
            term *= z
        return complex(rho**2 * acc)
    return complex((np.exp(z) * (1.0 - z) - 1.0) / k**2)


def apply_volume_kernel(grid: DomainGrid, k: float, values: np.ndarray) -> np.ndarray:
    """Matrix-free product (K v)_i = sum_j K_ij v_j with the discrete kernel.

    Off-diagonal K_ij = G(x_i, x_j) w_j; diagonal K_ii = self_cell_weight(w_i).
    Runs in O(N^2) time but O(N) extra memory (chunked), which keeps residual
    checks affordable next to an already-factored dense system.
    """
    centers = grid.cell_centers  # (N, 3)
    n = grid.n_cells
    v = np.asarray(values, dtype=complex)
    weighted = grid.cell_weights * v  # (N,)
    out = np.empty(n, dtype=complex)
    for i0 in range(0, n, _CHUNK):
        i1 = min(i0 + _CHUNK, n)
        diff = centers[i0:i1, None, :] - centers[None, :, :]  # (B, N, 3)
        r = np.sqrt(np.einsum("bnd,bnd->bn", diff, diff))
        np.fill_diagonal(r[:, i0:i1], 1.0)  # placeholder, overwritten below
        block = np.exp(1j * k * r)
        block /= 4.0 * np.pi * r
        out[i0:i1] = block @ weighted
        # Replace the bogus self contribution by the analytic cell integral.
        rows = np.arange(i0, i1)
        self_terms = np.array([self_cell_weight(w, k) for w in grid.cell_weights[rows]])
        g_fake = np.exp(1j * k) / (4.0 * np.pi)  # kernel at the placeholder r=1
        out[i0:i1] += (self_terms - g_fake * grid.cell_weights[rows]) * v[rows]
    return out


def assemble_system(grid: DomainGrid, k: float, coeff: np.ndarray) -> np.ndarray:
    """Dense system matrix A = I + K diag(coeff), Fortran-ordered.

    This is the collocation matrix of u + K(coeff * u): A[i, j] =
    delta_ij + K_ij coeff_j.  Assembled chunk by chunk straight into the
    output array so peak memory stays at one N x N complex matrix; callers
    hand the result to an in-place LU factorization.
    """
    centers = grid.cell_centers
    n = grid.n_cells
    c = np.asarray(coeff, dtype=complex)
    if c.shape != (n,):
        raise ConfigurationError(f"coefficient has shape {c.shape}, expected ({n},)")
    col_scale = grid.cell_weights * c  # (N,)
    a = np.empty((n, n), dtype=complex, order="F")
    for i0 in range(0, n, _CHUNK):
        i1 = min(i0 + _CHUNK, n)
        diff = centers[i0:i1, None, :] - centers[None, :, :]
        r = np.sqrt(np.einsum("bnd,bnd->bn", diff, diff))
        np.fill_diagonal(r[:, i0:i1], 1.0)
        block = np.exp(1j * k * r)
        block /= 4.0 * np.pi * r
        block *= col_scale[None, :]
        a[i0:i1, :] = block
    idx = np.arange(n)
    self_terms = np.array([self_cell_weight(w, k) for w in grid.cell_weights])
    a[idx, idx] = 1.0 + self_terms * c
    logger.debug("assembled %dx%d system (%.2f GB)", n, n, a.nbytes / 1e9)
    return a
