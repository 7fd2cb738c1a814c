"""Multilinear (cloud-in-cell) particle <-> grid transfer on the torus.

Scatter and gather share one kernel so the discrete drag exchange between
particles and grid is adjoint:  sum_p q_p * gather(g)(x_p)  equals the grid
inner product of g with scatter(q) times the cell volume.  Scatter uses
bincount, which is deterministic for a fixed particle order.  Both loop over
particle chunks small enough that the corner index/weight tables stay cache
resident.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, ScalarField, VectorField

_CHUNK = 8192


def wrap_positions(grid: GridSpec, x: np.ndarray) -> np.ndarray:
    """Map positions into [0, length); handles any finite input."""
    return np.mod(x, grid.length)


def _corner_indices_weights(grid: GridSpec, x: np.ndarray):
    """Base cell indices and fractional offsets for each particle.

    Returns (i0, frac) with shapes (N, dim); i0 in [0, n).
    """
    s = wrap_positions(grid, x) / grid.h
    i0 = np.floor(s).astype(np.int64)
    frac = s - i0
    # guard against s == n from rounding at the upper seam
    np.mod(i0, grid.n, out=i0)
    return i0, frac


def _corner_flats_weights(grid: GridSpec, x: np.ndarray):
    """Flat cell indices and weights for all 2^dim corners of each particle.

    Returns (flat, w) of shape (2^dim, N): row-major flat index of each
    corner node and the matching multilinear weight (weights sum to 1).
    """
    i0, frac = _corner_indices_weights(grid, x)
    n, dim = grid.n, grid.dim
    ncorner = 2**dim
    npart = x.shape[0]
    w = None
    flat = None
    for ax in range(dim):
        stride = n ** (dim - 1 - ax)
        pair_w = np.empty((2, npart))
        pair_w[0] = 1.0 - frac[:, ax]
        pair_w[1] = frac[:, ax]
        pair_f = np.empty((2, npart), dtype=np.int64)
        pair_f[0] = i0[:, ax] * stride
        pair_f[1] = ((i0[:, ax] + 1) % n) * stride
        bits = np.array([(code >> ax) & 1 for code in range(ncorner)])
        if w is None:
            w, flat = pair_w[bits], pair_f[bits]
        else:
            w *= pair_w[bits]
            flat += pair_f[bits]
    return flat, w


def cic_gather(field: ScalarField | VectorField, x: np.ndarray) -> np.ndarray:
    """Interpolate a grid field at particle positions.

    Returns (N,) for scalar fields and (N, dim) for vector fields.
    Exact for fields multilinear within each cell; O(h^2) for smooth fields.
    """
    grid = field.grid
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    npart = x.shape[0]
    vector = isinstance(field, VectorField)
    vals = field.values.reshape((grid.dim, -1) if vector else -1)
    out = np.empty((npart, grid.dim)) if vector else np.empty(npart)
    for start in range(0, npart, _CHUNK):
        sl = slice(start, min(start + _CHUNK, npart))
        flat, w = _corner_flats_weights(grid, x[sl])
        if vector:
            out[sl] = np.einsum("cn,dcn->nd", w, vals[:, flat])
        else:
            out[sl] = np.einsum("cn,cn->n", w, vals[flat])
    return out


def cic_scatter(grid: GridSpec, x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Deposit per-particle charges q as a density array (divided by cell volume).

    The array integrates (cell_volume * sum) back to sum(q) up to rounding.
    q may be (N,) or (N, m); the result has the grid shape (+ trailing axis m).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    q = np.asarray(q, dtype=np.float64)
    multi = q.ndim == 2
    qcols = q if multi else q[:, None]
    ncols = qcols.shape[1]
    ncells = grid.n**grid.dim
    npart = x.shape[0]
    acc = np.zeros((ncells, ncols))
    for start in range(0, npart, _CHUNK):
        sl = slice(start, min(start + _CHUNK, npart))
        flat, w = _corner_flats_weights(grid, x[sl])
        raveled = flat.ravel()
        for col in range(ncols):
            acc[:, col] += np.bincount(raveled, weights=(w * qcols[sl, col]).ravel(),
                                       minlength=ncells)
    acc /= grid.cell_volume
    out = acc.reshape(grid.shape + (ncols,))
    return out if multi else out[..., 0]
