"""Held-out CDE loss, estimable without knowing the true density.

The squared-error CDE loss expands into

    E_X[ integral f_hat^2(z|X) dz ]  -  2 E_{X,Z}[ f_hat(Z|X) ]  +  const,

and both expectations are replaced by empirical means over a test set. The
first term is trapezoid quadrature of the squared grid values; the second
evaluates the grid estimate at each observed response by multilinear
interpolation. Smaller is better.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .density import DensityEstimate, _lattice_axes


@dataclass
class LossReport:
    loss: float  # term_sq - 2 * term_lik (estimates CDE loss up to a constant)
    term_sq: float  # mean integral of f_hat^2
    term_lik: float  # mean f_hat at the observed responses
    n_test: int
    se: float  # standard error of the per-point loss contributions
    n_outside_hull: int = 0


def interpolate_density(estimate: DensityEstimate, z) -> float:
    """Multilinear interpolation of grid values at z; 0 outside the grid hull."""
    axes, shape = _lattice_axes(np.asarray(estimate.grid, dtype=float))
    values = np.asarray(estimate.values, dtype=float).reshape(shape)
    return _interp(axes, values, np.atleast_1d(np.asarray(z, dtype=float)))


def cde_loss(estimator, X_test, Z_test, grid) -> LossReport:
    """Empirical CDE loss of `estimator` (a query -> DensityEstimate callable).

    Test responses outside the grid hull contribute 0 to the likelihood term
    and are counted in the report rather than silently dropped; the caller is
    expected to supply a grid generously spanning the response range.
    """
    X_test = np.asarray(X_test, dtype=float)
    if X_test.ndim == 1:
        X_test = X_test[:, None]
    Z_test = np.asarray(Z_test, dtype=float)
    if Z_test.ndim == 1:
        Z_test = Z_test[:, None]
    m = X_test.shape[0]
    if m == 0:
        raise ValueError("test set is empty")
    if Z_test.shape[0] != m:
        raise ValueError(f"X_test has {m} rows but Z_test has {Z_test.shape[0]}")

    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    axes, shape = _lattice_axes(grid)
    lo = np.array([ax[0] for ax in axes])
    hi = np.array([ax[-1] for ax in axes])
    outside = np.any((Z_test < lo) | (Z_test > hi), axis=1)
    if outside.any():
        warnings.warn(
            f"{int(outside.sum())} of {m} test responses lie outside the grid hull "
            "and contribute 0 to the likelihood term",
            stacklevel=2,
        )

    sq = np.empty(m)
    lik = np.empty(m)
    for i in range(m):
        est = estimator(X_test[i])
        values = np.asarray(est.values, dtype=float)
        if values.shape[0] != grid.shape[0]:
            raise ValueError("estimator returned values not aligned with the loss grid")
        block = (values**2).reshape(shape)
        for k in range(len(axes) - 1, -1, -1):
            block = np.trapezoid(block, x=axes[k], axis=k)
        sq[i] = block
        lik[i] = 0.0 if outside[i] else _interp(axes, values.reshape(shape), Z_test[i])

    term_sq = float(np.mean(sq))
    term_lik = float(np.mean(lik))
    contrib = sq - 2.0 * lik
    se = float(np.std(contrib, ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return LossReport(
        loss=term_sq - 2.0 * term_lik,
        term_sq=term_sq,
        term_lik=term_lik,
        n_test=m,
        se=se,
        n_outside_hull=int(outside.sum()),
    )


def _interp(axes, block, z):
    """Multilinear interpolation on a lattice; 0 when z leaves the hull."""
    d = len(axes)
    if z.shape[0] != d:
        raise ValueError(f"point has {z.shape[0]} coordinates, grid has {d}")
    idx = []
    frac = []
    for k, ax in enumerate(axes):
        if z[k] < ax[0] or z[k] > ax[-1]:
            return 0.0
        if ax.size == 1:
            idx.append((0, 0))
            frac.append(0.0)
            continue
        i = int(np.clip(np.searchsorted(ax, z[k], side="right") - 1, 0, ax.size - 2))
        idx.append((i, i + 1))
        frac.append((z[k] - ax[i]) / (ax[i + 1] - ax[i]))
    out = 0.0
    for corner in range(1 << d):
        weight = 1.0
        pos = []
        for k in range(d):
            hi_side = (corner >> k) & 1
            weight *= frac[k] if hi_side else 1.0 - frac[k]
            pos.append(idx[k][hi_side])
        if weight:
            out += weight * float(block[tuple(pos)])
    return out
