"""Weighted kernel density estimation and bandwidth selection.

The kernel is a Gaussian (diagonal product kernel in the multivariate case),
so every estimate integrates to one up to grid truncation. Bandwidths are
either fixed per dimension or chosen per query by a weighted Silverman rule
driven by the effective sample size of the weight vector.
"""

from dataclasses import dataclass, field

import numpy as np

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class BandwidthSpec:
    """Bandwidth request: mode 'fixed' with a positive scalar / per-dim vector,
    or mode 'adaptive' for the per-query weighted Silverman rule."""

    mode: str = "fixed"
    value: object = None

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ValueError(f"bandwidth mode must be 'fixed' or 'adaptive', got {self.mode!r}")
        if self.mode == "fixed":
            v = np.atleast_1d(np.asarray(self.value, dtype=float))
            if v.size == 0 or np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ValueError("fixed bandwidth must be strictly positive and finite")

    @classmethod
    def fixed(cls, value):
        return cls("fixed", value)

    @classmethod
    def adaptive(cls):
        return cls("adaptive", None)


@dataclass
class DensityEstimate:
    """A conditional density evaluated on a response grid.

    grid : (G, d) response points
    values : (G,) nonnegative density values aligned with the grid
    bandwidth_used : (d,) kernel bandwidth that produced the values
    bandwidth_fallback : True when the adaptive rule had to fall back to a
        range-based bandwidth (degenerate weighted variance).
    """

    grid: np.ndarray
    values: np.ndarray
    bandwidth_used: np.ndarray
    bandwidth_fallback: bool = field(default=False)


def weighted_kde(Z, w, grid, h) -> DensityEstimate:
    """Weighted Gaussian KDE: values[g] = sum_i w_i * prod_k N(grid[g,k]; Z[i,k], h_k).

    `w` is assumed normalized (it is the forest weight vector); zero-weight
    training points are skipped. `h` is a positive scalar or per-dim vector.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    d = Z.shape[1]
    if grid.shape[1] != d:
        raise ValueError(f"grid dimension {grid.shape[1]} != response dimension {d}")
    h = np.broadcast_to(np.atleast_1d(np.asarray(h, dtype=float)), (d,))
    if np.any(h <= 0) or not np.all(np.isfinite(h)):
        raise ValueError("bandwidth must be strictly positive and finite")
    w = np.asarray(w, dtype=float)

    live = w > 0
    values = np.zeros(grid.shape[0])
    if live.any():
        norm = _INV_SQRT_2PI**d / np.prod(h)
        u = (grid[:, None, :] - Z[None, live, :]) / h
        values = norm * (np.exp(-0.5 * np.einsum("gik,gik->gi", u, u)) @ w[live])
    return DensityEstimate(grid=grid, values=values, bandwidth_used=np.array(h, dtype=float))


def adaptive_bandwidth(Z, w):
    """Weighted Silverman bandwidth, h_k = 1.06 * sigma_k * n_eff**(-1/5).

    sigma_k is the w-weighted standard deviation of response column k and
    n_eff = 1 / sum(w_i^2) the effective sample size. When the weighted
    variance is degenerate (n_eff < 2 or sigma_k = 0) the rule falls back to
    h_k = 1.06 * range_k * n_eff**(-1/5) / 4 over the full response column.

    Returns ``(h, used_fallback)``.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    w = np.asarray(w, dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("weight vector has no positive mass")
    w = w / total
    n_eff = 1.0 / np.sum(w**2)
    mu = w @ Z
    sigma = np.sqrt(w @ (Z - mu) ** 2)
    factor = 1.06 * n_eff ** (-0.2)

    h = factor * sigma
    degenerate = (sigma <= 0) | (n_eff < 2)
    used_fallback = bool(np.any(degenerate))
    if used_fallback:
        span = Z.max(axis=0) - Z.min(axis=0)
        h = np.where(degenerate, factor * span / 4.0, h)
    if np.any(h <= 0):
        raise ValueError("adaptive bandwidth degenerate: response has zero spread")
    return h, used_fallback


def grid_integral(values, grid) -> float:
    """Trapezoid quadrature of grid-sampled values.

    1-D grids must be strictly increasing; multivariate grids must be regular
    lattices (outer products of increasing per-dim axes in row-major order,
    last dimension fastest), integrated dimension by dimension.
    """
    axes, shape = _lattice_axes(np.asarray(grid, dtype=float))
    values = np.asarray(values, dtype=float)
    if values.shape != (int(np.prod(shape)),):
        raise ValueError(f"values length {values.shape} does not match grid size {shape}")
    block = values.reshape(shape)
    for k in range(len(axes) - 1, -1, -1):
        block = np.trapezoid(block, x=axes[k], axis=k)
    return float(block)


def _lattice_axes(grid):
    """Recover per-dimension axes of a lattice grid; validate monotonicity."""
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.ndim != 2 or grid.shape[0] == 0:
        raise ValueError(f"grid must be a nonempty (G, d) matrix, got shape {grid.shape}")
    if grid.shape[1] == 1:
        ax = grid[:, 0]
        if ax.size > 1 and np.any(np.diff(ax) <= 0):
            raise ValueError("1-D grid must be strictly increasing")
        return [ax], (ax.size,)
    axes = [np.unique(grid[:, k]) for k in range(grid.shape[1])]
    shape = tuple(ax.size for ax in axes)
    if int(np.prod(shape)) != grid.shape[0]:
        raise ValueError("multivariate grid is not a regular lattice")
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(grid.shape[0], -1)
    if not np.array_equal(lattice, grid):
        raise ValueError(
            "multivariate grid must be a row-major lattice (last dimension fastest)"
        )
    return axes, shape
