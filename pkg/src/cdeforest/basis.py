"""Orthonormal cosine basis on [0, 1] and its tensor products.

The density machinery works on responses rescaled to the unit interval
(or unit hypercube). The basis used throughout is

    phi_0(z) = 1,    phi_j(z) = sqrt(2) * cos(pi * j * z)   for j >= 1,

which is orthonormal under the Lebesgue measure on [0, 1]. Multivariate
responses use the tensor-product basis built from the same family.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, UnsupportedCriterionError

_SQRT2 = np.sqrt(2.0)

# Keeping more than two or three response dimensions would blow up the tensor
# basis (n_basis ** dim functions), so dim is capped at 3.
_MAX_DIM = 3


@dataclass(frozen=True)
class BasisSpec:
    """Size of the series basis: `n_basis` functions per response dimension.

    Index 0 is the constant function, so `n_basis` must be at least 2 for any
    non-constant structure to be visible to the split criterion.
    """

    n_basis: int
    dim: int

    def __post_init__(self):
        if self.n_basis < 2:
            raise ValueError(f"n_basis must be >= 2, got {self.n_basis}")
        if not 1 <= self.dim <= _MAX_DIM:
            raise UnsupportedCriterionError(
                f"response dimension must be in 1..{_MAX_DIM}, got {self.dim}"
            )

    @property
    def n_functions(self) -> int:
        """Total number of tensor basis functions, n_basis ** dim."""
        return self.n_basis**self.dim


def cosine_basis(z, n_basis: int) -> np.ndarray:
    """Evaluate phi_0 .. phi_{n_basis-1} at points of [0, 1].

    Parameters
    ----------
    z : scalar or array
        Evaluation points; every entry must lie in [0, 1]. Values outside
        the unit interval indicate a rescaling bug upstream and raise.
    n_basis : int
        Number of basis functions (constant included).

    Returns
    -------
    np.ndarray with shape ``z.shape + (n_basis,)``.
    """
    if n_basis < 1:
        raise ValueError(f"n_basis must be positive, got {n_basis}")
    z = np.asarray(z, dtype=float)
    if z.size and (np.min(z) < 0.0 or np.max(z) > 1.0):
        raise ValueError("cosine basis evaluated outside [0, 1]")
    out = _SQRT2 * np.cos(np.pi * np.multiply.outer(z, np.arange(n_basis)))
    out[..., 0] = 1.0
    return out


def tensor_basis(z, n_basis: int) -> np.ndarray:
    """Tensor-product basis phi_{j1}(z_1) * ... * phi_{jd}(z_d).

    `z` is a d-vector in [0, 1]^d or an (n, d) matrix of such points. The
    n_basis**d products are flattened in lexicographic order of the
    multi-index (j_1, ..., j_d) with j_d varying fastest; d = 1 reduces to
    `cosine_basis` exactly.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    pts = z[None, :] if single else z
    if pts.ndim != 2:
        raise ValueError(f"expected a d-vector or (n, d) matrix, got shape {z.shape}")
    phis = cosine_basis(pts, n_basis)  # (n, d, n_basis)
    out = phis[:, 0, :]
    for k in range(1, pts.shape[1]):
        out = (out[:, :, None] * phis[:, k, None, :]).reshape(pts.shape[0], -1)
    return out[0] if single else out


def rescale_response(Z, bounds=None):
    """Min-max rescale responses to [0, 1] per dimension.

    With `bounds=None` the bounds are taken from the data (training path);
    supplying stored bounds applies them to new data, clamping to [0, 1].

    Returns ``(Z01, bounds)`` where bounds is a (d, 2) array of per-dimension
    (min, max). A constant response dimension raises DegenerateDataError.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if bounds is None:
        if Z.shape[0] < 2:
            raise DegenerateDataError(
                f"need at least 2 responses to infer rescaling bounds, got {Z.shape[0]}"
            )
        lo = Z.min(axis=0)
        hi = Z.max(axis=0)
        flat = np.nonzero(hi <= lo)[0]
        if flat.size:
            raise DegenerateDataError(
                f"response dimension {int(flat[0])} is constant; density estimation is degenerate"
            )
        return (Z - lo) / (hi - lo), np.stack([lo, hi], axis=1)
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim == 1:
        bounds = bounds[None, :]
    if bounds.shape != (Z.shape[1], 2):
        raise ValueError(
            f"bounds shape {bounds.shape} does not match response dimension {Z.shape[1]}"
        )
    lo, hi = bounds[:, 0], bounds[:, 1]
    if np.any(hi <= lo):
        raise ValueError("rescaling bounds must satisfy max > min per dimension")
    return np.clip((Z - lo) / (hi - lo), 0.0, 1.0), bounds
