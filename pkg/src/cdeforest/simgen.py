"""Synthetic data generators for the benchmark experiments.

Two designs: a univariate response whose conditional density is a symmetric
two-component Gaussian mixture (conditional mean identically zero, so
MSE-driven splits have nothing to work with), and a bivariate response
supported on a nested triangle that exercises joint-density estimation.
"""

from dataclasses import dataclass

import numpy as np

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class UnivariateSimConfig:
    n: int
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def gen_univariate(cfg: UnivariateSimConfig):
    """Draw (X, Z): 10 relevant + 10 irrelevant uniform covariates.

    With m = floor(x_1 + ... + x_10) and a hidden fair coin s,
    Z ~ Normal(+m, sigma) or Normal(-m, sigma), so E[Z | X] = 0 while the
    conditional density is bimodal whenever m > 0. Returns X with shape
    (n, 20) — columns 0-9 relevant, 10-19 irrelevant — and Z with shape (n, 1).
    """
    rng = np.random.default_rng(cfg.seed)
    X = rng.uniform(size=(cfg.n, 20))
    coin = rng.integers(0, 2, size=cfg.n)
    m = np.floor(X[:, :10].sum(axis=1))
    mu = np.where(coin == 0, m, -m)
    Z = rng.normal(loc=mu, scale=cfg.sigma)
    return X, Z[:, None]


def true_density_univariate(x, z, sigma: float = 1.0):
    """True conditional density of the univariate design at covariates x.

    0.5 * N(z; m, sigma) + 0.5 * N(z; -m, sigma) with m = floor(sum of the
    10 relevant covariates). Vectorized over z.
    """
    x = np.asarray(x, dtype=float).ravel()
    m = np.floor(x[:10].sum())
    z = np.asarray(z, dtype=float)
    pdf = lambda mu: _INV_SQRT_2PI / sigma * np.exp(-0.5 * ((z - mu) / sigma) ** 2)
    return 0.5 * (pdf(m) + pdf(-m))


def gen_joint(n: int, seed: int = 0, z2_law: str = "nested"):
    """Draw the bivariate design: x ~ U(0,1), z1 ~ U(0,x), then z2.

    z2_law 'nested' (default) draws z2 ~ U(z1, x), giving the triangular
    support {0 <= z1 <= z2 <= x}; 'above' draws z2 ~ U(x, 1) instead.
    Returns X with shape (n, 1) and Z with shape (n, 2).
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if z2_law not in ("nested", "above"):
        raise ValueError(f"z2_law must be 'nested' or 'above', got {z2_law!r}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=n)
    z1 = rng.uniform(0.0, x)
    z2 = rng.uniform(z1, x) if z2_law == "nested" else rng.uniform(x, 1.0)
    return x[:, None], np.column_stack([z1, z2])
