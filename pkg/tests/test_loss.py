import numpy as np
import pytest
from scipy.stats import norm

from cdeforest.density import DensityEstimate
from cdeforest.loss import cde_loss, interpolate_density
from cdeforest.simgen import UnivariateSimConfig, gen_univariate, true_density_univariate


def const_estimator(grid, value):
    values = np.full(grid.shape[0], value)
    return lambda x: DensityEstimate(grid=grid, values=values,
                                     bandwidth_used=np.zeros(grid.shape[1]))


class TestCdeLoss:
    def test_unit_density_scores_minus_one(self):
        grid = np.linspace(0.0, 1.0, 101)[:, None]
        X = np.zeros((8, 2))
        Z = np.linspace(0.05, 0.95, 8)[:, None]
        report = cde_loss(const_estimator(grid, 1.0), X, Z, grid)
        assert report.loss == pytest.approx(-1.0, abs=1e-12)
        assert report.term_sq == pytest.approx(1.0, abs=1e-12)
        assert report.term_lik == pytest.approx(1.0, abs=1e-12)
        assert report.loss == report.term_sq - 2 * report.term_lik  # exact identity

    def test_zero_density_scores_zero(self):
        grid = np.linspace(0.0, 1.0, 51)[:, None]
        report = cde_loss(const_estimator(grid, 0.0), np.zeros((4, 1)),
                          np.full((4, 1), 0.5), grid)
        assert report.loss == 0.0
        assert report.se == 0.0

    def test_analytic_gaussian_case(self):
        # closed form: integral of N(.; mu, h)^2 = 1 / (2 h sqrt(pi))
        h = 0.2
        z0 = 0.7
        grid = np.linspace(z0 - 2, z0 + 2, 4001)[:, None]
        estimator = lambda x: DensityEstimate(
            grid=grid, values=norm.pdf(grid[:, 0], z0, h), bandwidth_used=np.array([h])
        )
        report = cde_loss(estimator, np.zeros((1, 1)), np.array([[z0]]), grid)
        assert report.term_sq == pytest.approx(1 / (2 * h * np.sqrt(np.pi)), abs=1e-4)
        assert report.term_lik == pytest.approx(1 / (h * np.sqrt(2 * np.pi)), abs=1e-4)
        assert report.loss == pytest.approx(-2.5789488451449363, abs=1e-3)

    def test_grid_refinement_converges(self):
        h = 0.2
        z0 = 0.0
        losses = []
        for steps in (1001, 4001):
            grid = np.linspace(-2, 2, steps)[:, None]
            estimator = lambda x: DensityEstimate(
                grid=grid, values=norm.pdf(grid[:, 0], z0, h), bandwidth_used=np.array([h])
            )
            losses.append(cde_loss(estimator, np.zeros((1, 1)), np.array([[z0]]), grid).loss)
        assert abs(losses[0] - losses[1]) < 1e-4

    def test_scale_consistency(self):
        rng = np.random.default_rng(8)
        grid = np.linspace(-3, 3, 301)[:, None]
        values = norm.pdf(grid[:, 0], 0.3, 0.7)
        X = np.zeros((6, 1))
        Z = rng.normal(size=(6, 1))

        def make(c):
            return lambda x: DensityEstimate(grid=grid, values=c * values,
                                             bandwidth_used=np.array([1.0]))

        r1 = cde_loss(make(1.0), X, Z, grid)
        r2 = cde_loss(make(2.0), X, Z, grid)
        assert r2.term_sq == pytest.approx(4 * r1.term_sq, rel=1e-12)
        assert r2.term_lik == pytest.approx(2 * r1.term_lik, rel=1e-12)

    def test_true_density_beats_uniform(self):
        grid = np.linspace(-12.0, 12.0, 800)[:, None]
        for seed in (0, 1, 2):
            X, Z = gen_univariate(UnivariateSimConfig(n=300, seed=seed))

            def truth(x):
                return DensityEstimate(grid=grid,
                                       values=true_density_univariate(x, grid[:, 0]),
                                       bandwidth_used=np.array([0.0]))

            loss_true = cde_loss(truth, X, Z, grid).loss
            loss_unif = cde_loss(const_estimator(grid, 1.0 / 24.0), X, Z, grid).loss
            assert loss_true < loss_unif

    def test_outside_hull_counted_and_warned(self):
        grid = np.linspace(0.0, 1.0, 21)[:, None]
        X = np.zeros((3, 1))
        Z = np.array([[0.5], [2.0], [-1.0]])
        with pytest.warns(UserWarning, match="outside"):
            report = cde_loss(const_estimator(grid, 1.0), X, Z, grid)
        assert report.n_outside_hull == 2
        assert report.term_lik == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_empty_test_set_rejected(self):
        grid = np.linspace(0, 1, 11)[:, None]
        with pytest.raises(ValueError, match="empty"):
            cde_loss(const_estimator(grid, 1.0), np.zeros((0, 1)), np.zeros((0, 1)), grid)

    def test_se_matches_direct_computation(self):
        rng = np.random.default_rng(17)
        grid = np.linspace(-4, 4, 401)[:, None]
        mus = rng.normal(size=5)

        def estimator(x):
            return DensityEstimate(grid=grid, values=norm.pdf(grid[:, 0], x[0], 0.5),
                                   bandwidth_used=np.array([0.5]))

        X = mus[:, None]
        Z = rng.normal(size=(5, 1))
        report = cde_loss(estimator, X, Z, grid)
        contribs = []
        for i in range(5):
            est = estimator(X[i])
            sq = np.trapezoid(est.values**2, grid[:, 0])
            lik = interpolate_density(est, Z[i])
            contribs.append(sq - 2 * lik)
        assert report.se == pytest.approx(np.std(contribs, ddof=1) / np.sqrt(5), rel=1e-10)


class TestInterpolateDensity:
    def test_exact_at_grid_nodes(self):
        grid = np.linspace(0, 1, 11)[:, None]
        values = np.sin(grid[:, 0])
        est = DensityEstimate(grid=grid, values=values, bandwidth_used=np.array([1.0]))
        for k in range(11):
            assert interpolate_density(est, grid[k]) == values[k]

    def test_midpoint_average(self):
        grid = np.array([[0.0], [1.0]])
        est = DensityEstimate(grid=grid, values=np.array([1.0, 3.0]),
                              bandwidth_used=np.array([1.0]))
        assert interpolate_density(est, [0.5]) == pytest.approx(2.0, abs=1e-15)

    def test_bilinear_cell_center(self):
        ax = np.array([0.0, 1.0])
        grid = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
        est = DensityEstimate(grid=grid, values=np.array([0.0, 0.0, 4.0, 4.0]),
                              bandwidth_used=np.ones(2))
        assert interpolate_density(est, [0.5, 0.5]) == pytest.approx(2.0, abs=1e-15)

    def test_outside_hull_returns_zero(self):
        grid = np.linspace(0, 1, 5)[:, None]
        est = DensityEstimate(grid=grid, values=np.ones(5), bandwidth_used=np.ones(1))
        assert interpolate_density(est, [1.5]) == 0.0
        assert interpolate_density(est, [-0.1]) == 0.0
