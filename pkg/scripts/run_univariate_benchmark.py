"""Univariate benchmark: CDE-criterion forests vs MSE-criterion forests.

Trains both criteria on the bimodal simulation at one or more training sizes
and reports held-out CDE loss (with per-test-point SE) and wall times, one
row per (criterion, size, seed).

Usage:
    python scripts/run_univariate_benchmark.py --sizes 1000,10000 --seeds 3
"""

import argparse
import time

import numpy as np

from cdeforest.forest import ForestParams, fit
from cdeforest.loss import cde_loss
from cdeforest.simgen import UnivariateSimConfig, gen_univariate


def run_one(criterion, n_train, n_test, seed, args):
    X, Z = gen_univariate(UnivariateSimConfig(n=n_train, sigma=args.sigma, seed=seed))
    X_test, Z_test = gen_univariate(
        UnivariateSimConfig(n=n_test, sigma=args.sigma, seed=10_000 + seed)
    )
    params = ForestParams(
        n_trees=args.ntrees,
        mtry=args.mtry,
        node_size=args.node_size,
        n_basis=args.n_basis,
        criterion=criterion,
        seed=100 + seed,
    )
    t0 = time.perf_counter()
    forest = fit(X, Z, params)
    train_s = time.perf_counter() - t0

    grid = np.linspace(args.grid_min, args.grid_max, args.grid_steps)[:, None]
    t0 = time.perf_counter()
    rep = cde_loss(
        lambda x: forest.predict_density(x, grid, args.bandwidth), X_test, Z_test, grid
    )
    predict_s = time.perf_counter() - t0
    return rep, train_s, predict_s


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1000", help="comma list of training sizes")
    ap.add_argument("--seeds", type=int, default=5, help="number of seeds per size")
    ap.add_argument("--n-test", type=int, default=1000)
    ap.add_argument("--ntrees", type=int, default=100)
    ap.add_argument("--mtry", type=int, default=4)
    ap.add_argument("--node-size", type=int, default=5)
    ap.add_argument("--n-basis", type=int, default=15)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--bandwidth", type=float, default=0.2)
    ap.add_argument("--grid-min", type=float, default=-12.0)
    ap.add_argument("--grid-max", type=float, default=12.0)
    ap.add_argument("--grid-steps", type=int, default=1000)
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'criterion':>9}  {'N':>7}  {'seed':>4}  {'loss':>9}  {'se':>7}  "
          f"{'train_s':>8}  {'predict_s':>9}")
    for n_train in sizes:
        gaps = []
        for seed in range(args.seeds):
            losses = {}
            for criterion in ("cde", "mse"):
                rep, train_s, predict_s = run_one(criterion, n_train, args.n_test, seed, args)
                losses[criterion] = rep.loss
                print(f"{criterion:>9}  {n_train:>7}  {seed:>4}  {rep.loss:>9.4f}  "
                      f"{rep.se:>7.4f}  {train_s:>8.2f}  {predict_s:>9.2f}")
            gaps.append(losses["mse"] - losses["cde"])
        print(f"# N={n_train}: mean cde-vs-mse gap {np.mean(gaps):+.4f} "
              f"(cde wins {sum(g > 0 for g in gaps)}/{len(gaps)} seeds)")


if __name__ == "__main__":
    main()
