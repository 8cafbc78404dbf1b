"""Command-line front end: simulate, train, predict, evaluate, weights.

CSV in/out with a mandatory header row; grids are per-dimension min:max:steps
specs; wall-times go to stderr as key=value lines so harnesses can scrape
them. Exit codes: 0 success, 2 input error, 3 degenerate data, 4 unsupported
combination.
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .density import BandwidthSpec
from .errors import DegenerateDataError, ModelFormatError, UnsupportedCriterionError
from .forest import Forest, ForestParams, fit, load
from .loss import cde_loss
from .simgen import UnivariateSimConfig, gen_joint, gen_univariate


@dataclass(frozen=True)
class GridSpec:
    """One response dimension of the evaluation grid."""

    min: float
    max: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError(f"grid steps must be >= 2, got {self.steps}")
        if not self.max > self.min:
            raise ValueError(f"grid max must exceed min, got [{self.min}, {self.max}]")

    def axis(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.steps)


def parse_grid_spec(text: str) -> GridSpec:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec must be MIN:MAX:STEPS, got {text!r}")
    return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]))


def build_grid(specs) -> np.ndarray:
    """Row-major lattice (last dimension fastest) from per-dim specs."""
    axes = [s.axis() for s in specs]
    if len(axes) == 1:
        return axes[0][:, None]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def parse_bandwidth(text: str) -> BandwidthSpec:
    if text == "adaptive":
        return BandwidthSpec.adaptive()
    values = [float(part) for part in text.split(",")]
    return BandwidthSpec.fixed(values[0] if len(values) == 1 else values)


def _fmt(x: float) -> str:
    return repr(float(x))


def read_csv(path):
    """Parse a numeric CSV with a header; returns (header, (n, k) array)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
    return header, np.asarray(rows, dtype=float).reshape(len(rows), len(header))


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def resolve_response_cols(header, spec: str | None):
    """Column names of the response: explicit list, or 'z' / 'z1..zd' defaults."""
    if spec:
        names = [s.strip() for s in spec.split(",") if s.strip()]
        missing = [nm for nm in names if nm not in header]
        if missing:
            raise ValueError(f"response column(s) not in header: {', '.join(missing)}")
        return names
    if "z" in header:
        return ["z"]
    names = []
    k = 1
    while f"z{k}" in header:
        names.append(f"z{k}")
        k += 1
    if not names:
        raise ValueError("no response columns found (expected 'z' or 'z1', 'z2', ...)")
    return names


def split_columns(header, data, response_names):
    z_idx = [header.index(nm) for nm in response_names]
    x_idx = [i for i in range(len(header)) if i not in z_idx]
    return x_idx, z_idx


def _query_matrix(header, data, forest: Forest):
    """Covariate rows for prediction; drops the model's response columns."""
    drop = set(forest.response_names or []) & set(header)
    x_idx = [i for i, nm in enumerate(header) if nm not in drop]
    if len(x_idx) != forest.n_features:
        raise ValueError(
            f"query file supplies {len(x_idx)} covariates, model expects {forest.n_features}"
        )
    return data[:, x_idx]


def _grid_header(forest: Forest) -> list:
    if forest.response_names:
        return list(forest.response_names)
    if forest.response_dim == 1:
        return ["z"]
    return [f"z{k + 1}" for k in range(forest.response_dim)]


def cmd_simulate(args) -> int:
    if args.model == "univariate":
        X, Z = gen_univariate(UnivariateSimConfig(n=args.n, sigma=args.sigma, seed=args.seed))
        header = [f"x{i}" for i in range(1, 11)] + [f"y{i}" for i in range(1, 11)] + ["z"]
        rows = np.column_stack([X, Z])
    else:
        X, Z = gen_joint(args.n, seed=args.seed, z2_law=args.z2_law)
        header = ["x", "z1", "z2"]
        rows = np.column_stack([X, Z])
    write_csv(args.out, header, rows)
    return 0


def cmd_train(args) -> int:
    header, data = read_csv(args.data)
    response_names = resolve_response_cols(header, args.response_cols)
    x_idx, z_idx = split_columns(header, data, response_names)
    if not x_idx:
        raise ValueError("no covariate columns remain after removing responses")
    params = ForestParams(
        n_trees=args.ntrees,
        node_size=args.node_size,
        mtry=args.mtry,
        n_basis=args.n_basis,
        criterion=args.criterion,
        bootstrap=args.bootstrap == "on",
        seed=args.seed,
    )
    t0 = time.perf_counter()
    forest = fit(data[:, x_idx], data[:, z_idx], params, n_threads=args.threads)
    train_time = time.perf_counter() - t0
    forest.covariate_names = [header[i] for i in x_idx]
    forest.response_names = response_names
    forest.save(args.out)
    print(f"train_time_seconds={train_time:.3f}", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    forest = load(args.model)
    header, data = read_csv(args.data)
    queries = _query_matrix(header, data, forest)
    specs = [parse_grid_spec(g) for g in args.grid]
    if len(specs) != forest.response_dim:
        raise ValueError(
            f"{len(specs)} --grid spec(s) given, model response dimension is {forest.response_dim}"
        )
    grid = build_grid(specs)
    bandwidth = parse_bandwidth(args.bandwidth)
    t0 = time.perf_counter()
    out_rows = []
    for qi in range(queries.shape[0]):
        est = forest.predict_density(queries[qi], grid, bandwidth)
        for g in range(grid.shape[0]):
            out_rows.append([float(qi), *grid[g], est.values[g]])
    predict_time = time.perf_counter() - t0
    write_csv(args.out, ["query_index", *_grid_header(forest), "density"], out_rows)
    print(f"predict_time_seconds={predict_time:.3f}", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    specs = [parse_grid_spec(g) for g in args.grid]
    grid = build_grid(specs)
    header, data = read_csv(args.data)

    if args.reference_uniform:
        if len(specs) == 0:
            raise ValueError("--grid is required")
        response_spec = args.response_cols
        response_names = resolve_response_cols(header, response_spec)
        x_idx, z_idx = split_columns(header, data, response_names)
        volume = float(np.prod([s.max - s.min for s in specs]))
        uniform = np.full(grid.shape[0], 1.0 / volume)

        from .density import DensityEstimate

        estimator = lambda x: DensityEstimate(
            grid=grid, values=uniform, bandwidth_used=np.zeros(len(specs))
        )
        X_test, Z_test = data[:, x_idx], data[:, z_idx]
    else:
        if not args.model:
            raise ValueError("--model is required unless --reference-uniform is set")
        forest = load(args.model)
        response_names = resolve_response_cols(
            header, args.response_cols or ",".join(forest.response_names or [])
        )
        x_idx, z_idx = split_columns(header, data, response_names)
        X_test, Z_test = data[:, x_idx], data[:, z_idx]
        if X_test.shape[1] != forest.n_features:
            raise ValueError(
                f"test file supplies {X_test.shape[1]} covariates, model expects {forest.n_features}"
            )
        if len(z_idx) != forest.response_dim:
            raise ValueError(
                f"test file supplies {len(z_idx)} responses, model expects {forest.response_dim}"
            )
        if len(specs) != forest.response_dim:
            raise ValueError(
                f"{len(specs)} --grid spec(s) given, model response dimension is {forest.response_dim}"
            )
        bandwidth = parse_bandwidth(args.bandwidth)
        estimator = lambda x: forest.predict_density(x, grid, bandwidth)

    t0 = time.perf_counter()
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")  # outside-hull count is reported below
        report = cde_loss(estimator, X_test, Z_test, grid)
    predict_time = time.perf_counter() - t0

    print(f"n_test={report.n_test}")
    print(f"loss={_fmt(report.loss)}")
    print(f"se={_fmt(report.se)}")
    print("se_kind=per_test_point")
    print(f"term_sq={_fmt(report.term_sq)}")
    print(f"term_lik={_fmt(report.term_lik)}")
    print(f"outside_hull={report.n_outside_hull}")
    print(f"predict_time_seconds={predict_time:.3f}", file=sys.stderr)
    if args.out:
        write_csv(
            args.out,
            ["loss", "se", "term_sq", "term_lik", "n_test", "outside_hull"],
            [[report.loss, report.se, report.term_sq, report.term_lik,
              float(report.n_test), float(report.n_outside_hull)]],
        )
    return 0


def cmd_weights(args) -> int:
    forest = load(args.model)
    header, data = read_csv(args.data)
    queries = _query_matrix(header, data, forest)
    out_rows = []
    for qi in range(queries.shape[0]):
        w = forest.weights(queries[qi])
        for i in range(w.shape[0]):
            out_rows.append([float(qi), float(i), w[i]])
    write_csv(args.out, ["query_index", "train_index", "weight"], out_rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdeforest",
        description="Random forests for nonparametric conditional density estimation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a benchmark data set as CSV")
    p.add_argument("--model", choices=["univariate", "joint"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0, help="noise sd (univariate only)")
    p.add_argument("--z2-law", choices=["nested", "above"], default="nested",
                   help="reading of the z2 bound (joint only)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit a forest on a CSV and save the model")
    p.add_argument("--data", required=True)
    p.add_argument("--response-cols", default=None, help="comma list; default z or z1..zd")
    p.add_argument("--ntrees", type=int, default=100)
    p.add_argument("--mtry", type=int, default=None, help="default: all covariates")
    p.add_argument("--node-size", type=int, default=5)
    p.add_argument("--n-basis", type=int, default=15)
    p.add_argument("--criterion", choices=["cde", "mse"], default="cde")
    p.add_argument("--bootstrap", choices=["on", "off"], default="on")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="density estimates on a grid for each query row")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--grid", action="append", required=True,
                   help="MIN:MAX:STEPS, once per response dimension")
    p.add_argument("--bandwidth", required=True, help="number, comma list, or 'adaptive'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="CDE loss of a model on held-out data")
    p.add_argument("--model", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--response-cols", default=None)
    p.add_argument("--grid", action="append", required=True)
    p.add_argument("--bandwidth", default="adaptive")
    p.add_argument("--reference-uniform", action="store_true",
                   help="score the uniform density over the grid hull instead of a model")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("weights", help="forest weight vector for each query row")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_weights)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UnsupportedCriterionError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (DegenerateDataError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ModelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
