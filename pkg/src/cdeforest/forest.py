"""Ensemble training, query weighting, density prediction, persistence.

A fitted forest keeps the original-scale training responses; prediction is a
weighted Gaussian KDE over them, with per-query weights aggregated from leaf
co-membership across trees (the adaptive nearest-neighbor view of a random
forest). Models persist as versioned JSON documents.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, rescale_response, tensor_basis
from .density import BandwidthSpec, DensityEstimate, adaptive_bandwidth, weighted_kde
from .errors import ModelFormatError, UnsupportedCriterionError
from .tree import TreeNode, TreeParams, build_tree, finalize_leaves

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams(TreeParams):
    n_trees: int = 100
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        super().__post_init__()
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be positive, got {self.n_trees}")


@dataclass
class Forest:
    """A fitted conditional-density forest (immutable once built)."""

    trees: list
    z_train: np.ndarray  # (n, d), original response scale
    rescale_bounds: np.ndarray  # (d, 2)
    params: ForestParams
    n_features: int
    covariate_names: list | None = field(default=None)
    response_names: list | None = field(default=None)

    @property
    def n_train(self) -> int:
        return self.z_train.shape[0]

    @property
    def response_dim(self) -> int:
        return self.z_train.shape[1]

    def weights(self, x_new) -> np.ndarray:
        """Per-training-point weights for one query (nonnegative, sums to 1).

        Each tree spreads mass 1/leaf_size over its leaf members (bootstrap
        multiplicity counted); per-tree vectors are averaged over trees and
        renormalized.
        """
        x = np.asarray(x_new, dtype=float).ravel()
        if x.shape[0] != self.n_features:
            raise ValueError(
                f"query has {x.shape[0]} covariates, forest expects {self.n_features}"
            )
        w = np.zeros(self.n_train)
        for tree in self.trees:
            node = tree
            while node.members is None:
                node = node.left if x[node.feature] <= node.threshold else node.right
            w[node.unique_members] += node.member_weights
        w /= len(self.trees)
        total = w.sum()
        if total > 0:
            w /= total
        return w

    def predict_density(self, x_new, z_grid, bandwidth) -> DensityEstimate:
        """Weighted KDE of the conditional density on a response grid.

        `bandwidth` is a positive scalar, a per-dim sequence, the string
        'adaptive', or a BandwidthSpec.
        """
        grid = np.asarray(z_grid, dtype=float)
        if grid.ndim == 1:
            grid = grid[:, None]
        if grid.shape[0] == 0:
            raise ValueError("z_grid must be nonempty")
        if grid.shape[1] != self.response_dim:
            raise ValueError(
                f"z_grid dimension {grid.shape[1]} != response dimension {self.response_dim}"
            )
        w = self.weights(x_new)
        h, fallback = self._resolve_bandwidth(bandwidth, w)
        est = weighted_kde(self.z_train, w, grid, h)
        est.bandwidth_fallback = fallback
        return est

    def _resolve_bandwidth(self, bandwidth, w):
        if isinstance(bandwidth, str):
            bandwidth = (
                BandwidthSpec.adaptive()
                if bandwidth == "adaptive"
                else BandwidthSpec.fixed(float(bandwidth))
            )
        elif not isinstance(bandwidth, BandwidthSpec):
            bandwidth = BandwidthSpec.fixed(bandwidth)
        if bandwidth.mode == "adaptive":
            return adaptive_bandwidth(self.z_train, w)
        h = np.broadcast_to(
            np.atleast_1d(np.asarray(bandwidth.value, dtype=float)), (self.response_dim,)
        )
        return np.array(h), False

    def to_json(self) -> str:
        doc = {
            "format_version": FORMAT_VERSION,
            "params": {
                "n_trees": self.params.n_trees,
                "node_size": self.params.node_size,
                "mtry": self.params.mtry,
                "n_basis": self.params.n_basis,
                "criterion": self.params.criterion,
                "bootstrap": self.params.bootstrap,
                "seed": self.params.seed,
            },
            "n_features": self.n_features,
            "response_dim": self.response_dim,
            "rescale_bounds": self.rescale_bounds.tolist(),
            "covariate_names": self.covariate_names,
            "response_names": self.response_names,
            "z_train": self.z_train.tolist(),
            "trees": [_node_to_dict(t) for t in self.trees],
        }
        return json.dumps(doc, separators=(",", ":"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def fit(X, Z, params: ForestParams | None = None, n_threads: int = 1) -> Forest:
    """Train a conditional-density forest.

    Responses are min-max rescaled to the unit cube and the tensor cosine
    basis is evaluated once; each tree then draws its bootstrap sample and
    grows from an independent random stream derived from (seed, tree index),
    so results are reproducible bit-for-bit and independent of n_threads.
    """
    if params is None:
        params = ForestParams()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    n, p = X.shape
    if Z.shape[0] != n:
        raise ValueError(f"X has {n} rows but Z has {Z.shape[0]}")
    if n == 0:
        raise ValueError("training set is empty")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(Z)):
        raise ValueError("training data contains non-finite values")
    d = Z.shape[1]
    if params.mtry is not None and params.mtry > p:
        raise ValueError(f"mtry={params.mtry} exceeds covariate count p={p}")

    z01, bounds = rescale_response(Z)
    if params.criterion == "mse":
        if d != 1:
            raise UnsupportedCriterionError(
                f"mse criterion supports univariate responses only, got d={d}"
            )
        score_matrix = np.ascontiguousarray(Z)
    else:
        BasisSpec(params.n_basis, d)  # validates n_basis >= 2 and d <= 3
        score_matrix = np.ascontiguousarray(tensor_basis(z01, params.n_basis)[:, 1:])

    streams = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    X_cols = np.asfortranarray(X)  # column-contiguous for the per-feature gathers

    def grow(t):
        rng = np.random.default_rng(streams[t])
        boot = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        tree = build_tree(X_cols, score_matrix, params, boot, rng)
        finalize_leaves(tree)
        return tree

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            trees = list(pool.map(grow, range(params.n_trees)))
    else:
        trees = [grow(t) for t in range(params.n_trees)]

    return Forest(
        trees=trees,
        z_train=np.array(Z),
        rescale_bounds=bounds,
        params=params,
        n_features=p,
    )


def _node_to_dict(node: TreeNode):
    if node.is_leaf:
        return {"members": [int(i) for i in node.members]}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(obj) -> TreeNode:
    if not isinstance(obj, dict):
        raise ModelFormatError("tree node is not an object")
    if "members" in obj:
        members = np.asarray(obj["members"], dtype=np.intp)
        if members.size == 0:
            raise ModelFormatError("leaf node has no members")
        return TreeNode(members=members)
    for key in ("feature", "threshold", "left", "right"):
        if key not in obj:
            raise ModelFormatError(f"tree node missing field '{key}'")
    return TreeNode(
        feature=int(obj["feature"]),
        threshold=float(obj["threshold"]),
        left=_node_from_dict(obj["left"]),
        right=_node_from_dict(obj["right"]),
    )


def from_json(text: str) -> Forest:
    """Rebuild a forest from its JSON document (see `Forest.to_json`)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must contain a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format_version {version!r}, expected {FORMAT_VERSION}"
        )
    for key in ("params", "n_features", "response_dim", "rescale_bounds", "z_train", "trees"):
        if key not in doc:
            raise ModelFormatError(f"model file missing field '{key}'")
    try:
        params = ForestParams(**doc["params"])
    except TypeError as exc:
        raise ModelFormatError(f"bad params block: {exc}") from exc
    z_train = np.asarray(doc["z_train"], dtype=float)
    if z_train.ndim == 1:
        z_train = z_train[:, None]
    bounds = np.asarray(doc["rescale_bounds"], dtype=float)
    trees = [_node_from_dict(t) for t in doc["trees"]]
    if len(trees) != params.n_trees:
        raise ModelFormatError(
            f"model holds {len(trees)} trees but params.n_trees={params.n_trees}"
        )
    if z_train.shape[1] != int(doc["response_dim"]):
        raise ModelFormatError("z_train does not match 'response_dim'")
    forest = Forest(
        trees=trees,
        z_train=z_train,
        rescale_bounds=bounds,
        params=params,
        n_features=int(doc["n_features"]),
        covariate_names=doc.get("covariate_names"),
        response_names=doc.get("response_names"),
    )
    for tree in forest.trees:
        finalize_leaves(tree)
    return forest


def load(path) -> Forest:
    """Load a forest saved by `Forest.save`."""
    with open(path, "r", encoding="utf-8") as fh:
        return from_json(fh.read())
