"""Regression-tree growth with a series-based CDE split criterion.

A node split into children L/R is scored by

    sum_j S_{L,j}^2 / n_L  +  sum_j S_{R,j}^2 / n_R,

where S_{.,j} are running sums of the non-constant basis functions evaluated
at the node's responses. Maximizing this score minimizes the empirical CDE
loss of the per-child orthogonal-series density estimates; the constant basis
function contributes identically to every candidate and is excluded. With a
single column holding the raw response, the same arithmetic is the classic
MSE-reduction criterion, which is the `mse` baseline mode.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedCriterionError


@dataclass(frozen=True)
class SplitRule:
    """Route x to the left child iff x[feature] <= threshold."""

    feature: int
    threshold: float


@dataclass
class TreeNode:
    # internal node: feature/threshold/left/right set; leaf: members set.
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    members: np.ndarray | None = None
    # per-leaf weight cache (unique training rows, multiplicity / leaf size)
    unique_members: np.ndarray | None = None
    member_weights: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.members is not None


@dataclass(frozen=True)
class TreeParams:
    node_size: int = 5
    mtry: int | None = None  # None: use all covariates
    criterion: str = "cde"
    n_basis: int = 15

    def __post_init__(self):
        if self.node_size < 1:
            raise ValueError(f"node_size must be positive, got {self.node_size}")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError(f"mtry must be positive, got {self.mtry}")
        if self.criterion not in ("cde", "mse"):
            raise ValueError(f"criterion must be 'cde' or 'mse', got {self.criterion!r}")
        if self.n_basis < 2:
            raise ValueError(f"n_basis must be >= 2, got {self.n_basis}")


def _prefix_scores(M):
    """Split scores for every position k = 1..n-1 of pre-sorted score rows.

    One cumulative-sum pass makes each candidate an O(m) update, m = number
    of columns.
    """
    n = M.shape[0]
    csum = np.cumsum(M, axis=0)
    left = csum[:-1]
    right = csum[-1] - left
    n_left = np.arange(1, n, dtype=float)
    return (
        np.einsum("km,km->k", left, left) / n_left
        + np.einsum("km,km->k", right, right) / (n - n_left)
    )


def split_score_cde(sorted_basis_rows, split_position: int) -> float:
    """CDE split score for one candidate position of pre-sorted basis rows.

    `sorted_basis_rows` holds the non-constant basis values of the node's
    responses, ordered by the candidate covariate; `split_position` k sends
    rows [:k] left and [k:] right.
    """
    M = np.asarray(sorted_basis_rows, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    n = M.shape[0]
    if not 1 <= split_position <= n - 1:
        raise ValueError(f"split_position must be in 1..{n - 1}, got {split_position}")
    return float(_prefix_scores(M)[split_position - 1])


def split_score_mse(sorted_z, split_position: int) -> float:
    """MSE split score n_L*mean_L^2 + n_R*mean_R^2 for a univariate response.

    Maximizing it minimizes the total within-child sum of squared errors.
    """
    z = np.asarray(sorted_z, dtype=float)
    if z.ndim == 2 and z.shape[1] == 1:
        z = z[:, 0]
    if z.ndim != 1:
        raise UnsupportedCriterionError(
            f"mse criterion requires a univariate response, got {z.shape[1]} columns"
        )
    n = z.shape[0]
    if not 1 <= split_position <= n - 1:
        raise ValueError(f"split_position must be in 1..{n - 1}, got {split_position}")
    return float(_prefix_scores(z[:, None])[split_position - 1])


def best_split(X, score_matrix, member_idx, params: TreeParams, rng):
    """Best (SplitRule, score) over mtry sampled covariates, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values, restricted to children with at least node_size members (counted
    with bootstrap multiplicity). Ties break to the lowest feature index,
    then the lowest threshold. Returns None when no candidate satisfies the
    size constraint or every sampled covariate is constant within the node.
    """
    n = member_idx.shape[0]
    node_size = params.node_size
    if n < 2 * node_size:
        return None
    p = X.shape[1]
    mtry = p if params.mtry is None else min(params.mtry, p)
    # ascending feature order makes the lowest-index tie-break a strict '>'
    features = np.sort(rng.permutation(p)[:mtry])
    M_node = score_matrix[member_idx]

    best_rule = None
    best_score = -np.inf
    n_left = np.arange(1, n, dtype=float)
    size_ok = (n_left >= node_size) & (n - n_left >= node_size)
    for f in features:
        xs = X[:, f][member_idx]
        order = xs.argsort(kind="stable")
        xs = xs[order]
        # a valid boundary needs distinct values inside the size window
        if xs[node_size - 1] == xs[n - node_size]:
            continue
        csum = M_node[order].cumsum(axis=0)
        left = csum[:-1]
        right = csum[-1] - left
        scores = np.einsum("km,km->k", left, left) / n_left + np.einsum(
            "km,km->k", right, right
        ) / (n - n_left)
        scores[~(size_ok & (xs[1:] > xs[:-1]))] = -np.inf
        j = int(scores.argmax())
        if scores[j] > best_score:
            a, b = xs[j], xs[j + 1]
            t = 0.5 * (a + b)
            if t >= b:  # float midpoint collapsed onto b; keep right child nonempty
                t = a
            best_score = float(scores[j])
            best_rule = SplitRule(int(f), float(t))
    if best_rule is None:
        return None
    return best_rule, best_score


def build_tree(X, score_matrix, params: TreeParams, bootstrap_indices, rng) -> TreeNode:
    """Grow a tree over the bootstrap sample by recursive partitioning.

    Nodes with fewer than 2*node_size members (or no valid split) become
    leaves holding their member indices with multiplicity. Deterministic
    given the rng state; children are expanded depth-first, left first.
    """
    bootstrap_indices = np.asarray(bootstrap_indices, dtype=np.intp)
    if bootstrap_indices.size == 0:
        raise ValueError("bootstrap_indices must be nonempty")
    root = TreeNode()
    stack = [(root, bootstrap_indices)]
    while stack:
        node, idx = stack.pop()
        found = best_split(X, score_matrix, idx, params, rng)
        if found is None:
            node.members = idx
            continue
        rule, _ = found
        go_left = X[:, rule.feature][idx] <= rule.threshold
        node.feature = rule.feature
        node.threshold = rule.threshold
        node.left = TreeNode()
        node.right = TreeNode()
        # pop order: left child expanded (and consumes rng) before right
        stack.append((node.right, idx[~go_left]))
        stack.append((node.left, idx[go_left]))
    return root


def leaf_of(tree: TreeNode, x) -> TreeNode:
    """Leaf reached by routing x from the root; `<=` goes left."""
    node = tree
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def finalize_leaves(tree: TreeNode) -> None:
    """Cache per-leaf normalized membership weights for fast aggregation."""
    stack = [tree]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            unique, counts = np.unique(node.members, return_counts=True)
            node.unique_members = unique
            node.member_weights = counts / node.members.shape[0]
        else:
            stack.append(node.left)
            stack.append(node.right)
