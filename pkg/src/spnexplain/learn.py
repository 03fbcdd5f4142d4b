"""LearnSPN-style structure learning for mixed tabular data.

Top-down recursion: try to split columns into independence groups with
the randomized dependence coefficient (product node), otherwise cluster
rows with a 2-component diagonal GMM (sum node weighted by cluster
proportions). Slices below the row threshold are factorized naively
into per-column leaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular, svdvals
from scipy.special import logsumexp
from scipy.stats import rankdata

from .data import Column, Dataset
from .model import (CategoricalLeaf, GaussianLeaf, Node, ProductNode, SpnModel,
                    SumNode, validate)

MAX_RECURSION_DEPTH = 64
VAR_FLOOR = 1e-6


@dataclass(frozen=True)
class LearnConfig:
    alpha: float = 0.6            # RDC dependence threshold
    min_slice_rows: int = 200     # below this, factorize naively
    rdc_features: int = 20        # random sine features per column
    rdc_scale: float = 1.0 / 6.0  # projection scale s
    gmm_components: int = 2
    gmm_max_iters: int = 100
    gmm_tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.min_slice_rows < 2:
            raise ValueError("min_slice_rows must be >= 2")
        if self.rdc_features < 2:
            raise ValueError("rdc_features must be >= 2")


def _mask_seed(seed: int) -> int:
    return seed % (1 << 63)


def pair_seed(seed: int, i: int, j: int) -> tuple[int, ...]:
    """Seed material for one unordered column pair, order-independent."""
    a, b = (i, j) if i <= j else (j, i)
    return (_mask_seed(seed), 7, a, b)


def _max_canonical_corr(fa: np.ndarray, fb: np.ndarray, ridge: float = 1e-9) -> float:
    fa = fa - fa.mean(axis=0)
    fb = fb - fb.mean(axis=0)
    n = fa.shape[0]
    caa = fa.T @ fa / (n - 1) + ridge * np.eye(fa.shape[1])
    cbb = fb.T @ fb / (n - 1) + ridge * np.eye(fb.shape[1])
    cab = fa.T @ fb / (n - 1)
    la = cholesky(caa, lower=True)
    lb = cholesky(cbb, lower=True)
    k = solve_triangular(la, cab, lower=True)
    k = solve_triangular(lb, k.T, lower=True).T
    rho = svdvals(k)[0]
    return float(min(max(rho, 0.0), 1.0))


def rdc(col_a, col_b, config: LearnConfig, seed) -> float:
    """Randomized dependence coefficient of two numeric columns.

    Rank-transforms each column to empirical copula values, lifts both
    through shared random sine features, and returns the largest
    canonical correlation of the two feature blocks. Sharing the feature
    draws makes the coefficient symmetric in its arguments.
    """
    a = np.asarray(col_a, dtype=np.float64)
    b = np.asarray(col_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"rdc needs equal-length vectors, got {a.shape} and {b.shape}")
    n = a.size
    if n < 3:
        raise ValueError(f"rdc needs at least 3 samples, got {n}")
    rng = np.random.default_rng(seed)
    k = config.rdc_features
    # frequency scale 2*sqrt(s)*k: high enough to resolve oscillatory
    # dependence on the unit copula while keeping the null coefficient low
    w = rng.normal(0.0, 2.0 * math.sqrt(config.rdc_scale) * k, size=k)
    bias = rng.uniform(0.0, 2.0 * math.pi, size=k)
    ua = rankdata(a) / (n + 1)
    ub = rankdata(b) / (n + 1)
    fa = np.sin(np.outer(ua, w) + bias)
    fb = np.sin(np.outer(ub, w) + bias)
    return _max_canonical_corr(fa, fb)


def split_columns(X: np.ndarray, rows: np.ndarray, cols: list[int],
                  config: LearnConfig) -> list[list[int]]:
    """Partition columns into dependence groups (connected components of
    the RDC >= alpha graph), sorted by smallest member index."""
    if len(cols) < 2:
        raise ValueError("split_columns needs at least 2 columns")
    parent = {c: c for c in cols}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    for ia, a in enumerate(cols):
        for b in cols[ia + 1:]:
            if find(a) == find(b):
                continue
            coeff = rdc(X[rows, a], X[rows, b], config, pair_seed(config.seed, a, b))
            if coeff >= config.alpha:
                parent[find(b)] = find(a)
    groups: dict[int, list[int]] = {}
    for c in cols:
        groups.setdefault(find(c), []).append(c)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def _gmm_log_resp(Z, means, variances, log_weights):
    # (n, 2) unnormalized log responsibilities under diagonal Gaussians
    ll = -0.5 * (((Z[:, None, :] - means[None]) ** 2) / variances[None]
                 + np.log(2.0 * math.pi * variances[None])).sum(axis=2)
    return ll + log_weights[None]


def cluster_rows(Z: np.ndarray, config: LearnConfig,
                 rng: np.random.Generator) -> tuple[np.ndarray, tuple[float, float]]:
    """2-way row partition via diagonal-covariance GMM-EM on standardized data.

    Returns boolean assignments (True = second cluster) and the two
    cluster proportions. Falls back to a seeded balanced random split
    when a component empties.
    """
    Z = np.asarray(Z, dtype=np.float64)
    n = Z.shape[0]
    if n < 2:
        raise ValueError("cluster_rows needs at least 2 rows")
    mu = Z.mean(axis=0)
    sd = Z.std(axis=0)
    sd[sd == 0.0] = 1.0
    Z = (Z - mu) / sd

    assign = None
    first = int(rng.integers(n))
    d0 = ((Z - Z[first]) ** 2).sum(axis=1)
    if d0.sum() > 0.0:
        c2 = Z[rng.choice(n, p=d0 / d0.sum())]
        means = np.stack([Z[first], c2])
        variances = np.maximum(Z.var(axis=0), VAR_FLOOR)[None].repeat(2, axis=0)
        log_weights = np.log(np.array([0.5, 0.5]))
        prev_ll = -np.inf
        for _ in range(config.gmm_max_iters):
            lr = _gmm_log_resp(Z, means, variances, log_weights)
            norm = logsumexp(lr, axis=1)
            resp = np.exp(lr - norm[:, None])
            ll = float(norm.mean())
            nk = resp.sum(axis=0)
            if np.any(nk < 1e-10):
                break
            log_weights = np.log(nk / n)
            means = (resp.T @ Z) / nk[:, None]
            variances = np.maximum(
                (resp.T @ (Z ** 2)) / nk[:, None] - means ** 2, VAR_FLOOR)
            if abs(ll - prev_ll) < config.gmm_tol:
                break
            prev_ll = ll
        lr = _gmm_log_resp(Z, means, variances, log_weights)
        hard = lr[:, 1] > lr[:, 0]
        if 0 < hard.sum() < n:
            assign = hard
    if assign is None:
        # degenerate slice: balanced random split
        perm = rng.permutation(n)
        assign = np.zeros(n, dtype=bool)
        assign[perm[n // 2:]] = True
    w1 = float(assign.sum()) / n
    return assign, (1.0 - w1, w1)


def sigma_floor_for(values: np.ndarray) -> float:
    sd = float(np.std(values))
    return 1e-6 * (sd if sd > 0.0 else 1.0)


def fit_leaf(values: np.ndarray, column: Column, sigma_floor: float) -> Node:
    """Maximum-likelihood univariate leaf; categorical with add-one smoothing."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError(f"cannot fit a leaf on empty column {column.name!r}")
    feature = -1  # caller rebinds; kept explicit below
    if column.kind == "real":
        mu = float(values.mean())
        sigma = max(float(values.std()), sigma_floor)
        return GaussianLeaf(feature, mu, sigma)
    n_cats = len(column.categories)
    counts = np.bincount(values.astype(np.intp), minlength=n_cats).astype(np.float64)
    probs = (counts + 1.0) / (values.size + n_cats)
    return CategoricalLeaf(feature, tuple(float(p) for p in probs))


def _rebind(leaf: Node, feature: int) -> Node:
    if isinstance(leaf, GaussianLeaf):
        return GaussianLeaf(feature, leaf.mu, leaf.sigma)
    return CategoricalLeaf(feature, leaf.probs)


def learn_spn(dataset: Dataset, config: LearnConfig) -> SpnModel:
    """Learn SPN structure and parameters; deterministic given config.seed."""
    X = dataset.values
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("cannot learn from an empty dataset")
    if np.isnan(X).any():
        bad = int(np.flatnonzero(np.isnan(X).any(axis=0))[0])
        raise ValueError(f"column {dataset.schema[bad].name!r} contains NaN values")
    schema = dataset.schema
    floors = [sigma_floor_for(X[:, j]) if c.kind == "real" else 0.0
              for j, c in enumerate(schema)]
    nodes: list[Node] = []

    def add(node: Node) -> int:
        nodes.append(node)
        return len(nodes) - 1

    def leaf(rows: np.ndarray, col: int) -> int:
        return add(_rebind(fit_leaf(X[rows, col], schema[col], floors[col]), col))

    def naive(rows: np.ndarray, cols: list[int]) -> int:
        ids = [leaf(rows, c) for c in cols]
        return ids[0] if len(ids) == 1 else add(ProductNode(tuple(ids)))

    def build(rows: np.ndarray, cols: list[int], depth: int, path: tuple[int, ...]) -> int:
        if len(cols) == 1:
            return leaf(rows, cols[0])
        if depth >= MAX_RECURSION_DEPTH or len(rows) < config.min_slice_rows:
            return naive(rows, cols)
        groups = split_columns(X, rows, cols, config)
        if len(groups) > 1:
            ids = [build(rows, g, depth + 1, path + (gi,))
                   for gi, g in enumerate(groups)]
            return add(ProductNode(tuple(ids)))
        rng = np.random.default_rng((_mask_seed(config.seed), 11, len(path)) + path)
        assign, weights = cluster_rows(X[np.ix_(rows, cols)], config, rng)
        ids = [build(rows[~assign], cols, depth + 1, path + (0,)),
               build(rows[assign], cols, depth + 1, path + (1,))]
        return add(SumNode(tuple(ids), weights))

    root = build(np.arange(X.shape[0]), list(range(X.shape[1])), 0, ())
    model = SpnModel(nodes, root, list(schema))
    issues = validate(model)
    if issues:  # structural bug guard; learned models must always validate
        raise RuntimeError("learned model failed validation: " + "; ".join(issues))
    return model
