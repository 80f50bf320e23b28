"""Anchor construction: pick anchor points, gather neighbor sets, and fit
one ridge model per anchor neighborhood.

Anchors are the regularization targets of the per-sample models. They can
be training rows picked at random or k-means centers (which may lie outside
the training set); each anchor's model is the closed-form ridge fit over
its K nearest training rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from fallreg.dataset import Dataset


def augment_inputs(X: np.ndarray, with_bias: bool) -> np.ndarray:
    """Append a constant-1 column when models carry a bias term."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if not with_bias:
        return X
    return np.ascontiguousarray(np.hstack([X, np.ones((X.shape[0], 1))]))


@dataclass(frozen=True)
class AnchorSet:
    """k anchor models (each d' x m), their anchor points and neighbor sets.

    d' = d + 1 when `with_bias`, else d. Immutable after construction.
    """

    models: np.ndarray  # (k, d', m)
    anchor_points: np.ndarray  # (k, d)
    neighbor_sets: tuple[np.ndarray, ...]
    with_bias: bool
    ridge_alpha: float

    def __post_init__(self):
        models = np.ascontiguousarray(self.models, dtype=np.float64)
        points = np.ascontiguousarray(self.anchor_points, dtype=np.float64)
        if models.ndim != 3 or models.shape[0] < 1:
            raise ValueError("models must be a (k, d', m) stack with k >= 1")
        if points.shape[0] != models.shape[0]:
            raise ValueError("one anchor point per anchor model required")
        if not np.isfinite(models).all():
            raise ValueError("anchor models contain non-finite entries")
        expected_dp = points.shape[1] + (1 if self.with_bias else 0)
        if models.shape[1] != expected_dp:
            raise ValueError(
                f"anchor models have {models.shape[1]} input rows, "
                f"expected {expected_dp}"
            )
        sets = tuple(np.asarray(s, dtype=np.int64) for s in self.neighbor_sets)
        if len(sets) != models.shape[0]:
            raise ValueError("one neighbor set per anchor required")
        for s in sets:
            if s.size < 1 or (s < 0).any():
                raise ValueError("neighbor sets must be nonempty valid indices")
        models.flags.writeable = False
        points.flags.writeable = False
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "anchor_points", points)
        object.__setattr__(self, "neighbor_sets", sets)

    @property
    def k(self) -> int:
        return self.models.shape[0]

    @property
    def dp(self) -> int:
        """Model input dimension d' (d, or d+1 with bias)."""
        return self.models.shape[1]

    @property
    def d(self) -> int:
        return self.anchor_points.shape[1]

    @property
    def m(self) -> int:
        return self.models.shape[2]

    def predictions(self, x_aug: np.ndarray) -> np.ndarray:
        """All k anchor predictions A_l^T x' for one augmented input, (k, m)."""
        return np.einsum("kdm,d->km", self.models, x_aug)


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, k), without the (n, k, d) temporary."""
    d2 = (
        np.einsum("nd,nd->n", X, X)[:, None]
        - 2.0 * X @ centers.T
        + np.einsum("kd,kd->k", centers, centers)[None, :]
    )
    return np.maximum(d2, 0.0)


def kmeans_plusplus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centers: first uniform, then proportional to squared distance."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # all remaining mass at existing centers; any point works
            centers[c] = X[rng.integers(n)]
            continue
        centers[c] = X[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def lloyd_kmeans(
    X: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """k-means with kmeans++ seeding.

    Runs Lloyd iterations until the largest center shift drops below `tol`
    or `max_iter` is hit. An emptied cluster is reseeded to the point
    farthest from its assigned center. Returns (centers, labels, history)
    where history is the within-cluster sum of squares after each
    assignment step (non-increasing).

    Raises if k exceeds the number of distinct rows.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k:
        raise ValueError("k must be >= 1")
    n_distinct = np.unique(X, axis=0).shape[0]
    if k > n_distinct:
        raise ValueError(f"k={k} exceeds the {n_distinct} distinct points")
    rng = np.random.default_rng(seed)
    centers = kmeans_plusplus_init(X, k, rng)
    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), labels].sum()))
        new_centers = centers.copy()
        for c in range(k):
            mask = labels == c
            if mask.any():
                new_centers[c] = X[mask].mean(axis=0)
        empties = [c for c in range(k) if not (labels == c).any()]
        if empties:
            # reseed each empty cluster to the currently worst-represented point
            point_d2 = d2[np.arange(n), labels].copy()
            for c in empties:
                far = int(np.argmax(point_d2))
                new_centers[c] = X[far]
                point_d2[far] = -1.0
        shift = np.max(np.linalg.norm(new_centers - centers, axis=1))
        centers = new_centers
        if shift < tol:
            break
    d2 = _sq_dists(X, centers)
    labels = np.argmin(d2, axis=1)
    history.append(float(d2[np.arange(n), labels].sum()))
    return centers, labels, history


def select_anchor_points(
    data: Dataset, k: int, method: str = "kmeans", seed: int = 0
) -> np.ndarray:
    """Pick k anchor points: distinct training rows ("random") or k-means
    centers ("kmeans"), which may lie outside the training set."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if method == "random":
        if k > data.n:
            raise ValueError(f"k={k} exceeds n={data.n} for random selection")
        rng = np.random.default_rng(seed)
        idx = rng.choice(data.n, size=k, replace=False)
        return data.X[idx].copy()
    if method == "kmeans":
        centers, _, _ = lloyd_kmeans(data.X, k, seed)
        return centers
    raise ValueError(f"unknown anchor method {method!r}")


def neighbor_set(data: Dataset, anchor_point: np.ndarray, k_anchors: int) -> np.ndarray:
    """Indices of the k_anchors training rows closest to the anchor point
    (Euclidean), ties broken toward the lower row index."""
    if not 1 <= k_anchors <= data.n:
        raise ValueError(f"k_anchors must be in [1, {data.n}], got {k_anchors}")
    point = np.asarray(anchor_point, dtype=np.float64).ravel()
    diff = data.X - point
    dist = np.sqrt(np.einsum("nd,nd->n", diff, diff))
    order = np.lexsort((np.arange(data.n), dist))
    return np.ascontiguousarray(order[:k_anchors], dtype=np.int64)


def fit_anchor_model(
    data: Dataset,
    indices: np.ndarray,
    ridge_alpha: float,
    with_bias: bool,
) -> np.ndarray:
    """Closed-form ridge fit over the selected rows.

    Solves (X'^T X' + alpha I) A = X'^T Y on the neighborhood via a
    symmetric positive-definite factorization (alpha > 0 guarantees
    well-posedness). Returns A with shape (d', m).
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size < 1:
        raise ValueError("indices must be nonempty")
    if ridge_alpha <= 0:
        raise ValueError("ridge_alpha must be > 0")
    Xs = augment_inputs(data.X[indices], with_bias)
    Ys = data.Y[indices]
    gram = Xs.T @ Xs + ridge_alpha * np.eye(Xs.shape[1])
    rhs = Xs.T @ Ys
    model = cho_solve(cho_factor(gram, lower=True), rhs)
    if not np.isfinite(model).all():
        raise ArithmeticError("anchor fit produced non-finite coefficients")
    return model


def build_anchor_set(
    data: Dataset,
    k: int,
    k_anchors: int = 20,
    method: str = "kmeans",
    ridge_alpha: float = 1.0,
    with_bias: bool = True,
    seed: int = 0,
) -> AnchorSet:
    """Compose anchor-point selection, neighbor lookup, and per-anchor ridge
    fits into an AnchorSet. Deterministic given the seed; per-anchor fits
    are independent of each other."""
    points = select_anchor_points(data, k, method, seed)
    sets = tuple(neighbor_set(data, points[l], k_anchors) for l in range(k))
    models = np.stack(
        [fit_anchor_model(data, sets[l], ridge_alpha, with_bias) for l in range(k)]
    )
    return AnchorSet(models, points, sets, with_bias, ridge_alpha)
