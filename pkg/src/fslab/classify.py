"""Test-time classifiers: nearest-centroid (plain and weighted) and a
from-scratch multinomial logistic regression fit by full-batch gradient
descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MMCVector


@dataclass(frozen=True)
class CentroidModel:
    centroids: np.ndarray  # (N, d)
    class_indices: tuple


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (N, d)
    bias: np.ndarray     # (N,)
    n_iters: int
    final_loss: float


def ncc_fit(support_groups) -> CentroidModel:
    """Per-class mean vectors of the support groups."""
    centroids = []
    for i, group in enumerate(support_groups):
        mat = np.atleast_2d(np.asarray(group, dtype=np.float64))
        if mat.shape[0] == 0:
            raise ValueError(f"class {i} has no support vectors")
        centroids.append(mat.mean(axis=0))
    return CentroidModel(np.asarray(centroids), tuple(range(len(centroids))))


def ncc_predict(query, model: CentroidModel) -> int:
    """Index of the nearest centroid (Euclidean); ties go to the lowest index."""
    q = np.asarray(query, dtype=np.float64)
    dists = np.linalg.norm(model.centroids - q, axis=1)
    return int(model.class_indices[int(np.argmin(dists))])


def ncc_predict_batch(queries, model: CentroidModel) -> np.ndarray:
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    d2 = ((q[:, None, :] - model.centroids[None, :, :]) ** 2).sum(axis=2)
    return np.asarray(model.class_indices)[np.argmin(d2, axis=1)]


def weighted_ncc_predict(query_std, mu1_std, mu2_std, omega: MMCVector) -> int:
    """Binary weighted-NCC decision on standardized inputs.

    Returns 1 iff the omega-weighted distance to the first mean is strictly
    smaller; ties go to class 2 (strict-inequality convention).
    """
    z = np.asarray(query_std, dtype=np.float64)
    w = omega.weights
    if z.shape != w.shape:
        raise ValueError("query and omega have mismatched dimensionality")
    d1 = np.sum((w * (z - np.asarray(mu1_std))) ** 2)
    d2 = np.sum((w * (z - np.asarray(mu2_std))) ** 2)
    return 1 if d1 < d2 else 2


def softmax_xent_loss_grad(W, b, X, labels, l2_strength):
    """Mean cross-entropy loss with (l2/2n)||W||^2, plus its gradients."""
    n = X.shape[0]
    logits = X @ W.T + b
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    probs = expl / expl.sum(axis=1, keepdims=True)
    # A zero probability for the true label yields an inf loss, which the
    # caller treats as divergence; silence only the log(0) warning.
    with np.errstate(divide="ignore"):
        ll = -np.log(probs[np.arange(n), labels])
    loss = ll.mean() + (l2_strength / (2.0 * n)) * np.sum(W ** 2)
    G = probs.copy()
    G[np.arange(n), labels] -= 1.0
    G /= n
    gW = G.T @ X + (l2_strength / n) * W
    gb = G.sum(axis=0)
    return loss, gW, gb


def linear_fit(support_groups, l2_strength: float = 1.0, learning_rate: float = 0.5,
               max_iters: int = 1000, tol: float = 1e-8) -> LinearModel:
    """Multinomial logistic regression by full-batch gradient descent.

    Zero initialization makes the fit deterministic; training stops when the
    loss decrease drops below ``tol`` or ``max_iters`` is reached.
    """
    groups = [np.atleast_2d(np.asarray(g, dtype=np.float64)) for g in support_groups]
    if len(groups) < 2:
        raise ValueError("linear_fit requires at least 2 classes")
    X = np.concatenate(groups, axis=0)
    labels = np.concatenate([np.full(g.shape[0], i, dtype=np.intp)
                             for i, g in enumerate(groups)])
    n_classes, d = len(groups), X.shape[1]
    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    prev_loss = np.inf
    loss = np.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        loss, gW, gb = softmax_xent_loss_grad(W, b, X, labels, l2_strength)
        if not np.isfinite(loss):
            raise ArithmeticError(
                "loss diverged; reduce the learning rate"
            )
        if prev_loss - loss < tol:
            break
        W -= learning_rate * gW
        b -= learning_rate * gb
        prev_loss = loss
    return LinearModel(weights=W, bias=b, n_iters=iters, final_loss=float(loss))


def linear_predict(query, model: LinearModel) -> int:
    """argmax of W z + b; ties go to the lowest index."""
    logits = model.weights @ np.asarray(query, dtype=np.float64) + model.bias
    return int(np.argmax(logits))


def linear_predict_batch(queries, model: LinearModel) -> np.ndarray:
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    return np.argmax(q @ model.weights.T + model.bias, axis=1)
