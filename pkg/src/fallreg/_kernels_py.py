"""Pure-numpy kernels: chunk-level building blocks behind fit and batch
prediction. Drop-in equivalents of the compiled versions in _kernels.pyx;
each call only touches rows [start, stop) of the output arrays, so chunks
can run on any thread schedule without changing the result.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def fit_chunk(xt, y, anchors, lam, assign, beta, resid, corr, start, stop):
    """Per-sample closed-form local fits for rows [start, stop).

    xt: (n, d') augmented inputs; y: (n, m); anchors: (k, d', m).
    Writes anchor assignment, shrinkage, residual norm, and the rank-one
    correction matrix for each row.
    """
    k, dp, m = anchors.shape
    Xc = xt[start:stop]
    Yc = y[start:stop]
    preds = (Xc @ anchors.transpose(1, 0, 2).reshape(dp, k * m)).reshape(-1, k, m)
    R = Yc[:, None, :] - preds
    r2 = np.einsum("ckm,ckm->ck", R, R)
    best = np.argmin(r2, axis=1)  # ties resolve to the lowest anchor index
    rows = np.arange(len(best))
    s = np.einsum("cd,cd->c", Xc, Xc)
    denom = lam + s
    rbest = R[rows, best]
    assign[start:stop] = best
    beta[start:stop] = lam / denom
    resid[start:stop] = np.sqrt(r2[rows, best])
    corr[start:stop] = Xc[:, :, None] * (rbest / denom[:, None])[:, None, :]


def predict_chunk(
    xq, train_x, corr, anchors, assign, k_pred, eps, with_bias, out, start, stop
):
    """Neighbor-averaged model predictions for query rows [start, stop).

    For each query: find the k_pred nearest training rows (ties toward the
    lower index), weight them inversely to distance (exact matches within
    eps collapse to uniform weight over the matches), average the local
    models, and apply the averaged model to the query.
    """
    n = train_x.shape[0]
    row_ids = np.arange(n)
    for i in range(start, stop):
        diff = train_x - xq[i]
        dist = np.sqrt(np.einsum("nd,nd->n", diff, diff))
        sel = np.lexsort((row_ids, dist))[:k_pred]
        dsel = dist[sel]
        exact = dsel <= eps
        if exact.any():
            w = exact / exact.sum()
        else:
            inv = 1.0 / dsel
            w = inv / inv.sum()
        models = corr[sel] + anchors[assign[sel]]
        w_pred = np.einsum("j,jdm->dm", w, models)
        if with_bias:
            out[i] = xq[i] @ w_pred[:-1] + w_pred[-1]
        else:
            out[i] = xq[i] @ w_pred
