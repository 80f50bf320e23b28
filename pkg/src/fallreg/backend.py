"""Kernel backend selection and deterministic chunked execution.

The compiled extension (fallreg._kernels) is used when it importable;
otherwise the numpy fallback (fallreg._kernels_py) takes over. The
FALLREG_BACKEND environment variable ("compiled" or "python") forces a
choice. Work is split into fixed-size chunks that are identical regardless
of thread count, and every chunk writes a disjoint slice of the output, so
results are bit-identical for any degree of parallelism.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from fallreg import _kernels_py

try:
    from fallreg import _kernels  # compiled extension, optional
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None

FIT_CHUNK = 1024
PREDICT_CHUNK = 64


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _kernels is not None else ("python",)


def get_kernels(backend: str | None = None):
    """Resolve a kernel module by name, env override, or availability."""
    if backend is None:
        backend = os.environ.get("FALLREG_BACKEND")
    if backend is None:
        return _kernels if _kernels is not None else _kernels_py
    if backend == "python":
        return _kernels_py
    if backend == "compiled":
        if _kernels is None:
            raise RuntimeError(
                "compiled backend requested but fallreg._kernels is not built"
            )
        return _kernels
    raise ValueError(f"unknown backend {backend!r}")


def active_backend() -> str:
    """Name of the backend that will be used by default."""
    return get_kernels().BACKEND_NAME


def _run_chunks(task, total: int, chunk: int, threads: int) -> None:
    spans = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if threads <= 1 or len(spans) <= 1:
        for start, stop in spans:
            task(start, stop)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for fut in [pool.submit(task, start, stop) for start, stop in spans]:
            fut.result()


def run_fit(
    xt: np.ndarray,
    y: np.ndarray,
    anchors: np.ndarray,
    lam: float,
    threads: int = 1,
    backend: str | None = None,
):
    """Run the per-sample fit kernel over all rows.

    Returns (assignments, betas, residual_norms, corrections).
    """
    kern = get_kernels(backend)
    n = xt.shape[0]
    _, dp, m = anchors.shape
    assign = np.empty(n, dtype=np.int64)
    beta = np.empty(n)
    resid = np.empty(n)
    corr = np.empty((n, dp, m))
    xt = np.ascontiguousarray(xt, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    anchors = np.ascontiguousarray(anchors, dtype=np.float64)

    def task(start, stop):
        kern.fit_chunk(xt, y, anchors, lam, assign, beta, resid, corr, start, stop)

    _run_chunks(task, n, FIT_CHUNK, threads)
    return assign, beta, resid, corr


def run_predict(
    xq: np.ndarray,
    train_x: np.ndarray,
    corr: np.ndarray,
    anchors: np.ndarray,
    assign: np.ndarray,
    k_pred: int,
    eps: float,
    with_bias: bool,
    threads: int = 1,
    backend: str | None = None,
) -> np.ndarray:
    """Run the neighbor-averaged prediction kernel over all query rows."""
    kern = get_kernels(backend)
    q = xq.shape[0]
    out = np.empty((q, corr.shape[2]))
    xq = np.ascontiguousarray(xq, dtype=np.float64)
    train_x = np.ascontiguousarray(train_x, dtype=np.float64)
    corr = np.ascontiguousarray(corr, dtype=np.float64)
    anchors = np.ascontiguousarray(anchors, dtype=np.float64)
    assign = np.ascontiguousarray(assign, dtype=np.int64)

    def task(start, stop):
        kern.predict_chunk(
            xq, train_x, corr, anchors, assign, k_pred, eps, with_bias, out, start, stop
        )

    _run_chunks(task, q, PREDICT_CHUNK, threads)
    return out
