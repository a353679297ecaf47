"""Connected-component labelling kernels.

Two interchangeable implementations compute, for an undirected edge list over
nodes ``0..n-1``, the smallest node id of each node's component:

* ``labels_numba``: union-find with path halving, compiled with ``@njit``.
* ``labels_numpy``: vectorised min-label propagation with pointer jumping.

``component_labels`` dispatches to the numba kernel unless the environment
variable ``KGERASE_DISABLE_NUMBA`` is set to a truthy value (or numba is not
importable), in which case the numpy path is used.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def _numba_disabled() -> bool:
    return os.environ.get("KGERASE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


def labels_numpy(n_nodes: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    labels = np.arange(n_nodes, dtype=np.int64)
    if n_nodes == 0 or len(src) == 0:
        return labels
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    while True:
        before = labels.copy()
        m = np.minimum(labels[src], labels[dst])
        # hook roots, not just endpoints, so whole trees merge in one round
        np.minimum.at(labels, labels[src], m)
        np.minimum.at(labels, labels[dst], m)
        np.minimum.at(labels, src, m)
        np.minimum.at(labels, dst, m)
        # pointer jumping until every node points at its tree root
        while True:
            jumped = labels[labels]
            if np.array_equal(jumped, labels):
                break
            labels = jumped
        if np.array_equal(labels, before):
            return labels


def _labels_python(n_nodes, src, dst):
    parent = np.arange(n_nodes, dtype=np.int64)
    for k in range(src.shape[0]):
        a = src[k]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = dst[k]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a < b:
            parent[b] = a
        elif b < a:
            parent[a] = b
    out = np.empty(n_nodes, dtype=np.int64)
    for i in range(n_nodes):
        r = i
        while parent[r] != r:
            r = parent[r]
        out[i] = r
    return out


if HAS_NUMBA:
    _labels_jit = njit(cache=True)(_labels_python)

    def labels_numba(n_nodes: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        return _labels_jit(
            np.int64(n_nodes),
            np.ascontiguousarray(src, dtype=np.int64),
            np.ascontiguousarray(dst, dtype=np.int64),
        )

else:  # pragma: no cover
    labels_numba = None


def component_labels(n_nodes: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Return the minimum node id of each node's connected component."""
    if HAS_NUMBA and not _numba_disabled():
        return labels_numba(n_nodes, src, dst)
    return labels_numpy(n_nodes, src, dst)


def backend() -> str:
    return "numba" if HAS_NUMBA and not _numba_disabled() else "numpy"
