"""Kernel backend selection: compiled extension if available, numpy/scipy otherwise.

Set FKLAB_BACKEND=python (or =compiled) to force a choice; the default
tries the compiled module first.  Both backends are bit-compatible, so
the switch never changes numerical output, only speed.
"""

from __future__ import annotations

import os

import numpy as np

_requested = os.environ.get("FKLAB_BACKEND", "").strip().lower()

if _requested not in ("", "python", "compiled"):
    raise RuntimeError(f"FKLAB_BACKEND must be 'python' or 'compiled', got {_requested!r}")

if _requested == "python":
    from . import _core_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _core_py as _impl

        BACKEND = "python"

component_roots = _impl.component_roots
single_bond_sweep = _impl.single_bond_sweep
enumerate_counts = _impl.enumerate_counts


def adjacency_csr(n_nodes, eu, ev, fu, fv):
    """CSR adjacency over nodes: (indptr, neighbour, edge index; -1 marks fused bonds)."""
    heads = np.concatenate([eu, ev, fu, fv]).astype(np.int64)
    tails = np.concatenate([ev, eu, fv, fu]).astype(np.int32)
    ids = np.concatenate([
        np.arange(eu.shape[0], dtype=np.int32),
        np.arange(eu.shape[0], dtype=np.int32),
        np.full(fu.shape[0] * 2, -1, dtype=np.int32),
    ])
    order = np.argsort(heads, kind="stable")
    counts = np.bincount(heads, minlength=n_nodes)
    indptr = np.zeros(n_nodes + 1, dtype=np.int32)
    np.cumsum(counts, out=indptr[1:])
    return indptr, tails[order], ids[order]


def min_index_labels(roots: np.ndarray, n_real: int) -> np.ndarray:
    """Canonical labels: each cluster is named by its smallest real-vertex index.

    ``roots`` may label nodes arbitrarily (any backend); the result is
    backend-independent.  Ghost nodes (index >= n_real) are dropped from the
    output but shared labels still reflect fusion through them.
    """
    reps = np.full(roots.max() + 1, np.iinfo(np.int32).max, dtype=np.int32)
    np.minimum.at(reps, roots[:n_real], np.arange(n_real, dtype=np.int32))
    return reps[roots[:n_real]]
