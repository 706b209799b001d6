"""Pure-Python/numpy fallback for the compiled kernels.

Same contracts and bit-identical outputs as ``fklab._core`` (randomness
comes in as pre-drawn uniforms), just slower on the sequential parts.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph


def component_roots(n_nodes, eu, ev, open_mask, fu, fv):
    rows = np.concatenate([eu[open_mask.astype(bool)], fu])
    cols = np.concatenate([ev[open_mask.astype(bool)], fv])
    if rows.size == 0:
        return np.arange(n_nodes, dtype=np.int32)
    data = np.ones(rows.size, dtype=np.int8)
    adj = sparse.coo_matrix((data, (rows, cols)), shape=(n_nodes, n_nodes))
    _, labels = csgraph.connected_components(adj, directed=False)
    return labels.astype(np.int32)


def single_bond_sweep(n_nodes, eu, ev, open_mask, indptr, nbr, nbr_edge, p, q, uniforms):
    p_cut = p / (p + q * (1.0 - p))
    n_edges = eu.shape[0]
    stamp = np.full(n_nodes, -1, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int32)
    for j in range(n_edges):
        u = int(eu[j])
        v = int(ev[j])
        connected = False
        head = tail = 0
        queue[tail] = u
        tail += 1
        stamp[u] = j
        while head < tail and not connected:
            x = int(queue[head])
            head += 1
            for a in range(indptr[x], indptr[x + 1]):
                eid = nbr_edge[a]
                if eid == j:
                    continue
                if eid >= 0 and not open_mask[eid]:
                    continue
                y = nbr[a]
                if stamp[y] == j:
                    continue
                if y == v:
                    connected = True
                    break
                stamp[y] = j
                queue[tail] = y
                tail += 1
        threshold = p if connected else p_cut
        open_mask[j] = 1 if uniforms[j] < threshold else 0
    return None


class _UnionFind:
    __slots__ = ("parent", "size")

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return 0
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return 1


def enumerate_counts(n_nodes, eu, ev, fu, fv):
    n_edges = eu.shape[0]
    n_masks = 1 << n_edges
    k_out = np.empty(n_masks, dtype=np.uint8)
    m_out = np.empty(n_masks, dtype=np.uint8)
    edges = list(zip(eu.tolist(), ev.tolist()))
    fused = list(zip(fu.tolist(), fv.tolist()))
    for mask in range(n_masks):
        uf = _UnionFind(n_nodes)
        merges = 0
        opens = 0
        for a, b in fused:
            merges += uf.union(a, b)
        for i, (a, b) in enumerate(edges):
            if (mask >> i) & 1:
                opens += 1
                merges += uf.union(a, b)
        k_out[mask] = n_nodes - merges
        m_out[mask] = opens
    return k_out, m_out
