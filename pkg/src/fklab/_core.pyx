# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Hot kernels: union-find labeling, single-bond sweeps, mask enumeration.

Pure array-in / array-out functions; all randomness is passed in as
pre-drawn uniforms so the compiled and pure-Python backends produce
bit-identical results.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline int _find(cnp.int32_t* parent, int x) noexcept nogil:
    cdef int root = x
    cdef int nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


cdef inline int _union(cnp.int32_t* parent, cnp.int32_t* size, int a, int b) noexcept nogil:
    """Union by size; returns 1 if two distinct trees were merged."""
    cdef int ra = _find(parent, a)
    cdef int rb = _find(parent, b)
    cdef int tmp
    if ra == rb:
        return 0
    if size[ra] < size[rb]:
        tmp = ra; ra = rb; rb = tmp
    parent[rb] = ra
    size[ra] += size[rb]
    return 1


def component_roots(int n_nodes,
                    cnp.int32_t[::1] eu, cnp.int32_t[::1] ev,
                    cnp.uint8_t[::1] open_mask,
                    cnp.int32_t[::1] fu, cnp.int32_t[::1] fv):
    """Per-node root label under the open edges plus the fused (always-open) bonds."""
    parent_arr = np.arange(n_nodes, dtype=np.int32)
    size_arr = np.ones(n_nodes, dtype=np.int32)
    out = np.empty(n_nodes, dtype=np.int32)
    cdef cnp.int32_t[::1] parent = parent_arr
    cdef cnp.int32_t[::1] size = size_arr
    cdef cnp.int32_t[::1] roots = out
    cdef Py_ssize_t i
    cdef int n_edges = eu.shape[0]
    cdef int n_fused = fu.shape[0]
    with nogil:
        for i in range(n_fused):
            _union(&parent[0], &size[0], fu[i], fv[i])
        for i in range(n_edges):
            if open_mask[i]:
                _union(&parent[0], &size[0], eu[i], ev[i])
        for i in range(n_nodes):
            roots[i] = _find(&parent[0], <int> i)
    return out


def single_bond_sweep(int n_nodes,
                      cnp.int32_t[::1] eu, cnp.int32_t[::1] ev,
                      cnp.uint8_t[::1] open_mask,
                      cnp.int32_t[::1] indptr, cnp.int32_t[::1] nbr,
                      cnp.int32_t[::1] nbr_edge,
                      double p, double q,
                      double[::1] uniforms):
    """One heat-bath scan over all edges in index order (in-place).

    For each edge the endpoints' connectivity in the configuration minus that
    edge decides the conditional open probability: p when connected,
    p/(p+q(1-p)) otherwise.  Adjacency entries with nbr_edge < 0 are fused
    bonds and are always traversable.
    """
    cdef int n_edges = eu.shape[0]
    queue_arr = np.empty(n_nodes, dtype=np.int32)
    stamp_arr = np.full(n_nodes, -1, dtype=np.int64)
    cdef cnp.int32_t[::1] queue = queue_arr
    cdef cnp.int64_t[::1] stamp = stamp_arr
    cdef double p_cut = p / (p + q * (1.0 - p))
    cdef Py_ssize_t j, a
    cdef int u, v, head, tail, x, y, eid
    cdef bint connected
    with nogil:
        for j in range(n_edges):
            u = eu[j]
            v = ev[j]
            # breadth-first search from u, edge j excluded, early exit on v
            connected = False
            head = 0
            tail = 0
            queue[tail] = u
            tail += 1
            stamp[u] = j
            while head < tail and not connected:
                x = queue[head]
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
            if connected:
                open_mask[j] = 1 if uniforms[j] < p else 0
            else:
                open_mask[j] = 1 if uniforms[j] < p_cut else 0
    return None


def enumerate_counts(int n_nodes,
                     cnp.int32_t[::1] eu, cnp.int32_t[::1] ev,
                     cnp.int32_t[::1] fu, cnp.int32_t[::1] fv):
    """Component count and open-edge count for every edge bitmask.

    Bit i of the mask is the state of edge i.  Returns two uint8 arrays of
    length 2**n_edges.
    """
    cdef int n_edges = eu.shape[0]
    cdef Py_ssize_t n_masks = (<Py_ssize_t> 1) << n_edges
    k_out = np.empty(n_masks, dtype=np.uint8)
    m_out = np.empty(n_masks, dtype=np.uint8)
    parent_arr = np.empty(n_nodes, dtype=np.int32)
    size_arr = np.empty(n_nodes, dtype=np.int32)
    cdef cnp.uint8_t[::1] kv = k_out
    cdef cnp.uint8_t[::1] mv = m_out
    cdef cnp.int32_t[::1] parent = parent_arr
    cdef cnp.int32_t[::1] size = size_arr
    cdef Py_ssize_t mask
    cdef int i, merges, opens
    with nogil:
        for mask in range(n_masks):
            for i in range(n_nodes):
                parent[i] = i
                size[i] = 1
            merges = 0
            opens = 0
            for i in range(fu.shape[0]):
                merges += _union(&parent[0], &size[0], fu[i], fv[i])
            for i in range(n_edges):
                if (mask >> i) & 1:
                    opens += 1
                    merges += _union(&parent[0], &size[0], eu[i], ev[i])
            kv[mask] = <cnp.uint8_t> (n_nodes - merges)
            mv[mask] = <cnp.uint8_t> opens
    return k_out, m_out
