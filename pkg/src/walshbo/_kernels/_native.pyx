# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Mirrors ``pure.py`` operation-for-operation: the Dinic traversal and the
augmentation arithmetic follow the same order, so residual networks and cut
sides are identical across lanes.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def maxflow_mincut(int num_nodes,
                   cnp.int64_t[::1] arc_to,
                   cnp.float64_t[::1] arc_cap,
                   cnp.int64_t[::1] adj_start,
                   cnp.int64_t[::1] adj_arc,
                   int source, int sink, double eps):
    """Dinic max-flow; see the pure lane for the interface contract."""
    cdef cnp.float64_t[::1] cap = np.array(arc_cap, dtype=np.float64, copy=True)
    cdef cnp.int64_t[::1] level = np.empty(num_nodes, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = np.empty(num_nodes, dtype=np.int64)
    cdef cnp.int64_t[::1] ptr = np.empty(num_nodes, dtype=np.int64)
    cdef cnp.int64_t[::1] path = np.empty(num_nodes, dtype=np.int64)
    cdef cnp.npy_intp path_len = 0
    cdef double total = 0.0, bottleneck
    cdef cnp.int64_t u, v, a, k
    cdef cnp.npy_intp head, tail, i
    cdef bint advanced

    while True:
        for i in range(num_nodes):
            level[i] = -1
        level[source] = 0
        queue[0] = source
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(adj_start[u], adj_start[u + 1]):
                a = adj_arc[k]
                v = arc_to[a]
                if cap[a] > eps and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[tail] = v
                    tail += 1
        if level[sink] < 0:
            break

        for i in range(num_nodes):
            ptr[i] = adj_start[i]
        path_len = 0
        u = source
        while True:
            if u == sink:
                bottleneck = cap[path[0]]
                for i in range(1, path_len):
                    if cap[path[i]] < bottleneck:
                        bottleneck = cap[path[i]]
                for i in range(path_len):
                    a = path[i]
                    cap[a] -= bottleneck
                    cap[a ^ 1] += bottleneck
                total += bottleneck
                path_len = 0
                u = source
                continue
            advanced = False
            while ptr[u] < adj_start[u + 1]:
                a = adj_arc[ptr[u]]
                v = arc_to[a]
                if cap[a] > eps and level[v] == level[u] + 1:
                    path[path_len] = a
                    path_len += 1
                    u = v
                    advanced = True
                    break
                ptr[u] += 1
            if not advanced:
                if u == source:
                    break
                level[u] = -1
                path_len -= 1
                a = path[path_len]
                u = arc_to[a ^ 1]
                ptr[u] += 1

    side = np.zeros(num_nodes, dtype=bool)
    cdef cnp.uint8_t[::1] side_v = side.view(np.uint8)
    side_v[source] = 1
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(adj_start[u], adj_start[u + 1]):
            a = adj_arc[k]
            v = arc_to[a]
            if cap[a] > eps and not side_v[v]:
                side_v[v] = 1
                queue[tail] = v
                tail += 1
    return total, side


def bqp_scan(double constant,
             cnp.float64_t[::1] linear,
             cnp.float64_t[:, ::1] quad,
             chunk=None):
    """Exhaustive minimum of c + b.x + x'Ax over {0,1}^n in a C loop.

    Same enumeration order and tie-break as the pure lane (lowest code wins,
    bit 1 most significant); ``chunk`` is accepted for interface parity.
    """
    cdef int n = linear.shape[0]
    cdef cnp.int64_t total = (<cnp.int64_t> 1) << n
    cdef cnp.int64_t code, best_code = 0
    cdef double val, best_val
    cdef int i, j, nset
    cdef cnp.int64_t[::1] set_idx = np.empty(n, dtype=np.int64)
    best_val = np.inf
    for code in range(total):
        nset = 0
        val = constant
        for i in range(n):
            if (code >> (n - 1 - i)) & 1:
                val += linear[i]
                set_idx[nset] = i
                nset += 1
        for i in range(nset):
            for j in range(i + 1, nset):
                val += quad[set_idx[i], set_idx[j]]
        if val < best_val:
            best_val = val
            best_code = code
    return int(best_code), float(best_val)
