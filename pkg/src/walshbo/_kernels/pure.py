"""Pure-Python/numpy implementations of the hot kernels.

The compiled lane in ``_native`` implements the same two routines with the
same traversal and arithmetic order, so both lanes return identical results;
this module is the fallback when the extension is not built.
"""

from __future__ import annotations

import numpy as np


def maxflow_mincut(num_nodes, arc_to, arc_cap, adj_start, adj_arc,
                   source, sink, eps):
    """Dinic max-flow on a small dense s-t network with real capacities.

    Arcs are stored in reverse pairs (arc k and k^1). ``arc_cap`` is copied
    and treated as residual capacity. Returns (flow_value, source_side) where
    source_side marks nodes reachable from the source in the final residual
    network over arcs with residual > eps — the componentwise-minimal min cut.
    """
    cap = np.array(arc_cap, dtype=np.float64, copy=True)
    to = arc_to
    level = np.empty(num_nodes, dtype=np.int64)
    queue = np.empty(num_nodes, dtype=np.int64)
    ptr = np.empty(num_nodes, dtype=np.int64)
    path = []
    total = 0.0

    while True:
        # BFS level graph over unsaturated arcs
        level[:] = -1
        level[source] = 0
        queue[0] = source
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(adj_start[u], adj_start[u + 1]):
                a = adj_arc[k]
                v = to[a]
                if cap[a] > eps and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[tail] = v
                    tail += 1
        if level[sink] < 0:
            break

        # blocking flow via DFS with per-node arc pointers
        ptr[:] = adj_start[:-1]
        path.clear()
        u = source
        while True:
            if u == sink:
                bottleneck = cap[path[0]]
                for a in path[1:]:
                    if cap[a] < bottleneck:
                        bottleneck = cap[a]
                for a in path:
                    cap[a] -= bottleneck
                    cap[a ^ 1] += bottleneck
                total += bottleneck
                path.clear()
                u = source
                continue
            advanced = False
            while ptr[u] < adj_start[u + 1]:
                a = adj_arc[ptr[u]]
                v = to[a]
                if cap[a] > eps and level[v] == level[u] + 1:
                    path.append(a)
                    u = v
                    advanced = True
                    break
                ptr[u] += 1
            if not advanced:
                if u == source:
                    break
                level[u] = -1
                a = path.pop()
                u = to[a ^ 1]
                ptr[u] += 1

    # residual reachability from the source
    side = np.zeros(num_nodes, dtype=bool)
    side[source] = True
    queue[0] = source
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(adj_start[u], adj_start[u + 1]):
            a = adj_arc[k]
            v = to[a]
            if cap[a] > eps and not side[v]:
                side[v] = True
                queue[tail] = v
                tail += 1
    return total, side


def bqp_scan(constant, linear, quad, chunk=1 << 16):
    """Exhaustive minimum of c + b.x + x'Ax over {0,1}^n, vectorized.

    Enumerates integer codes with bit 1 most significant; ties keep the
    lowest code. Returns (best_code, best_value).
    """
    n = linear.shape[0]
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_val = np.inf
    best_code = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(np.float64)
        vals = constant + bits @ linear
        if n > 1:
            vals += np.einsum("ij,ij->i", bits @ quad, bits)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_code = int(codes[k])
    return best_code, best_val
