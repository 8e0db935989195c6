"""Pure-Python hot kernels (fallback when the compiled extension is absent).

Signatures and results match ``_ckernels`` exactly, including the
floating-point summation order of :func:`trapezoid_area`.
"""
from heapq import heapify, heappop, heappush
from math import inf

import numpy as np

BACKEND = "python"


class Workspace:
    """Placeholder; the pure-Python search keeps no reusable scratch."""


def nearest_hospital(indptr, nbr, weight, eid, removed, sources, dist, nearest, ws=None):
    """Multi-source Dijkstra with lexicographic (distance, hospital) labels.

    Writes into ``dist`` (inf if unreachable) and ``nearest`` (source node
    index, -1 if unreachable). ``sources`` must be sorted ascending so
    that comparing node indices compares hospital ids.
    """
    ptr = indptr.tolist()
    adj = nbr.tolist()
    w = weight.tolist()
    e = eid.tolist()
    gone = removed.tolist()
    n = len(ptr) - 1
    d = [inf] * n
    h = [-1] * n
    heap = []
    for s in sources.tolist():
        d[s] = 0.0
        h[s] = s
        heap.append((0.0, s, s))
    heapify(heap)
    while heap:
        du, hu, u = heappop(heap)
        if du != d[u] or hu != h[u]:
            continue
        for j in range(ptr[u], ptr[u + 1]):
            if gone[e[j]]:
                continue
            v = adj[j]
            nd = du + w[j]
            dv = d[v]
            if nd < dv or (nd == dv and hu < h[v]):
                d[v] = nd
                h[v] = hu
                heappush(heap, (nd, hu, v))
    dist[:] = d
    nearest[:] = h


def access_points(dist, pop):
    """(distance, cumulative population) points for all finite distances."""
    finite = np.isfinite(dist)
    d = dist[finite]
    if d.size == 0:
        return []
    order = np.argsort(d, kind="stable")
    d = d[order]
    cum = np.cumsum(pop[finite][order], dtype=np.int64)
    last = np.flatnonzero(np.append(d[1:] != d[:-1], True))
    return list(zip(d[last].tolist(), cum[last].tolist()))


def integrate_points(points, upper):
    area = 0.0
    pd = pp = None
    for d, p in points:
        if d > upper:
            break
        if pd is not None:
            area += 0.5 * (pp + p) * (d - pd)
        pd, pp = d, p
    if pd is not None:
        area += pp * (upper - pd)
    return area


def trapezoid_area(dist, pop, upper):
    """Trapezoid area under the cumulative population curve on [0, upper]."""
    keep = dist <= upper
    return integrate_points(access_points(dist[keep], pop[keep]), upper)


def field_area(indptr, nbr, weight, eid, removed, sources, pop, upper, dist, nearest,
               stop_early=False, ws=None):
    """Distance field plus trapezoid area on [0, upper] (``stop_early`` is ignored)."""
    nearest_hospital(indptr, nbr, weight, eid, removed, sources, dist, nearest)
    if pop is None:
        return 0.0
    return trapezoid_area(dist, pop, upper)
