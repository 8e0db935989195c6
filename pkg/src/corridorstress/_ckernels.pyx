# cython: language_level=3
"""Compiled hot kernels: multi-source Dijkstra and trapezoid curve area.

The kernels release the GIL. Scratch memory lives in a ``Workspace``;
give each thread its own (omitting it allocates a fresh one per call).
"""
from libc.stdlib cimport malloc, realloc, free, qsort
from libc.math cimport INFINITY

BACKEND = "cython"


cdef struct Item:
    double d
    int h
    int node


cdef inline bint _before(Item* a, Item* b) noexcept nogil:
    if a.d < b.d:
        return True
    if a.d == b.d and a.h < b.h:
        return True
    return False


cdef inline void _push(Item* heap, Py_ssize_t* size, double d, int h, int node) noexcept nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    cdef Item tmp
    size[0] += 1
    heap[i].d = d
    heap[i].h = h
    heap[i].node = node
    while i > 0:
        parent = (i - 1) >> 1
        if _before(&heap[i], &heap[parent]):
            tmp = heap[i]
            heap[i] = heap[parent]
            heap[parent] = tmp
            i = parent
        else:
            break


cdef inline Item _pop(Item* heap, Py_ssize_t* size) noexcept nogil:
    cdef Item top = heap[0]
    cdef Item tmp
    cdef Py_ssize_t i = 0, l, r, m
    size[0] -= 1
    heap[0] = heap[size[0]]
    while True:
        l = 2 * i + 1
        r = l + 1
        m = i
        if l < size[0] and _before(&heap[l], &heap[m]):
            m = l
        if r < size[0] and _before(&heap[r], &heap[m]):
            m = r
        if m == i:
            break
        tmp = heap[i]
        heap[i] = heap[m]
        heap[m] = tmp
        i = m
    return top


cdef class Workspace:
    """Reusable heap buffer; one per worker thread."""

    cdef Item* heap
    cdef Py_ssize_t cap

    def __cinit__(self):
        self.heap = NULL
        self.cap = 0

    def __dealloc__(self):
        free(self.heap)

    cdef Item* reserve(self, Py_ssize_t cap) except NULL:
        cdef Item* grown
        if cap > self.cap:
            grown = <Item*> realloc(self.heap, cap * sizeof(Item))
            if grown == NULL:
                raise MemoryError()
            self.heap = grown
            self.cap = cap
        return self.heap


cdef double _search(const int[::1] indptr, const int[::1] nbr, const double[::1] weight,
                    const int[::1] eid, const unsigned char[::1] removed, const int[::1] sources,
                    const long long[::1] pop, double upper, bint stop_early,
                    double[::1] dist, int[::1] nearest, Item* heap) noexcept nogil:
    # Nodes are settled in nondecreasing (distance, hospital) order, so the
    # access curve is accumulated on the fly; equal distances form one point.
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t size = 0, i, j
    cdef Item it
    cdef int u, v, hu
    cdef double nd, area = 0.0, pd = 0.0, gd = 0.0
    cdef long long pp = 0, cum = 0
    cdef bint started = False, open_group = False
    for i in range(n):
        dist[i] = INFINITY
        nearest[i] = -1
    for i in range(sources.shape[0]):
        u = sources[i]
        dist[u] = 0.0
        nearest[u] = u
        _push(heap, &size, 0.0, u, u)
    while size > 0:
        it = _pop(heap, &size)
        u = it.node
        if it.d != dist[u] or it.h != nearest[u]:
            continue
        if it.d <= upper:
            if open_group and it.d != gd:
                if started:
                    area += 0.5 * <double> (pp + cum) * (gd - pd)
                pd = gd
                pp = cum
                started = True
            gd = it.d
            open_group = True
            cum += pop[u]
        elif stop_early:
            break
        hu = it.h
        for j in range(indptr[u], indptr[u + 1]):
            if removed[eid[j]]:
                continue
            v = nbr[j]
            nd = it.d + weight[j]
            if nd < dist[v] or (nd == dist[v] and hu < nearest[v]):
                dist[v] = nd
                nearest[v] = hu
                _push(heap, &size, nd, hu, v)
    if open_group:
        if started:
            area += 0.5 * <double> (pp + cum) * (gd - pd)
        pd = gd
        pp = cum
        started = True
    if started:
        area += <double> pp * (upper - pd)
    return area


def nearest_hospital(const int[::1] indptr, const int[::1] nbr, const double[::1] weight,
                     const int[::1] eid, const unsigned char[::1] removed, const int[::1] sources,
                     double[::1] dist, int[::1] nearest, Workspace ws=None):
    """Multi-source Dijkstra with lexicographic (distance, hospital) labels."""
    field_area(indptr, nbr, weight, eid, removed, sources, None, -1.0, dist, nearest, False, ws)


def field_area(const int[::1] indptr, const int[::1] nbr, const double[::1] weight,
               const int[::1] eid, const unsigned char[::1] removed, const int[::1] sources,
               const long long[::1] pop, double upper, double[::1] dist, int[::1] nearest,
               bint stop_early=False, Workspace ws=None):
    """Distance field plus trapezoid area of its access curve on [0, upper].

    With ``stop_early`` the search ends past ``upper`` and entries beyond it
    stay unreached in ``dist``/``nearest``. ``pop=None`` skips the area.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef double area
    cdef Item* heap
    cdef long long dummy[1]
    cdef const long long[::1] p = pop if pop is not None else <long long[:1]> dummy
    if dist.shape[0] != n or nearest.shape[0] != n:
        raise ValueError("output arrays must have one entry per node")
    if pop is not None and pop.shape[0] != n:
        raise ValueError("pop must have one entry per node")
    if pop is None:
        upper = -1.0
        stop_early = False
    if ws is None:
        ws = Workspace()
    heap = ws.reserve(sources.shape[0] + nbr.shape[0] + 1)
    with nogil:
        area = _search(indptr, nbr, weight, eid, removed, sources, p, upper, stop_early,
                       dist, nearest, heap)
    return area


cdef struct Point:
    double d
    long long p


cdef int _cmp_point(const void* a, const void* b) noexcept nogil:
    cdef double x = (<Point*> a).d
    cdef double y = (<Point*> b).d
    return (x > y) - (x < y)


def trapezoid_area(const double[::1] dist, const long long[::1] pop, double upper):
    """Trapezoid area under the cumulative population curve on [0, upper]."""
    cdef Py_ssize_t n = dist.shape[0], k = 0, i
    cdef Point* pts
    cdef double area = 0.0, pd = 0.0, d
    cdef long long pp = 0, cum = 0
    cdef bint started = False
    if pop.shape[0] != n:
        raise ValueError("dist and pop differ in length")
    pts = <Point*> malloc((n + 1) * sizeof(Point))
    if pts == NULL:
        raise MemoryError()
    with nogil:
        for i in range(n):
            if dist[i] <= upper:
                pts[k].d = dist[i]
                pts[k].p = pop[i]
                k += 1
        qsort(pts, k, sizeof(Point), _cmp_point)
        for i in range(k):
            cum += pts[i].p
            if i + 1 < k and pts[i + 1].d == pts[i].d:
                continue
            d = pts[i].d
            if started:
                area += 0.5 * <double> (pp + cum) * (d - pd)
            pd = d
            pp = cum
            started = True
        if started:
            area += <double> pp * (upper - pd)
    free(pts)
    return area
