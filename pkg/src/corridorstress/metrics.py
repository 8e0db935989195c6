"""Nearest-hospital distance fields and corridor importance measures.

Distances are kilometres along corridors. A municipality that cannot reach
any hospital has distance ``UNREACHABLE`` (``math.inf``) and no nearest
hospital. Ties between equally near hospitals go to the smaller id.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .network import CorridorId, CorridorNetwork, MaskedView, as_view

UNREACHABLE = math.inf
DEFAULT_SPEED_KMH = 50.0
DEFAULT_CUTOFF_KM = 100.0
DEFAULT_THRESHOLDS_MIN = (15.0, 30.0, 60.0)


class _UndefinedLocal:
    """HA of a hospital municipality: excluded from aggregation."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNDEFINED_LOCAL"


UNDEFINED_LOCAL = _UndefinedLocal()


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Per-municipality distance to, and index of, the nearest hospital.

    ``dist`` and ``nearest`` are aligned with ``net.ids``; ``nearest`` holds
    a node index or -1.
    """

    net: CorridorNetwork
    dist: np.ndarray
    nearest: np.ndarray

    def distance(self, muni: str) -> float:
        return float(self.dist[self.net.index[muni]])

    def nearest_hospital(self, muni: str) -> str | None:
        h = int(self.nearest[self.net.index[muni]])
        return self.net.ids[h] if h >= 0 else None

    def as_dict(self) -> dict[str, tuple[float, str | None]]:
        ids = self.net.ids
        return {m: (float(d), ids[h] if h >= 0 else None)
                for m, d, h in zip(ids, self.dist.tolist(), self.nearest.tolist())}

    @property
    def max_distance(self) -> float:
        finite = self.dist[np.isfinite(self.dist)]
        return float(finite.max()) if finite.size else 0.0


@dataclass(frozen=True)
class AccessCurve:
    """Cumulative population reachable within each sampled distance."""

    points: tuple[tuple[float, int], ...]
    total_population_considered: int

    @property
    def max_distance(self) -> float:
        return self.points[-1][0] if self.points else 0.0


@dataclass(frozen=True)
class CorridorScore:
    corridor_id: CorridorId
    acis: float
    ha_impact_pct: float
    betweenness: float


@dataclass(frozen=True)
class ThresholdCrossings:
    crossings: dict[float, int]
    newly_unreachable: int


def compute_field(net: CorridorNetwork, removed: np.ndarray, dist: np.ndarray | None = None,
                  nearest: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run the kernel into (optionally caller-owned) scratch arrays."""
    n = len(net.ids)
    if dist is None:
        dist = np.empty(n, dtype=np.float64)
    if nearest is None:
        nearest = np.empty(n, dtype=np.int32)
    kernels.nearest_hospital(net.indptr, net.nbr, net.weight, net.eid, removed,
                             net.hospital_nodes, dist, nearest)
    return dist, nearest


def nearest_hospital_field(view: CorridorNetwork | MaskedView) -> DistanceField:
    view = as_view(view)
    dist, nearest = compute_field(view.net, view.removed)
    dist.setflags(write=False)
    nearest.setflags(write=False)
    return DistanceField(view.net, dist, nearest)


def _pop_array(net: CorridorNetwork, populations) -> np.ndarray:
    if populations is None:
        return net.population
    if isinstance(populations, Mapping):
        return np.array([populations[m] for m in net.ids], dtype=np.int64)
    arr = np.asarray(populations, dtype=np.int64)
    if arr.shape != (len(net.ids),):
        raise ValueError("populations must have one entry per municipality")
    return arr


def access_curve(field: DistanceField, populations=None) -> AccessCurve:
    """One point per distinct finite distance; unreachable towns contribute nothing."""
    pop = _pop_array(field.net, populations)
    pts = kernels.access_points(field.dist, pop)
    return AccessCurve(tuple(pts), int(pop.sum()))


def integrate_curve(curve: AccessCurve, upper: float) -> float:
    """Trapezoid area through the curve points on [0, upper].

    The last sample at or below ``upper`` is held flat out to ``upper``;
    samples beyond ``upper`` are ignored and integration starts at the first
    sample.
    """
    if upper < 0:
        raise ValueError(f"upper limit must be >= 0, got {upper}")
    return kernels.integrate_points(curve.points, upper)


def acis(base: AccessCurve, stressed: AccessCurve) -> float:
    """Baseline minus stressed area, both on [0, largest baseline distance]."""
    upper = base.max_distance
    return integrate_curve(base, upper) - integrate_curve(stressed, upper)


def ha_municipality(pop: int, distance: float):
    if pop < 0:
        raise ValueError("population must be >= 0")
    if distance == 0:
        return UNDEFINED_LOCAL
    if math.isinf(distance):
        return 0.0
    return pop / distance


def ha_from_arrays(dist: np.ndarray, pop: np.ndarray, is_hospital: np.ndarray) -> float:
    sel = ~is_hospital
    denom = int(pop[sel].sum())
    if denom == 0:
        return 0.0
    p = pop[sel].astype(np.float64)
    # p / inf == 0 covers unreachable towns
    return float(np.sum((p / dist[sel]) * p) / denom)


def ha_total(field: DistanceField, populations=None) -> float:
    """Population-weighted mean of ``pop / distance`` over non-hospital towns."""
    net = field.net
    if net.is_hospital.all():
        raise ValueError("every municipality hosts a hospital; HA is undefined")
    return ha_from_arrays(field.dist, _pop_array(net, populations), net.is_hospital)


def ha_impact(base_ha: float, stressed_ha: float) -> float:
    if not base_ha > 0:
        raise ValueError(f"baseline HA must be positive, got {base_ha}")
    return (base_ha - stressed_ha) / base_ha * 100.0


def edge_betweenness_hospital(net: CorridorNetwork, cutoff: float = DEFAULT_CUTOFF_KM,
                              rel_tol: float = 1e-9) -> dict[CorridorId, float]:
    """Edge betweenness over (municipality, hospital) pairs within ``cutoff`` km.

    Brandes accumulation run from every hospital. Path lengths that agree
    within ``rel_tol`` times their length count as equally short.
    """
    ptr, nbr, w, eid = (a.tolist() for a in (net.indptr, net.nbr, net.weight, net.eid))
    score = [0.0] * len(net.corridor_ids)
    for t in net.hospital_nodes.tolist():
        dist = {t: 0.0}
        sigma = {t: 1}
        preds: dict[int, list[tuple[int, int]]] = {t: []}
        settled = []
        done = set()
        heap = [(0.0, t)]
        while heap:
            d, u = heappop(heap)
            if u in done:
                continue
            if d > cutoff:
                break
            done.add(u)
            settled.append(u)
            for j in range(ptr[u], ptr[u + 1]):
                v = nbr[j]
                if v in done:
                    continue
                nd = d + w[j]
                dv = dist.get(v)
                if dv is None or nd < dv - rel_tol * nd:
                    dist[v] = nd
                    sigma[v] = sigma[u]
                    preds[v] = [(u, eid[j])]
                    heappush(heap, (nd, v))
                elif abs(nd - dv) <= rel_tol * max(nd, dv):
                    sigma[v] += sigma[u]
                    preds[v].append((u, eid[j]))
        delta = dict.fromkeys(settled, 0.0)
        for x in reversed(settled):
            for u, e in preds[x]:
                c = sigma[u] / sigma[x] * (1.0 + delta[x])
                score[e] += c
                delta[u] += c
    return dict(zip(net.corridor_ids, score))


def travel_minutes(distance: float, speed_kmh: float = DEFAULT_SPEED_KMH) -> float:
    if math.isinf(distance):
        return UNREACHABLE
    if distance < 0:
        raise ValueError("distance must be >= 0")
    return distance / speed_kmh * 60.0


def crossings_from_arrays(base: np.ndarray, stressed: np.ndarray, pop: np.ndarray,
                          thresholds: Sequence[float], speed_kmh: float) -> ThresholdCrossings:
    base_min = base / speed_kmh * 60.0
    new_min = stressed / speed_kmh * 60.0  # inf stays inf
    out = {}
    for tau in thresholds:
        hit = (base_min < tau) & (new_min >= tau)
        out[float(tau)] = int(pop[hit].sum())
    lost = np.isfinite(base) & ~np.isfinite(stressed)
    return ThresholdCrossings(out, int(pop[lost].sum()))


def threshold_crossings(base: DistanceField, stressed: DistanceField, populations=None,
                        thresholds: Iterable[float] = DEFAULT_THRESHOLDS_MIN,
                        speed_kmh: float = DEFAULT_SPEED_KMH) -> ThresholdCrossings:
    """Population pushed from under each travel-time threshold to at or above it."""
    if base.net is not stressed.net and base.net.ids != stressed.net.ids:
        raise ValueError("fields cover different municipality sets")
    pop = _pop_array(base.net, populations)
    return crossings_from_arrays(base.dist, stressed.dist, pop, tuple(thresholds), speed_kmh)
