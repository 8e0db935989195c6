"""Single-corridor and neighbourhood deletion sweeps, plus ranking statistics.

Every deletion recomputes the full nearest-hospital field against a
shared, read-only baseline. Work is split into fixed chunks of focal
corridors and merged in corridor order, so the worker count never changes
the output. Neighbourhood replicates draw from a Philox stream keyed by
(seed, focal corridor, p) with the replicate index as counter, which makes
each mask independent of scheduling.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from . import kernels
from .metrics import (DEFAULT_CUTOFF_KM, DEFAULT_SPEED_KMH, DEFAULT_THRESHOLDS_MIN, CorridorScore,
                      compute_field, crossings_from_arrays, edge_betweenness_hospital, ha_from_arrays)
from .network import CorridorId, CorridorNetwork, DeletionMask, corridor_key, neighbors_of_corridor

DEFAULT_PROBABILITIES = (0.1, 0.25, 0.5, 0.75)
DEFAULT_REPLICATES = 100


@dataclass(frozen=True)
class SingleDeletionResult:
    corridor_id: CorridorId
    score: CorridorScore
    affected_population: int
    threshold_crossings: dict[float, int]
    newly_unreachable: int
    deltas: dict[str, tuple[float, float]]
    reassigned: dict[str, tuple[str | None, str | None]]


@dataclass(frozen=True)
class NeighborhoodConfig:
    probabilities: tuple[float, ...] = DEFAULT_PROBABILITIES
    replicates: int = DEFAULT_REPLICATES
    global_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        for p in self.probabilities:
            if not 0 < p < 1:
                raise ValueError(f"deletion probability must be in (0, 1), got {p}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0 <= self.global_seed < 2**64:
            raise ValueError("global_seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class NeighborhoodResult:
    corridor_id: CorridorId
    probability: float
    acis_mean: float
    acis_p90: float
    replicate_count: int
    replicates: tuple[float, ...] | None = None


@dataclass(frozen=True)
class RankTable:
    measure: str
    ids: tuple[CorridorId, ...]
    scores: tuple[float, ...]

    def rank(self) -> dict[CorridorId, int]:
        return {k: i + 1 for i, k in enumerate(self.ids)}

    def top(self, k: int) -> tuple[CorridorId, ...]:
        return self.ids[:k]


@dataclass
class Baseline:
    """Shared, read-only baseline state for a sweep."""

    net: CorridorNetwork
    dist: np.ndarray
    nearest: np.ndarray
    dist_max: float
    area: float
    ha: float
    betweenness: dict[CorridorId, float] = field(default_factory=dict)

    @classmethod
    def compute(cls, net: CorridorNetwork, cutoff: float | None = DEFAULT_CUTOFF_KM) -> "Baseline":
        dist, nearest = compute_field(net, net.mask_array(None))
        dist.setflags(write=False)
        nearest.setflags(write=False)
        dist_max = float(dist[np.isfinite(dist)].max())
        area = _field_area(net, net.mask_array(None), dist_max, np.empty_like(dist),
                           np.empty_like(nearest), False, None)
        ha = ha_from_arrays(dist, net.population, net.is_hospital) if not net.is_hospital.all() else math.nan
        btw = edge_betweenness_hospital(net, cutoff) if cutoff is not None else {}
        return cls(net, dist, nearest, dist_max, area, ha, btw)


def _field_area(net, removed, upper, dist, near, stop_early, ws) -> float:
    return kernels.field_area(net.indptr, net.nbr, net.weight, net.eid, removed, net.hospital_nodes,
                              net.population, upper, dist, near, stop_early, ws)


# -- parallel plumbing -----------------------------------------------------

_WORKER_STATE: dict = {}


def _init_process(payload):
    _WORKER_STATE["payload"] = payload


def _run_process(args):
    fn, chunk = args
    return fn(_WORKER_STATE["payload"], chunk)


def _chunks(n: int, size: int) -> list[range]:
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def _parallel(fn: Callable, payload, n_items: int, workers: int, chunk: int) -> list:
    """Apply ``fn(payload, chunk)`` over fixed chunks; concatenate in order."""
    chunks = _chunks(n_items, chunk)
    if workers <= 1 or len(chunks) <= 1:
        parts = [fn(payload, c) for c in chunks]
    elif kernels.BACKEND == "cython":
        # compiled kernels drop the GIL
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda c: fn(payload, c), chunks))
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_process,
                                 initargs=(payload,)) as ex:
            parts = list(ex.map(_run_process, [(fn, c) for c in chunks]))
    return [r for part in parts for r in part]


# -- single deletion -------------------------------------------------------

def _single_chunk(payload, chunk) -> list[SingleDeletionResult]:
    base, thresholds, speed = payload
    net = base.net
    ids = net.ids
    pop = net.population
    n = len(ids)
    dist = np.empty(n, dtype=np.float64)
    near = np.empty(n, dtype=np.int32)
    removed = np.zeros(len(net.corridor_ids), dtype=np.uint8)
    ws = kernels.Workspace()
    out = []
    for e in chunk:
        removed[e] = 1
        area = _field_area(net, removed, base.dist_max, dist, near, False, ws)
        removed[e] = 0
        k = net.corridor_ids[e]
        if base.ha > 0:
            ha = ha_from_arrays(dist, pop, net.is_hospital)
            ha_pct = (base.ha - ha) / base.ha * 100.0
        else:
            ha_pct = math.nan
        changed = np.flatnonzero(dist != base.dist)
        moved = np.flatnonzero(near != base.nearest)
        tc = crossings_from_arrays(base.dist, dist, pop, thresholds, speed)
        out.append(SingleDeletionResult(
            corridor_id=k,
            score=CorridorScore(k, base.area - area, ha_pct, base.betweenness.get(k, math.nan)),
            affected_population=int(pop[moved].sum()),
            threshold_crossings=tc.crossings,
            newly_unreachable=tc.newly_unreachable,
            deltas={ids[i]: (float(base.dist[i]), float(dist[i])) for i in changed.tolist()},
            reassigned={ids[i]: (_hid(ids, base.nearest[i]), _hid(ids, near[i])) for i in moved.tolist()},
        ))
    return out


def _hid(ids, h) -> str | None:
    return ids[h] if h >= 0 else None


def run_single_sweep(net: CorridorNetwork, *, workers: int = 1, baseline: Baseline | None = None,
                     thresholds: Sequence[float] = DEFAULT_THRESHOLDS_MIN,
                     speed_kmh: float = DEFAULT_SPEED_KMH,
                     betweenness_cutoff: float | None = DEFAULT_CUTOFF_KM,
                     chunk: int = 64) -> list[SingleDeletionResult]:
    """Delete each corridor alone; one result per corridor in corridor-id order."""
    base = baseline or Baseline.compute(net, betweenness_cutoff)
    payload = (base, tuple(float(t) for t in thresholds), float(speed_kmh))
    return _parallel(_single_chunk, payload, len(net.corridor_ids), workers, chunk)


# -- neighbourhood deletion ------------------------------------------------

def _stream_key(global_seed: int, focal: CorridorId, p: float) -> np.ndarray:
    h = hashlib.blake2b(digest_size=16)
    h.update(f"{int(global_seed)}\x1f{focal[0]}\x1f{focal[1]}\x1f{float(p).hex()}".encode())
    return np.frombuffer(h.digest(), dtype="<u8").copy()


def replicate_uniforms(global_seed: int, focal: CorridorId, p: float, replicate: int, n: int) -> np.ndarray:
    """``n`` uniforms in [0, 1) for one replicate; pure function of its arguments."""
    if n == 0:
        return np.empty(0)
    bg = np.random.Philox(key=_stream_key(global_seed, focal, p), counter=[0, int(replicate), 0, 0])
    raw = bg.random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def replicate_mask(net: CorridorNetwork, focal: CorridorId, p: float,
                   seed_material: tuple[int, CorridorId, float, int]) -> DeletionMask:
    """Focal corridor plus each neighbour independently with probability ``p``.

    ``seed_material`` is ``(global_seed, focal, p, replicate_index)``; the
    focal and p entries must agree with the positional arguments.
    """
    focal = corridor_key(*focal)
    seed, s_focal, s_p, rep = seed_material
    if corridor_key(*s_focal) != focal or float(s_p) != float(p):
        raise ValueError("seed material does not match focal corridor / probability")
    nbrs = sorted(neighbors_of_corridor(net, focal))
    u = replicate_uniforms(seed, focal, p, rep, len(nbrs))
    return DeletionMask(frozenset([focal] + [k for k, x in zip(nbrs, u.tolist()) if x < p]))


def percentile_nearest_rank(values: Sequence[float], q: int = 90) -> float:
    """Nearest-rank percentile: ascending sort, 1-based index ceil(q/100 * n)."""
    if not values:
        raise ValueError("no values")
    s = sorted(values)
    idx = (q * len(s) + 99) // 100
    return s[max(idx, 1) - 1]


def _neighborhood_chunk(payload, chunk) -> list[NeighborhoodResult]:
    base, config, keep = payload
    net = base.net
    n = len(net.ids)
    dist = np.empty(n, dtype=np.float64)
    near = np.empty(n, dtype=np.int32)
    removed = np.zeros(len(net.corridor_ids), dtype=np.uint8)
    ws = kernels.Workspace()
    out = []
    for e in chunk:
        focal = net.corridor_ids[e]
        nbr_idx = np.array(sorted(net.corridor_index[k] for k in neighbors_of_corridor(net, focal)),
                           dtype=np.intp)
        cache: dict[bytes, float] = {}
        for p in config.probabilities:
            vals = []
            for r in range(config.replicates):
                pick = replicate_uniforms(config.global_seed, focal, p, r, len(nbr_idx)) < p
                key = pick.tobytes()
                v = cache.get(key)
                if v is None:
                    sel = nbr_idx[pick]
                    removed[e] = 1
                    removed[sel] = 1
                    v = base.area - _field_area(net, removed, base.dist_max, dist, near, True, ws)
                    removed[e] = 0
                    removed[sel] = 0
                    cache[key] = v
                vals.append(v)
            out.append(NeighborhoodResult(
                corridor_id=focal,
                probability=p,
                acis_mean=math.fsum(vals) / len(vals),
                acis_p90=percentile_nearest_rank(vals, 90),
                replicate_count=len(vals),
                replicates=tuple(vals) if keep else None,
            ))
    return out


def run_neighborhood_sweep(net: CorridorNetwork, config: NeighborhoodConfig = NeighborhoodConfig(), *,
                           workers: int = 1, baseline: Baseline | None = None,
                           keep_replicates: bool = False, chunk: int = 16) -> list[NeighborhoodResult]:
    """One result per (corridor, p), ordered by corridor id then by ``config.probabilities``."""
    base = baseline or Baseline.compute(net, None)
    payload = (base, config, keep_replicates)
    return _parallel(_neighborhood_chunk, payload, len(net.corridor_ids), workers, chunk)


# -- rankings and comparison statistics ------------------------------------

def rank_table(measure: str, scores: Mapping[CorridorId, float]) -> RankTable:
    """Descending score, ties by corridor id; NaN scores sort last."""
    def key(item):
        k, v = item
        return (math.isnan(v), -v if not math.isnan(v) else 0.0, k)

    items = sorted(scores.items(), key=key)
    return RankTable(measure, tuple(k for k, _ in items), tuple(v for _, v in items))


def spearman_rho(x: Mapping, y: Mapping) -> float:
    """Pearson correlation of average ranks. NaN if either side is constant."""
    if set(x) != set(y):
        raise ValueError("score maps cover different keys")
    if len(x) < 2:
        raise ValueError("need at least two keys")
    keys = sorted(x)
    rx = rankdata([x[k] for k in keys])
    ry = rankdata([y[k] for k in keys])
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        return math.nan
    return max(-1.0, min(1.0, float(rx @ ry) / denom))


def topk_overlap(a: RankTable, b: RankTable, k: int = 100) -> float:
    """Share of ``a``'s top-k that is also in ``b``'s top-k.

    ``k`` larger than the corridor universe is clamped (with a warning).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if set(a.ids) != set(b.ids):
        raise ValueError("rank tables cover different corridors")
    kk = effective_k(a, k)
    if kk < k:
        warnings.warn(f"top-k clamped from {k} to universe size {kk}", stacklevel=2)
    return len(set(a.top(kk)) & set(b.top(kk))) / kk


def effective_k(table: RankTable, k: int) -> int:
    return min(k, len(table.ids))


def ccdf_points(scores: Sequence[float]) -> list[tuple[float, float]]:
    """(value, P(X >= value)) for each distinct value, ascending."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("ccdf of an empty sample")
    values, counts = np.unique(arr, return_counts=True)
    at_least = np.cumsum(counts[::-1])[::-1]
    return list(zip(values.tolist(), (at_least / arr.size).tolist()))
