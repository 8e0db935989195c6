"""Synthetic valley/grid road networks for desk-scale runs.

A triangulated grid of lowland municipalities carries most corridors;
chains ("valleys") hang off random grid towns; most are dead ends reachable
only through their root corridor, a minority end in a pass road back to
the nearest grid town. Hospitals sit in grid towns, drawn with
probability proportional to population.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .network import MunicipalityRecord, RoadSegment

KM_PER_DEG_LAT = 111.32


@dataclass(frozen=True)
class SynthParams:
    n_nodes: int = 1600
    hospital_fraction: float = 0.05
    seed: int = 7
    core_fraction: float = 0.8
    spacing_km: float = 8.0
    diagonal_prob: float = 0.5
    chain_min: int = 3
    chain_max: int = 12
    intra_fraction: float = 0.1
    pass_prob: float = 0.3

    def as_dict(self) -> dict:
        return asdict(self)


def synth_network(params: SynthParams = SynthParams()):
    """Return ``(municipalities, roads)`` for the given parameters."""
    if params.n_nodes < 4:
        raise ValueError("need at least 4 municipalities")
    if not 0 < params.hospital_fraction <= 1:
        raise ValueError("hospital_fraction must be in (0, 1]")
    rng = np.random.Generator(np.random.PCG64(params.seed))
    side = max(2, int(math.isqrt(int(params.core_fraction * params.n_nodes))))
    n_core = side * side
    n = max(params.n_nodes, n_core)

    lat0, lon0 = 47.0, 10.0
    km_per_deg_lon = KM_PER_DEG_LAT * math.cos(math.radians(lat0))
    xy = np.zeros((n, 2))
    jitter = rng.uniform(-0.25, 0.25, size=(n_core, 2)) * params.spacing_km
    for r in range(side):
        for c in range(side):
            xy[r * side + c] = (c * params.spacing_km, r * params.spacing_km)
    xy[:n_core] += jitter

    edges: list[tuple[int, int]] = []
    for r in range(side):
        for c in range(side):
            i = r * side + c
            if c + 1 < side:
                edges.append((i, i + 1))
            if r + 1 < side:
                edges.append((i, i + side))
            if c + 1 < side and r + 1 < side and rng.random() < params.diagonal_prob:
                if rng.random() < 0.5:
                    edges.append((i, i + side + 1))
                else:
                    edges.append((i + 1, i + side))

    # valleys: pendant chains grown outward from a random grid town
    nxt = n_core
    while nxt < n:
        length = min(int(rng.integers(params.chain_min, params.chain_max + 1)), n - nxt)
        root = int(rng.integers(n_core))
        angle = rng.uniform(0, 2 * math.pi)
        prev = root
        for _ in range(length):
            step = params.spacing_km * rng.uniform(0.6, 1.2)
            angle += rng.normal(0, 0.3)
            xy[nxt] = xy[prev] + step * np.array([math.cos(angle), math.sin(angle)])
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        if rng.random() < params.pass_prob:
            gap = np.hypot(*(xy[:n_core] - xy[prev]).T)
            gap[root] = np.inf
            edges.append((int(np.argmin(gap)), prev))

    pop = np.empty(n, dtype=np.int64)
    pop[:n_core] = np.round(rng.lognormal(7.2, 1.0, n_core)).astype(np.int64) + 50
    pop[n_core:] = np.round(rng.lognormal(6.3, 0.8, n - n_core)).astype(np.int64) + 20

    n_hosp = max(1, int(round(params.hospital_fraction * n)))
    weights = pop[:n_core] / pop[:n_core].sum()
    hosp = rng.choice(n_core, size=min(n_hosp, n_core), replace=False, p=weights)
    beds = np.zeros(n, dtype=np.int64)
    beds[hosp] = np.maximum(20, np.round(pop[hosp] * rng.uniform(0.005, 0.02, hosp.size))).astype(np.int64)

    width = len(str(n))
    ids = [f"M{i:0{width}d}" for i in range(n)]
    munis = [
        MunicipalityRecord(ids[i], f"Town {i}", int(pop[i]), int(beds[i]),
                           round(float(lat0 + xy[i, 1] / KM_PER_DEG_LAT), 6),
                           round(float(lon0 + xy[i, 0] / km_per_deg_lon), 6))
        for i in range(n)
    ]

    roads = []
    rid = 0
    for a, b in edges:
        base = float(np.hypot(*(xy[a] - xy[b]))) * rng.uniform(1.05, 1.4)
        count = int(rng.geometric(0.6))
        for j in range(count):
            extra = 1.0 if j == 0 else rng.uniform(1.0, 1.5)
            roads.append(RoadSegment(f"R{rid}", ids[a], ids[b], round(float(max(base * extra, 0.1)), 3)))
            rid += 1
    for i in rng.choice(n, size=int(params.intra_fraction * n), replace=False).tolist():
        roads.append(RoadSegment(f"R{rid}", ids[i], ids[i], round(float(rng.uniform(0.5, 3.0)), 3)))
        rid += 1
    return munis, roads
