"""Coarse corridor network: municipalities joined by bundled road corridors.

Road segments whose two ends lie in different municipalities are grouped
by unordered municipality pair. Each group becomes one undirected
corridor whose length is the shortest bundled segment and whose
``road_count`` is the group size.

Internally the network is stored twice: as keyed records for lookups and
as a CSR adjacency (numpy arrays, read-only) that the shortest-path
kernels consume directly. Municipality indices follow sorted id order, so
"smaller index" and "lexicographically smaller id" are the same thing.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

CorridorId = tuple[str, str]


class NetworkError(ValueError):
    """Invalid network input (unknown ids, bad values, no hospitals...)."""


@dataclass(frozen=True)
class MunicipalityRecord:
    id: str
    name: str
    population: int
    beds: int
    lat: float
    lon: float

    def __post_init__(self):
        if self.population < 0:
            raise NetworkError(f"municipality {self.id!r}: negative population {self.population}")
        if self.beds < 0:
            raise NetworkError(f"municipality {self.id!r}: negative beds {self.beds}")

    @property
    def has_hospital(self) -> bool:
        return self.beds > 0


@dataclass(frozen=True)
class RoadSegment:
    road_id: str
    muni_a: str
    muni_b: str
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise NetworkError(f"road {self.road_id!r}: length must be positive, got {self.length}")


@dataclass(frozen=True)
class Corridor:
    corridor_id: CorridorId
    length: float
    road_count: int

    @property
    def endpoints(self) -> CorridorId:
        return self.corridor_id


@dataclass(frozen=True)
class BuildReport:
    """Ingestion statistics."""

    n_roads_in: int
    n_intra_dropped: int
    n_inter_roads: int
    n_corridors: int
    max_bundle: int


def corridor_key(a: str, b: str) -> CorridorId:
    """Canonical unordered pair."""
    return (a, b) if a <= b else (b, a)


def format_corridor_id(cid: CorridorId) -> str:
    return f"{cid[0]}--{cid[1]}"


@dataclass(frozen=True)
class DeletionMask:
    removed: frozenset = field(default_factory=frozenset)

    @classmethod
    def of(cls, corridors: Iterable[CorridorId]) -> "DeletionMask":
        return cls(frozenset(corridor_key(*c) for c in corridors))


class CorridorNetwork:
    """Immutable municipality/corridor graph.

    Build with :func:`build_corridor_network` or :func:`network_from_corridors`
    rather than calling the constructor directly.
    """

    def __init__(self, municipalities: Sequence[MunicipalityRecord], corridors: Sequence[Corridor],
                 report: BuildReport | None = None):
        ids = sorted(m.id for m in municipalities)
        if len(set(ids)) != len(ids):
            dup = [k for k, c in Counter(ids).items() if c > 1]
            raise NetworkError(f"duplicate municipality id(s): {dup[:5]}")
        if not ids:
            raise NetworkError("network has no municipalities")
        by_id = {m.id: m for m in municipalities}
        if not any(m.has_hospital for m in municipalities):
            raise NetworkError("network has no hospital (no municipality with beds > 0)")

        self.municipalities: dict[str, MunicipalityRecord] = {i: by_id[i] for i in ids}
        self.ids: tuple[str, ...] = tuple(ids)
        self.index: dict[str, int] = {m: i for i, m in enumerate(ids)}

        corridors = sorted(corridors, key=lambda c: c.corridor_id)
        self.corridors: dict[CorridorId, Corridor] = {}
        for c in corridors:
            a, b = c.corridor_id
            if a == b or c.corridor_id != corridor_key(a, b):
                raise NetworkError(f"corridor {c.corridor_id} is not a canonical pair of distinct ids")
            if a not in self.index or b not in self.index:
                raise NetworkError(f"corridor {c.corridor_id} references unknown municipality")
            if c.corridor_id in self.corridors:
                raise NetworkError(f"duplicate corridor {c.corridor_id}")
            if c.road_count < 1 or not c.length > 0:
                raise NetworkError(f"corridor {c.corridor_id}: needs length > 0 and road_count >= 1")
            self.corridors[c.corridor_id] = c
        self.corridor_ids: tuple[CorridorId, ...] = tuple(self.corridors)
        self.corridor_index: dict[CorridorId, int] = {k: i for i, k in enumerate(self.corridor_ids)}
        self.report = report

        n, m = len(ids), len(self.corridor_ids)
        self.population = _readonly(np.array([by_id[i].population for i in ids], dtype=np.int64))
        self.beds = _readonly(np.array([by_id[i].beds for i in ids], dtype=np.int64))
        self.is_hospital = _readonly(self.beds > 0)
        self.hospital_nodes = _readonly(np.flatnonzero(self.is_hospital).astype(np.int32))
        self.edge_u = _readonly(np.array([self.index[a] for a, _ in self.corridor_ids], dtype=np.int32))
        self.edge_v = _readonly(np.array([self.index[b] for _, b in self.corridor_ids], dtype=np.int32))
        self.edge_length = _readonly(np.array([self.corridors[k].length for k in self.corridor_ids],
                                              dtype=np.float64))

        # CSR adjacency, both directions, neighbours ordered by corridor index
        deg = np.bincount(np.concatenate([self.edge_u, self.edge_v]), minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int32)
        np.cumsum(deg, out=indptr[1:])
        nbr = np.empty(2 * m, dtype=np.int32)
        eid = np.empty(2 * m, dtype=np.int32)
        fill = indptr[:-1].copy()
        for e in range(m):
            u, v = self.edge_u[e], self.edge_v[e]
            nbr[fill[u]] = v
            eid[fill[u]] = e
            fill[u] += 1
            nbr[fill[v]] = u
            eid[fill[v]] = e
            fill[v] += 1
        self.indptr = _readonly(indptr)
        self.nbr = _readonly(nbr)
        self.eid = _readonly(eid)
        self.weight = _readonly(self.edge_length[eid].copy())

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorridorNetwork):
            return NotImplemented
        return self.municipalities == other.municipalities and self.corridors == other.corridors

    def __repr__(self) -> str:
        return (f"CorridorNetwork({len(self.ids)} municipalities, {len(self.corridor_ids)} corridors, "
                f"{len(self.hospital_nodes)} hospitals)")

    @property
    def total_population(self) -> int:
        return int(self.population.sum())

    @property
    def hospital_ids(self) -> tuple[str, ...]:
        return tuple(self.ids[i] for i in self.hospital_nodes)

    def incident(self, muni: str) -> list[CorridorId]:
        i = self.index[muni]
        return [self.corridor_ids[e] for e in self.eid[self.indptr[i]:self.indptr[i + 1]]]

    def adjacency(self) -> dict[str, list[CorridorId]]:
        return {m: self.incident(m) for m in self.ids}

    def mask_array(self, mask: DeletionMask | Iterable[CorridorId] | None) -> np.ndarray:
        """uint8 flag per corridor index, 1 = removed."""
        out = np.zeros(len(self.corridor_ids), dtype=np.uint8)
        if mask is None:
            return out
        removed = mask.removed if isinstance(mask, DeletionMask) else mask
        for k in removed:
            try:
                out[self.corridor_index[corridor_key(*k)]] = 1
            except KeyError:
                raise NetworkError(f"mask references unknown corridor {k}") from None
        return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class MaskedView:
    """Read-only view of a network with some corridors hidden.

    The base network is never touched; the view only carries the removal
    flags used by adjacency queries and by the shortest-path kernels.
    """

    def __init__(self, net: CorridorNetwork, mask: DeletionMask | None = None):
        self.net = net
        self.mask = mask if mask is not None else DeletionMask()
        self.removed = _readonly(net.mask_array(self.mask))

    def incident(self, muni: str) -> list[CorridorId]:
        return [k for k in self.net.incident(muni) if not self.removed[self.net.corridor_index[k]]]

    def neighbors(self, muni: str) -> list[str]:
        return [b if a == muni else a for a, b in self.incident(muni)]

    def degree(self, muni: str) -> int:
        return len(self.incident(muni))

    def adjacency(self) -> dict[str, list[CorridorId]]:
        return {m: self.incident(m) for m in self.net.ids}

    def corridors(self) -> Iterator[Corridor]:
        for i, k in enumerate(self.net.corridor_ids):
            if not self.removed[i]:
                yield self.net.corridors[k]


def apply_mask(net: CorridorNetwork, mask: DeletionMask | Iterable[CorridorId] | None = None) -> MaskedView:
    if mask is not None and not isinstance(mask, DeletionMask):
        mask = DeletionMask.of(mask)
    return MaskedView(net, mask)


def as_view(obj: CorridorNetwork | MaskedView) -> MaskedView:
    return obj if isinstance(obj, MaskedView) else MaskedView(obj)


def build_corridor_network(municipalities: Sequence[MunicipalityRecord],
                           roads: Iterable[RoadSegment]) -> CorridorNetwork:
    """Bundle road segments into corridors.

    Intra-municipality segments are dropped and counted in ``net.report``.
    Raises :class:`NetworkError` for unknown municipality ids, no
    municipalities, or no hospitals.
    """
    known = {m.id for m in municipalities}
    bundles: dict[CorridorId, list[float]] = {}
    n_in = dropped = 0
    for r in roads:
        n_in += 1
        for end in (r.muni_a, r.muni_b):
            if end not in known:
                raise NetworkError(f"road {r.road_id!r} references unknown municipality {end!r}")
        if r.muni_a == r.muni_b:
            dropped += 1
            continue
        bundles.setdefault(corridor_key(r.muni_a, r.muni_b), []).append(float(r.length))
    corridors = [Corridor(k, min(v), len(v)) for k, v in bundles.items()]
    report = BuildReport(
        n_roads_in=n_in,
        n_intra_dropped=dropped,
        n_inter_roads=n_in - dropped,
        n_corridors=len(corridors),
        max_bundle=max((c.road_count for c in corridors), default=0),
    )
    return CorridorNetwork(municipalities, corridors, report)


def network_from_corridors(municipalities: Sequence[MunicipalityRecord],
                           rows: Iterable[tuple[str, str, float, int]]) -> CorridorNetwork:
    """Build from pre-aggregated ``(muni_a, muni_b, length, road_count)`` rows."""
    known = {m.id for m in municipalities}
    corridors = []
    for a, b, length, count in rows:
        for end in (a, b):
            if end not in known:
                raise NetworkError(f"corridor ({a!r}, {b!r}) references unknown municipality {end!r}")
        if a == b:
            raise NetworkError(f"corridor ({a!r}, {b!r}) joins a municipality to itself")
        corridors.append(Corridor(corridor_key(a, b), float(length), int(count)))
    n_roads = sum(c.road_count for c in corridors)
    report = BuildReport(n_roads, 0, n_roads, len(corridors), max((c.road_count for c in corridors), default=0))
    return CorridorNetwork(municipalities, corridors, report)


def neighbors_of_corridor(net: CorridorNetwork, k: CorridorId) -> set[CorridorId]:
    """Corridors sharing at least one endpoint with ``k`` (``k`` excluded)."""
    k = corridor_key(*k)
    if k not in net.corridors:
        raise NetworkError(f"unknown corridor {k}")
    return (set(net.incident(k[0])) | set(net.incident(k[1]))) - {k}


def toy_network() -> CorridorNetwork:
    """Four-town reference network used throughout docs and tests.

    A(pop 100, 10 beds) -- B(50) -- C(30) -- D(20), plus a 25 km A--C
    shortcut; A--B bundles two roads.
    """
    munis = [
        MunicipalityRecord("A", "Alpha", 100, 10, 47.0, 13.0),
        MunicipalityRecord("B", "Beta", 50, 0, 47.0, 13.1),
        MunicipalityRecord("C", "Gamma", 30, 0, 47.0, 13.2),
        MunicipalityRecord("D", "Delta", 20, 0, 47.0, 13.3),
    ]
    roads = [
        RoadSegment("r1", "A", "B", 10.0),
        RoadSegment("r2", "A", "B", 12.0),
        RoadSegment("r3", "B", "C", 10.0),
        RoadSegment("r4", "C", "D", 10.0),
        RoadSegment("r5", "A", "C", 25.0),
    ]
    return build_corridor_network(munis, roads)


def populations_by_id(net: CorridorNetwork) -> Mapping[str, int]:
    return {m: int(p) for m, p in zip(net.ids, net.population)}
