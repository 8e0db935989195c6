"""Shared builders for tests."""
import numpy as np

from corridorstress.network import MunicipalityRecord, RoadSegment, build_corridor_network

T1_MUNICIPALITIES = """id,name,population,beds,lat,lon
A,Alpha,100,10,47.0,13.0
B,Beta,50,0,47.0,13.1
C,Gamma,30,0,47.0,13.2
D,Delta,20,0,47.0,13.3
"""

T1_ROADS = """road_id,muni_a,muni_b,length_km
r1,A,B,10
r2,A,B,12
r3,B,C,10
r4,C,D,10
r5,A,C,25
"""


def write_t1(tmp_path):
    m = tmp_path / "municipalities.csv"
    r = tmp_path / "roads.csv"
    m.write_text(T1_MUNICIPALITIES, encoding="utf-8")
    r.write_text(T1_ROADS, encoding="utf-8")
    return m, r


def munis(records):
    """``records``: iterable of (id, population, beds)."""
    return [MunicipalityRecord(i, i, p, b, 0.0, 0.0) for i, p, b in records]


def net_from(records, edges):
    """Network from (id, pop, beds) records and (a, b, length) edges."""
    roads = [RoadSegment(f"r{i}", a, b, w) for i, (a, b, w) in enumerate(edges)]
    return build_corridor_network(munis(records), roads)


def random_network(rng: np.random.Generator, n: int, *, extra_edge_prob=0.15, integer_weights=None,
                   connected_prob=0.8, max_hospitals=None):
    """Random sparse network with at least one hospital.

    With probability ``1 - connected_prob`` the spanning tree is skipped for
    a random subset of nodes, leaving some of them in separate components.
    """
    if integer_weights is None:
        integer_weights = bool(rng.random() < 0.5)
    ids = [f"n{i:02d}" for i in range(n)]
    pops = rng.integers(0, 1000, n)
    n_h = int(rng.integers(1, max(1, (max_hospitals or max(1, n // 4))) + 1))
    hosp = set(rng.choice(n, size=min(n_h, n), replace=False).tolist())
    records = [(ids[i], int(pops[i]), int(rng.integers(5, 500)) if i in hosp else 0) for i in range(n)]

    def weight():
        return float(rng.integers(1, 101)) if integer_weights else float(rng.uniform(1, 100))

    edges = {}
    tree = rng.random() < connected_prob
    for i in range(1, n):
        if tree or rng.random() < 0.7:
            j = int(rng.integers(0, i))
            edges[(ids[j], ids[i])] = weight()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_edge_prob and (ids[i], ids[j]) not in edges:
                edges[(ids[i], ids[j])] = weight()
    return net_from(records, [(a, b, w) for (a, b), w in edges.items()])


def random_mask(rng, net, max_frac=0.3):
    k = len(net.corridor_ids)
    if k == 0:
        return []
    m = int(rng.integers(0, max(1, int(max_frac * k)) + 1))
    idx = rng.choice(k, size=m, replace=False)
    return [net.corridor_ids[i] for i in sorted(idx.tolist())]
