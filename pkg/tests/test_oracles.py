import math

import pytest

from corridorstress.network import DeletionMask, apply_mask
from corridorstress.oracles import (OracleReport, OracleSizeError, oracle_acis, oracle_all_pairs_distances,
                                    oracle_betweenness, oracle_ha, oracle_nearest, oracle_step_integral,
                                    oracle_trapezoid)

from helpers import net_from


def test_apsp_t1(t1):
    d = oracle_all_pairs_distances(t1)
    assert d["A"] == {"A": 0, "B": 10, "C": 20, "D": 30}
    assert d["D"]["B"] == 20


def test_apsp_disconnected_and_single():
    net = net_from([("A", 1, 1), ("B", 1, 0), ("C", 1, 0)], [("A", "B", 2)])
    assert oracle_all_pairs_distances(net)["A"]["C"] == math.inf
    solo = net_from([("A", 3, 1)], [])
    assert oracle_all_pairs_distances(solo) == {"A": {"A": 0.0}}
    assert oracle_nearest(solo) == {"A": (0.0, "A")}


def test_oracle_values_t1(t1):
    cut = apply_mask(t1, DeletionMask.of([("A", "B")]))
    assert oracle_acis(t1, cut) == 1275.0
    assert oracle_acis(t1, apply_mask(t1, DeletionMask.of([("B", "C")]))) == 175.0
    assert oracle_ha(t1) == pytest.approx(3.0833333, abs=1e-6)


def test_trapezoid_and_step():
    dist = {"A": 0.0, "B": 10.0, "C": 20.0, "D": 30.0}
    pops = {"A": 100, "B": 50, "C": 30, "D": 20}
    assert oracle_trapezoid(dist, pops, 30.0) == 4800.0
    # step function: 100*30 + 50*20 + 30*10
    assert oracle_step_integral(dist, pops, 30.0) == 4300.0
    assert oracle_trapezoid({"x": math.inf}, {"x": 4}, 5.0) == 0.0


def test_betweenness_oracle_t1(t1):
    assert oracle_betweenness(t1, 100.0) == {("A", "B"): 3, ("B", "C"): 2, ("C", "D"): 1, ("A", "C"): 0}


def test_size_caps():
    big = net_from([(f"n{i:02d}", 1, 1 if i == 0 else 0) for i in range(13)],
                   [(f"n{i:02d}", f"n{i + 1:02d}", 1) for i in range(12)])
    with pytest.raises(OracleSizeError):
        oracle_betweenness(big, 100.0)


def test_report():
    r = OracleReport("c", 1.0 + 1e-12, 1.0)
    assert r.ok() and r.abs_dev == pytest.approx(1e-12)
    assert not OracleReport("c", 1.1, 1.0).ok()


def test_trapezoid_counterexample_and_step_monotonicity():
    # deleting H--a reroutes a (pop 1) behind b (pop 100) and removes the sample at 10 km
    net = net_from([("H", 100, 1), ("a", 1, 0), ("b", 100, 0)], [("H", "a", 10), ("H", "b", 20), ("a", "b", 10)])
    assert oracle_acis(net, apply_mask(net, DeletionMask.of([("H", "a")]))) == -485.0


def test_step_integral_is_monotone_under_mask_growth():
    import numpy as np
    from helpers import random_mask, random_network

    rng = np.random.default_rng(3)
    for _ in range(300):
        net = random_network(rng, int(rng.integers(3, 16)))
        small = random_mask(rng, net)
        large = small + [k for k in net.corridor_ids if k not in small and rng.random() < 0.3]
        pops = {m: r.population for m, r in net.municipalities.items()}
        base = {m: v[0] for m, v in oracle_nearest(net).items()}
        upper = max(x for x in base.values() if x != math.inf)
        areas = [oracle_step_integral({m: v[0] for m, v in oracle_nearest(apply_mask(net, DeletionMask.of(k))).items()},
                                      pops, upper) for k in (small, large)]
        assert areas[1] <= areas[0] + 1e-9 * max(1.0, areas[0])
