"""Run the sweeps for a RunConfig and write every result table."""
from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import dataio
from .hospitals import (CatchmentAssignment, flow_balance, hospital_affect_frequency, hospital_impact_table,
                        hospital_loads)
from .metrics import travel_minutes
from .network import CorridorNetwork, format_corridor_id
from .stress import (Baseline, NeighborhoodConfig, ccdf_points, effective_k, rank_table, run_neighborhood_sweep,
                     run_single_sweep, spearman_rho, topk_overlap)

log = logging.getLogger(__name__)

STAGES = ("build", "baseline", "stress-single", "stress-neighborhood", "hospital-impact", "report")


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


@dataclass
class RunResults:
    net: CorridorNetwork
    baseline: Baseline
    single: list | None = None
    neighborhood: list | None = None
    impact: list | None = None
    frequency: dict | None = None
    files: list = field(default_factory=list)


def _wants_betweenness(config: dataio.RunConfig) -> bool:
    return config.measure in ("betweenness", "all")


def run(config: dataio.RunConfig, stages: tuple[str, ...], net: CorridorNetwork | None = None) -> RunResults:
    net = net or dataio.load_network(config)
    cutoff = config.betweenness_cutoff_km if _wants_betweenness(config) else None
    need_single = any(s in stages for s in ("stress-single", "hospital-impact", "report"))
    base = Baseline.compute(net, cutoff if need_single else None)
    res = RunResults(net, base)
    if need_single:
        log.info("single-deletion sweep over %d corridors", len(net.corridor_ids))
        res.single = run_single_sweep(net, workers=config.workers, baseline=base,
                                      thresholds=config.thresholds_minutes, speed_kmh=config.speed_kmh)
        check_single(net, res.single)
    if "stress-neighborhood" in stages:
        cfg = NeighborhoodConfig(config.probabilities, config.replicates, config.global_seed)
        log.info("neighbourhood sweep: %d corridors x %d p x %d replicates",
                 len(net.corridor_ids), len(cfg.probabilities), cfg.replicates)
        res.neighborhood = run_neighborhood_sweep(net, cfg, workers=config.workers, baseline=base)
        if len(res.neighborhood) != len(net.corridor_ids) * len(cfg.probabilities):
            raise InvariantError("neighbourhood sweep returned the wrong number of results")
    if "hospital-impact" in stages:
        res.impact = hospital_impact_table(net, res.single, base)
        res.frequency = hospital_affect_frequency(net, res.single)
    return res


def check_single(net: CorridorNetwork, sweep) -> None:
    if [r.corridor_id for r in sweep] != list(net.corridor_ids):
        raise InvariantError("single sweep results out of corridor order or incomplete")
    for r in sweep:
        if not flow_balance(net, r).balanced:
            raise InvariantError(f"catchment flow imbalance after deleting {r.corridor_id}")
        for old, new in r.deltas.values():
            if not new > old:
                raise InvariantError(f"distance decreased after deleting {r.corridor_id}")


def _scores(res: RunResults, config) -> dict[str, dict]:
    out = {"acis": {r.corridor_id: r.score.acis for r in res.single},
           "ha": {r.corridor_id: r.score.ha_impact_pct for r in res.single}}
    if _wants_betweenness(config):
        out["betweenness"] = {r.corridor_id: r.score.betweenness for r in res.single}
    return out


def _selected(config) -> tuple[str, ...]:
    return ("acis", "ha", "betweenness") if config.measure == "all" else (config.measure,)


def write_outputs(res: RunResults, config: dataio.RunConfig, stages: tuple[str, ...]) -> list[Path]:
    out = Path(config.out)
    net = res.net
    files: list[Path] = []

    def add(name):
        p = out / name
        files.append(p)
        return p

    if "build" in stages:
        files.extend(dataio.write_network_bundle(net, out))
        rep = net.report
        dataio.write_json(add("build_report.json"), {
            "municipalities": len(net.ids), "corridors": len(net.corridor_ids),
            "hospitals": len(net.hospital_nodes), "roads_in": rep.n_roads_in if rep else None,
            "intra_municipality_dropped": rep.n_intra_dropped if rep else None,
            "inter_municipality_roads": rep.n_inter_roads if rep else None,
            "max_roads_per_corridor": rep.max_bundle if rep else None,
        })

    if "baseline" in stages:
        base = res.baseline
        ids = net.ids
        dataio.write_csv(add("baseline_field.csv"),
                         ["municipality_id", "distance_km", "travel_min", "nearest_hospital"],
                         ([m, float(d), travel_minutes(float(d), config.speed_kmh), ids[h] if h >= 0 else ""]
                          for m, d, h in zip(ids, base.dist.tolist(), base.nearest.tolist())))
        assignment = CatchmentAssignment({m: (ids[h] if h >= 0 else None)
                                          for m, h in zip(ids, base.nearest.tolist())})
        pops = {m: int(p) for m, p in zip(ids, net.population.tolist())}
        beds = {m: int(b) for m, b in zip(ids, net.beds.tolist()) if b > 0}
        loads, unassigned = hospital_loads(assignment, pops, beds)
        if sum(l.catchment_population for l in loads) + unassigned != net.total_population:
            raise InvariantError("baseline catchments do not conserve population")
        dataio.write_csv(add("hospital_loads.csv"),
                         ["hospital_id", "beds", "catchment_population", "people_per_bed"],
                         ([l.hospital_id, l.beds, l.catchment_population, l.people_per_bed] for l in loads))
        dataio.write_json(add("baseline_summary.json"), {
            "ha_total": dataio._json_num(base.ha), "dist_max_km": dataio._json_num(base.dist_max),
            "trapezoid_area": dataio._json_num(base.area), "total_population": net.total_population,
            "unassigned_population": unassigned,
        })

    if res.single is not None and ("stress-single" in stages or "report" in stages):
        scores = _scores(res, config)
        ranks = {m: rank_table(m, scores[m]).rank() for m in scores}
        if "stress-single" in stages:
            def ranking_rows():
                for r in res.single:
                    k = r.corridor_id
                    c = net.corridors[k]
                    yield [format_corridor_id(k), k[0], k[1], c.road_count, r.score.acis, r.score.ha_impact_pct,
                           scores["betweenness"][k] if "betweenness" in scores else math.nan,
                           str(ranks["acis"][k]), str(ranks["ha"][k]),
                           str(ranks["betweenness"][k]) if "betweenness" in ranks else ""]
            dataio.write_csv(add("corridor_rankings.csv"),
                             ["corridor_id", "muni_a", "muni_b", "road_count", "acis", "ha_impact_pct",
                              "betweenness", "rank_acis", "rank_ha", "rank_betweenness"], ranking_rows())
            dataio.write_csv(add("travel_time_impacts.csv"),
                             ["corridor_id", "threshold_min", "crossing_population", "newly_unreachable"],
                             ([format_corridor_id(r.corridor_id), t, n, r.newly_unreachable]
                              for r in res.single for t, n in r.threshold_crossings.items()))
        dataio.write_csv(add("ccdf_acis.csv"), ["value", "fraction"],
                         ccdf_points([r.score.acis for r in res.single]))
        if "report" in stages:
            _write_comparison(res, config, dict(scores), add("comparison.csv"))
            dataio.write_json(add("overlay.geojson"),
                              dataio.overlay_geojson(net, res.baseline.dist, scores, ranks))

    if res.neighborhood is not None:
        dataio.write_csv(add("neighborhood_rankings.csv"), ["corridor_id", "p", "acis_mean", "acis_p90"],
                         ([format_corridor_id(r.corridor_id), r.probability, r.acis_mean, r.acis_p90]
                          for r in res.neighborhood))
        rows = []
        for p in config.probabilities:
            rows += [[p, v, f] for v, f in ccdf_points([r.acis_p90 for r in res.neighborhood
                                                         if r.probability == p])]
        dataio.write_csv(add("ccdf_neighborhood_p90.csv"), ["p", "value", "fraction"], rows)

    if res.impact is not None:
        dataio.write_csv(add("hospital_impact.csv"),
                         ["hospital_id", "corridor_id", "ppb_initial", "ppb_stressed", "change_pct",
                          "inbound_population"],
                         ([r.hospital_id, format_corridor_id(r.corridor_id), r.ppb_initial, r.ppb_stressed,
                           r.change_pct, r.inbound_population] for r in res.impact))
        dataio.write_csv(add("hospital_frequency.csv"), ["hospital_id", "affect_fraction"],
                         sorted(res.frequency.items()))

    dataio.write_json(add("manifest.json"), dataio.make_manifest(config))
    res.files = files
    return files


def _write_comparison(res: RunResults, config, scores: dict, path: Path) -> None:
    tables = {m: rank_table(m, scores[m]) for m in _selected(config)}
    pairs = list(itertools.combinations(tables, 2))
    if res.neighborhood is not None:
        for p in config.probabilities:
            for stat in ("mean", "p90"):
                name = f"neighborhood_{stat}_p{p:g}"
                vals = {r.corridor_id: (r.acis_mean if stat == "mean" else r.acis_p90)
                        for r in res.neighborhood if r.probability == p}
                scores[name] = vals
                tables[name] = rank_table(name, vals)
                pairs.append(("acis", name))
    rows = []
    for a, b in pairs:
        if len(scores[a]) < 2:
            continue
        kk = effective_k(tables[a], config.top_k)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            overlap = topk_overlap(tables[a], tables[b], config.top_k)
        rows.append([a, b, spearman_rho(scores[a], scores[b]), str(kk), overlap])
    dataio.write_csv(path, ["measure_a", "measure_b", "spearman_rho", "k", "topk_overlap"], rows)
