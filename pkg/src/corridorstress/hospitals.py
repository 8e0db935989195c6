"""Hospital catchments and how corridor deletions shift them.

A hospital counts as impacted by a deletion whenever any municipality
enters or leaves its catchment, even if the moves cancel out. Towns cut
off from every hospital leave all catchments.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .metrics import DistanceField
from .network import CorridorId, CorridorNetwork
from .stress import Baseline, SingleDeletionResult


@dataclass(frozen=True)
class CatchmentAssignment:
    assigned: dict[str, str | None]

    def __getitem__(self, muni: str) -> str | None:
        return self.assigned[muni]


@dataclass(frozen=True)
class HospitalLoad:
    hospital_id: str
    beds: int
    catchment_population: int
    people_per_bed: float


@dataclass(frozen=True)
class HospitalImpactRecord:
    hospital_id: str
    corridor_id: CorridorId
    ppb_initial: float
    ppb_stressed: float
    change_pct: float
    change_people_per_bed: float
    inbound_population: int
    outbound_population: int


@dataclass(frozen=True)
class FlowBalance:
    gains: int
    losses: int
    newly_unassigned: int

    @property
    def balanced(self) -> bool:
        return self.losses == self.gains + self.newly_unassigned


def catchment(field: DistanceField) -> CatchmentAssignment:
    return CatchmentAssignment({m: h for m, (_, h) in field.as_dict().items()})


def affected_population(base: CatchmentAssignment, stressed: CatchmentAssignment,
                        populations: Mapping[str, int]) -> int:
    """Total population whose nearest hospital changed (including to none)."""
    if base.assigned.keys() != stressed.assigned.keys():
        raise ValueError("assignments cover different municipalities")
    return sum(populations[m] for m, h in base.assigned.items() if stressed.assigned[m] != h)


def hospital_loads(assignment: CatchmentAssignment, populations: Mapping[str, int],
                   beds: Mapping[str, int]) -> tuple[list[HospitalLoad], int]:
    """Per-hospital catchment load, plus the unassigned population."""
    hospitals = {h for h, b in beds.items() if b > 0}
    hospitals |= {h for h in assignment.assigned.values() if h is not None}
    totals = dict.fromkeys(hospitals, 0)
    unassigned = 0
    for m, h in assignment.assigned.items():
        if h is None:
            unassigned += populations[m]
        else:
            totals[h] += populations[m]
    loads = []
    for h in sorted(hospitals):
        b = beds.get(h, 0)
        if b < 1:
            raise ValueError(f"hospital {h!r} has no beds")
        loads.append(HospitalLoad(h, b, totals[h], totals[h] / b))
    return loads, unassigned


def baseline_catchments(net: CorridorNetwork, baseline: Baseline) -> dict[str, int]:
    sums = np.zeros(len(net.ids), dtype=np.int64)
    ok = baseline.nearest >= 0
    np.add.at(sums, baseline.nearest[ok], net.population[ok])
    return {net.ids[h]: int(sums[h]) for h in net.hospital_nodes.tolist()}


def _moves(net: CorridorNetwork, result: SingleDeletionResult):
    gains: dict[str, int] = defaultdict(int)
    losses: dict[str, int] = defaultdict(int)
    unassigned = 0
    for m, (old, new) in result.reassigned.items():
        p = int(net.population[net.index[m]])
        if old is not None:
            losses[old] += p
        if new is not None:
            gains[new] += p
        elif old is not None:
            unassigned += p
    return gains, losses, unassigned


def flow_balance(net: CorridorNetwork, result: SingleDeletionResult) -> FlowBalance:
    gains, losses, unassigned = _moves(net, result)
    return FlowBalance(sum(gains.values()), sum(losses.values()), unassigned)


def hospital_impact_table(net: CorridorNetwork, sweep: Sequence[SingleDeletionResult],
                          baseline: Baseline | None = None) -> list[HospitalImpactRecord]:
    """One record per (hospital, deletion) pair that moved any catchment population.

    Sorted by absolute percentage change, largest first.
    """
    baseline = baseline or Baseline.compute(net, None)
    initial = baseline_catchments(net, baseline)
    beds = {net.ids[h]: int(net.beds[h]) for h in net.hospital_nodes.tolist()}
    records = []
    for res in sweep:
        gains, losses, _ = _moves(net, res)
        for h in sorted(set(gains) | set(losses)):
            before = initial[h]
            after = before + gains.get(h, 0) - losses.get(h, 0)
            b = beds[h]
            pct = (after - before) / before * 100.0 if before > 0 else math.nan
            records.append(HospitalImpactRecord(
                hospital_id=h,
                corridor_id=res.corridor_id,
                ppb_initial=before / b,
                ppb_stressed=after / b,
                change_pct=pct,
                change_people_per_bed=(after - before) / b,
                inbound_population=gains.get(h, 0),
                outbound_population=losses.get(h, 0),
            ))
    records.sort(key=lambda r: (math.isnan(r.change_pct),
                                -abs(r.change_pct) if not math.isnan(r.change_pct) else 0.0,
                                r.hospital_id, r.corridor_id))
    return records


def hospital_affect_frequency(net: CorridorNetwork, sweep: Sequence[SingleDeletionResult]) -> dict[str, float]:
    """Fraction of corridor deletions that changed each hospital's catchment."""
    hits = dict.fromkeys(net.hospital_ids, 0)
    for res in sweep:
        gains, losses, _ = _moves(net, res)
        for h in set(gains) | set(losses):
            hits[h] += 1
    total = len(net.corridor_ids)
    return {h: (c / total if total else 0.0) for h, c in hits.items()}
