"""CSV/GeoJSON input and output.

Inputs are UTF-8 CSV (a BOM and CRLF line endings are tolerated). Output
tables have fixed column orders; floats are written with six decimals,
rounded half-to-even, so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import DEFAULT_CUTOFF_KM, DEFAULT_SPEED_KMH, DEFAULT_THRESHOLDS_MIN
from .network import (CorridorNetwork, MunicipalityRecord, NetworkError, RoadSegment, build_corridor_network,
                      format_corridor_id, network_from_corridors)
from .stress import DEFAULT_PROBABILITIES, DEFAULT_REPLICATES

TOOL_VERSION = "0.1.0"

MUNICIPALITY_HEADER = ["id", "name", "population", "beds", "lat", "lon"]
ROADS_HEADER = ["road_id", "muni_a", "muni_b", "length_km"]
CORRIDORS_HEADER = ["muni_a", "muni_b", "length_km", "road_count"]

OUT_ENV = "CORRIDORSTRESS_OUT"
_SIX = Decimal("0.000001")


class InputError(NetworkError):
    """Problem with an input file; message names file, line and column."""


@dataclass
class RunConfig:
    municipalities: str | None = None
    roads: str | None = None
    corridors: str | None = None
    measure: str = "all"
    probabilities: tuple[float, ...] = DEFAULT_PROBABILITIES
    replicates: int = DEFAULT_REPLICATES
    global_seed: int = 0
    speed_kmh: float = DEFAULT_SPEED_KMH
    betweenness_cutoff_km: float = DEFAULT_CUTOFF_KM
    thresholds_minutes: tuple[float, ...] = DEFAULT_THRESHOLDS_MIN
    top_k: int = 100
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        if self.measure not in ("acis", "ha", "betweenness", "all"):
            raise ValueError(f"unknown measure {self.measure!r}")
        self.probabilities = tuple(float(p) for p in self.probabilities)
        self.thresholds_minutes = tuple(float(t) for t in self.thresholds_minutes)

    def parameters(self) -> dict:
        """Everything that influences output bytes (worker count excluded)."""
        d = asdict(self)
        for k in ("workers", "out", "municipalities", "roads", "corridors"):
            d.pop(k)
        d["probabilities"] = list(self.probabilities)
        d["thresholds_minutes"] = list(self.thresholds_minutes)
        return d


def fmt(x) -> str:
    """Six decimals, half-to-even on the exact binary value."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    q = Decimal(x).quantize(_SIX, rounding=ROUND_HALF_EVEN)
    if q == 0:
        q = abs(q)
    return f"{q:f}"


# -- reading ---------------------------------------------------------------

def _rows(path: str | os.PathLike, header: Sequence[str]):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: file not found")
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file (expected header {','.join(header)})") from None
        got = [h.strip() for h in got]
        if got != list(header):
            raise InputError(f"{path}: line 1: header {','.join(got)!r} does not match {','.join(header)!r}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def _parse(path, line, column, value, kind):
    try:
        v = kind(value)
    except ValueError:
        raise InputError(f"{path}: line {line}, column {column!r}: cannot parse {value!r} as {kind.__name__}") \
            from None
    if kind is float and not math.isfinite(v):
        raise InputError(f"{path}: line {line}, column {column!r}: non-finite value {value!r}")
    return v


def read_municipalities(path) -> list[MunicipalityRecord]:
    out = []
    seen = set()
    for line, (mid, name, pop, beds, lat, lon) in _rows(path, MUNICIPALITY_HEADER):
        if not mid:
            raise InputError(f"{path}: line {line}, column 'id': empty id")
        if mid in seen:
            raise InputError(f"{path}: line {line}, column 'id': duplicate municipality id {mid!r}")
        seen.add(mid)
        p = _parse(path, line, "population", pop, int)
        b = _parse(path, line, "beds", beds, int)
        if p < 0:
            raise InputError(f"{path}: line {line}, column 'population': negative value {p}")
        if b < 0:
            raise InputError(f"{path}: line {line}, column 'beds': negative value {b}")
        out.append(MunicipalityRecord(mid, name, p, b, _parse(path, line, "lat", lat, float),
                                      _parse(path, line, "lon", lon, float)))
    return out


def read_roads(path) -> list[RoadSegment]:
    out = []
    for line, (rid, a, b, length) in _rows(path, ROADS_HEADER):
        km = _parse(path, line, "length_km", length, float)
        if km <= 0:
            raise InputError(f"{path}: line {line}, column 'length_km': length must be positive, got {km}")
        out.append(RoadSegment(rid, a, b, km))
    return out


def read_corridors(path) -> list[tuple[str, str, float, int]]:
    out = []
    for line, (a, b, length, count) in _rows(path, CORRIDORS_HEADER):
        km = _parse(path, line, "length_km", length, float)
        n = _parse(path, line, "road_count", count, int)
        if km <= 0:
            raise InputError(f"{path}: line {line}, column 'length_km': length must be positive, got {km}")
        if n < 1:
            raise InputError(f"{path}: line {line}, column 'road_count': must be >= 1, got {n}")
        out.append((a, b, km, n))
    return out


def load_network(config: RunConfig) -> CorridorNetwork:
    if not config.municipalities:
        raise InputError("no municipalities file given")
    munis = read_municipalities(config.municipalities)
    if config.roads and config.corridors:
        raise InputError("give either a roads file or a corridors file, not both")
    if config.roads:
        return build_corridor_network(munis, read_roads(config.roads))
    if config.corridors:
        return network_from_corridors(munis, read_corridors(config.corridors))
    raise InputError("no roads or corridors file given")


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def make_manifest(config: RunConfig) -> dict:
    inputs = {}
    for role in ("municipalities", "roads", "corridors"):
        p = getattr(config, role)
        if p:
            inputs[role] = {"path": str(p), "sha256": file_sha256(p)}
    return {"tool": "corridorstress", "version": TOOL_VERSION, "inputs": inputs,
            "parameters": config.parameters()}


def config_from_manifest(path, verify: bool = True) -> RunConfig:
    """Rebuild a RunConfig from a manifest, checking input hashes."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    params = dict(data.get("parameters", {}))
    cfg = RunConfig(**{k: v for k, v in params.items() if k in RunConfig.__dataclass_fields__})
    base = Path(path).parent
    for role, info in data.get("inputs", {}).items():
        p = Path(info["path"])
        if not p.is_absolute() and not p.exists():
            p = base / p
        if verify and file_sha256(p) != info["sha256"]:
            raise InputError(f"{p}: contents do not match manifest hash")
        setattr(cfg, role, str(p))
    return cfg


# -- writing ---------------------------------------------------------------

def prepare_out_dir(path) -> Path:
    """Create and probe the output directory before any work starts."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise InputError(f"{out}: output directory not writable ({exc.strerror or exc})") from None
    return out


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
            n += 1
    return n


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_network_bundle(net: CorridorNetwork, out: Path) -> tuple[Path, Path]:
    mpath, cpath = out / "municipalities.csv", out / "corridors.csv"
    write_municipalities(mpath, net.municipalities.values())
    write_csv(cpath, CORRIDORS_HEADER,
              ([a, b, c.length, c.road_count] for (a, b), c in net.corridors.items()))
    return mpath, cpath


def write_municipalities(path, munis: Iterable[MunicipalityRecord]) -> None:
    write_csv(path, MUNICIPALITY_HEADER,
              ([m.id, m.name, m.population, m.beds, repr(float(m.lat)), repr(float(m.lon))] for m in munis))


def write_roads(path, roads: Iterable[RoadSegment]) -> None:
    write_csv(path, ROADS_HEADER, ([r.road_id, r.muni_a, r.muni_b, repr(float(r.length))] for r in roads))


def _json_num(x):
    x = float(x)
    return None if not math.isfinite(x) else float(fmt(x))


def overlay_geojson(net: CorridorNetwork, baseline_dist, scores: dict, ranks: dict) -> dict:
    """FeatureCollection: a LineString per corridor, a Point per municipality."""
    feats = []
    for (a, b), c in net.corridors.items():
        ma, mb = net.municipalities[a], net.municipalities[b]
        props = {"corridor_id": format_corridor_id((a, b)), "muni_a": a, "muni_b": b,
                 "length_km": _json_num(c.length), "road_count": c.road_count}
        for name, table in scores.items():
            props[name] = _json_num(table.get((a, b), math.nan))
        for name, table in ranks.items():
            props[f"rank_{name}"] = table.get((a, b))
        feats.append({"type": "Feature",
                      "geometry": {"type": "LineString", "coordinates": [[ma.lon, ma.lat], [mb.lon, mb.lat]]},
                      "properties": props})
    for i, mid in enumerate(net.ids):
        m = net.municipalities[mid]
        feats.append({"type": "Feature",
                      "geometry": {"type": "Point", "coordinates": [m.lon, m.lat]},
                      "properties": {"id": mid, "name": m.name, "population": m.population, "beds": m.beds,
                                     "baseline_distance_km": _json_num(baseline_dist[i])}})
    return {"type": "FeatureCollection", "features": feats}
