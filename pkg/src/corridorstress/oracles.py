"""Slow brute-force reference implementations for validating the engine.

Nothing here shares code with ``metrics``/``kernels``; only the network
records are read. Intended for small graphs in tests.
"""
from __future__ import annotations

from dataclasses import dataclass

INF = float("inf")
MAX_APSP_NODES = 500
MAX_ENUM_NODES = 12


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class OracleReport:
    case_id: str
    engine: float
    oracle: float

    @property
    def abs_dev(self) -> float:
        if self.engine == self.oracle:
            return 0.0
        return abs(self.engine - self.oracle)

    @property
    def rel_dev(self) -> float:
        scale = max(abs(self.engine), abs(self.oracle))
        return self.abs_dev / scale if scale else 0.0

    def ok(self, rel: float = 1e-9, abs_: float = 1e-9) -> bool:
        return self.abs_dev <= abs_ or self.rel_dev <= rel


def _live_edges(view):
    """(a, b, length) for every corridor visible in ``view`` (network or masked view)."""
    net = getattr(view, "net", view)
    hidden = set(getattr(getattr(view, "mask", None), "removed", ()) or ())
    return net, [(a, b, c.length) for (a, b), c in net.corridors.items() if (a, b) not in hidden]


def oracle_all_pairs_distances(view) -> dict[str, dict[str, float]]:
    """Floyd-Warshall on nested dicts."""
    net, edges = _live_edges(view)
    names = list(net.municipalities)
    if len(names) > MAX_APSP_NODES:
        raise OracleSizeError(f"{len(names)} nodes exceeds oracle cap {MAX_APSP_NODES}")
    d = {a: {b: (0.0 if a == b else INF) for b in names} for a in names}
    for a, b, w in edges:
        if w < d[a][b]:
            d[a][b] = d[b][a] = w
    for k in names:
        dk = d[k]
        for i in names:
            dik = d[i][k]
            if dik == INF:
                continue
            di = d[i]
            for j in names:
                alt = dik + dk[j]
                if alt < di[j]:
                    di[j] = alt
    return d


def oracle_nearest(view) -> dict[str, tuple[float, str | None]]:
    """Nearest hospital per municipality from the all-pairs matrix; ties to smaller id."""
    net, _ = _live_edges(view)
    d = oracle_all_pairs_distances(view)
    hospitals = sorted(m for m, rec in net.municipalities.items() if rec.beds > 0)
    out = {}
    for m in net.municipalities:
        best, who = INF, None
        for h in hospitals:
            if d[m][h] < best:
                best, who = d[m][h], h
        out[m] = (best, who)
    return out


def oracle_trapezoid(distances: dict[str, float], pops: dict[str, int], upper: float) -> float:
    """Trapezoid area of P(x) sampled at each distinct finite distance <= upper."""
    xs = sorted({x for x in distances.values() if x != INF and x <= upper})
    if not xs:
        return 0.0
    ys = [sum(pops[m] for m, x in distances.items() if x <= xv) for xv in xs]
    xs.append(upper)
    ys.append(ys[-1])
    total = 0.0
    for i in range(len(xs) - 1):
        total += (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]) / 2
    return total


def oracle_acis(net, view) -> float:
    base = {m: v[0] for m, v in oracle_nearest(net).items()}
    stressed = {m: v[0] for m, v in oracle_nearest(view).items()}
    pops = {m: r.population for m, r in net.municipalities.items()}
    upper = max(x for x in base.values() if x != INF)
    return oracle_trapezoid(base, pops, upper) - oracle_trapezoid(stressed, pops, upper)


def oracle_ha(view) -> float:
    net, _ = _live_edges(view)
    near = oracle_nearest(view)
    others = [m for m, r in net.municipalities.items() if r.beds == 0]
    total = sum(net.municipalities[m].population for m in others)
    acc = 0.0
    for m in others:
        p = net.municipalities[m].population
        d = near[m][0]
        acc += 0.0 if d == INF else (p / d) * p / total
    return acc


def oracle_betweenness(net, cutoff: float, rel_tol: float = 1e-9) -> dict[tuple[str, str], float]:
    """Enumerate every simple path for each (municipality, hospital) pair."""
    names = list(net.municipalities)
    if len(names) > MAX_ENUM_NODES:
        raise OracleSizeError(f"{len(names)} nodes exceeds enumeration cap {MAX_ENUM_NODES}")
    adj = {m: [] for m in names}
    for (a, b), c in net.corridors.items():
        adj[a].append((b, c.length, (a, b)))
        adj[b].append((a, c.length, (a, b)))
    score = {k: 0.0 for k in net.corridors}
    hospitals = [m for m, r in net.municipalities.items() if r.beds > 0]

    def all_paths(s, t):
        found = []
        stack = [(s, 0.0, [], {s})]
        while stack:
            node, length, used, seen = stack.pop()
            if node == t:
                found.append((length, used))
                continue
            for nxt, w, key in adj[node]:
                if nxt not in seen:
                    stack.append((nxt, length + w, used + [key], seen | {nxt}))
        return found

    for s in names:
        for t in hospitals:
            if s == t:
                continue
            paths = all_paths(s, t)
            if not paths:
                continue
            shortest = min(p[0] for p in paths)
            if shortest > cutoff:
                continue
            best = [used for length, used in paths if abs(length - shortest) <= rel_tol * shortest]
            for used in best:
                for key in used:
                    score[key] += 1.0 / len(best)
    return score


def oracle_step_integral(distances: dict[str, float], pops: dict[str, int], upper: float) -> float:
    """Exact area under the right-continuous step function P(x) on [0, upper]."""
    area = 0.0
    for m, x in distances.items():
        if x != INF and x <= upper:
            area += pops[m] * (upper - x)
    return area
