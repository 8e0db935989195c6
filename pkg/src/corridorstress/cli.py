"""Command-line entry point.

Exit codes: 0 success, 1 input or usage error, 2 internal invariant
violation.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import dataio, kernels
from .network import NetworkError
from .pipeline import InvariantError, run, write_outputs
from .synth import SynthParams, synth_network

log = logging.getLogger("corridorstress")

STAGE_MAP = {
    "build": ("build",),
    "baseline": ("baseline",),
    "stress-single": ("stress-single",),
    "stress-neighborhood": ("stress-neighborhood",),
    "hospital-impact": ("hospital-impact",),
    "report": ("report",),
    "all": ("build", "baseline", "stress-single", "stress-neighborhood", "hospital-impact", "report"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_run_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("inputs")
    g.add_argument("--municipalities", help="municipalities.csv (id,name,population,beds,lat,lon)")
    g.add_argument("--roads", help="roads.csv (road_id,muni_a,muni_b,length_km)")
    g.add_argument("--corridors", help="pre-aggregated corridors.csv (muni_a,muni_b,length_km,road_count)")
    g.add_argument("--manifest", help="rerun from a manifest.json (inputs are hash-checked)")
    g = p.add_argument_group("parameters")
    g.add_argument("--measure", choices=("acis", "ha", "betweenness", "all"), default=None)
    g.add_argument("--probabilities", type=_floats, default=None, help="neighbour deletion probabilities")
    g.add_argument("--replicates", type=int, default=None)
    g.add_argument("--seed", type=int, default=None, help="global seed for neighbourhood replicates")
    g.add_argument("--speed-kmh", type=float, default=None)
    g.add_argument("--betweenness-cutoff-km", type=float, default=None)
    g.add_argument("--thresholds", type=_floats, default=None, help="travel-time thresholds in minutes")
    g.add_argument("--top-k", type=int, default=None)
    g.add_argument("--include-neighborhood", action="store_true",
                   help="report: also run the neighbourhood sweep and compare against it")
    _add_common(p)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help=f"output directory (default ${dataio.OUT_ENV} or ./out)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corridorstress",
                     description="Stress-test corridor networks for nearest-hospital accessibility.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "build": "ingest and validate inputs, write the corridor network bundle",
        "baseline": "baseline distance field, HA and hospital loads",
        "stress-single": "single-corridor deletion sweep and rankings",
        "stress-neighborhood": "neighbourhood deletion sweep",
        "hospital-impact": "catchment shifts and hospital affect frequency",
        "report": "rank comparisons, CCDF and GeoJSON overlay",
        "all": "every stage",
    }
    for name, text in helps.items():
        _add_run_args(sub.add_parser(name, help=text, description=text))
    sp = sub.add_parser("synth", help="write a synthetic valley/grid network",
                        description="Write municipalities.csv and roads.csv for a synthetic network.")
    sp.add_argument("--n-nodes", type=int, default=SynthParams.n_nodes)
    sp.add_argument("--hospital-fraction", type=float, default=SynthParams.hospital_fraction)
    sp.add_argument("--seed", type=int, default=SynthParams.seed)
    _add_common(sp)
    return parser


def _config(args) -> dataio.RunConfig:
    if args.manifest:
        cfg = dataio.config_from_manifest(args.manifest)
    else:
        cfg = dataio.RunConfig(municipalities=args.municipalities, roads=args.roads, corridors=args.corridors)
    overrides = {
        "measure": args.measure, "probabilities": args.probabilities, "replicates": args.replicates,
        "global_seed": args.seed, "speed_kmh": args.speed_kmh,
        "betweenness_cutoff_km": args.betweenness_cutoff_km, "thresholds_minutes": args.thresholds,
        "top_k": args.top_k,
    }
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    for name in ("municipalities", "roads", "corridors"):
        if getattr(args, name):
            setattr(cfg, name, getattr(args, name))
    cfg.workers = args.workers
    cfg.out = _out_dir(args)
    cfg.__post_init__()
    if cfg.replicates < 1:
        raise UsageError("--replicates must be >= 1")
    if cfg.top_k < 1:
        raise UsageError("--top-k must be >= 1")
    return cfg


def _out_dir(args) -> str:
    return args.out or os.environ.get(dataio.OUT_ENV) or "out"


def _synth(args) -> int:
    params = SynthParams(n_nodes=args.n_nodes, hospital_fraction=args.hospital_fraction, seed=args.seed)
    out = dataio.prepare_out_dir(_out_dir(args))
    munis, roads = synth_network(params)
    dataio.write_municipalities(out / "municipalities.csv", munis)
    dataio.write_roads(out / "roads.csv", roads)
    dataio.write_json(out / "synth_manifest.json", {"generator": "valley-grid", "parameters": params.as_dict(),
                                                   "version": dataio.TOOL_VERSION})
    print(f"wrote {len(munis)} municipalities and {len(roads)} road segments to {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return _synth(args)
        cfg = _config(args)
        stages = STAGE_MAP[args.command]
        if args.command == "report" and args.include_neighborhood:
            stages = stages + ("stress-neighborhood",)
        dataio.prepare_out_dir(cfg.out)
        log.info("kernel backend: %s", kernels.BACKEND)
        res = run(cfg, stages)
        files = write_outputs(res, cfg, stages)
    except (UsageError, NetworkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
