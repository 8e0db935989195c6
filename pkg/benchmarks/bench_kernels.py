"""Compare the compiled and pure-Python kernels on the synthetic network.

    python3 benchmarks/bench_kernels.py [--n-nodes 1600] [--repeat 20]
"""
import argparse
import time

import numpy as np

from corridorstress import kernels
from corridorstress.network import build_corridor_network
from corridorstress.synth import SynthParams, synth_network


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-nodes", type=int, default=1600)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    net = build_corridor_network(*synth_network(SynthParams(n_nodes=args.n_nodes)))
    n = len(net.ids)
    removed = net.mask_array([net.corridor_ids[0]])
    dist = np.empty(n)
    near = np.empty(n, dtype=np.int32)
    print(f"{n} municipalities, {len(net.corridor_ids)} corridors; best of {args.repeat}")
    results = {}
    for name, mod in kernels.backends().items():
        ws = mod.Workspace()
        args_common = (net.indptr, net.nbr, net.weight, net.eid, removed, net.hospital_nodes)
        upper = 60.0
        t_field = bench(lambda: mod.nearest_hospital(*args_common, dist, near, ws), args.repeat)
        t_area = bench(lambda: mod.trapezoid_area(dist, net.population, upper), args.repeat)
        t_fused = bench(lambda: mod.field_area(*args_common, net.population, upper, dist, near, True, ws),
                        args.repeat)
        results[name] = (t_field, t_area, t_fused)
        print(f"{name:>8}: field {t_field * 1e3:8.3f} ms   area {t_area * 1e3:8.3f} ms   "
              f"fused+early-stop {t_fused * 1e3:8.3f} ms")
    if len(results) == 2:
        speed = [p / c for p, c in zip(results["python"], results["cython"])]
        print("speedup: " + "   ".join(f"{s:6.1f}x" for s in speed))


if __name__ == "__main__":
    main()
