"""Time the numba kernels against the pure-numpy fallback.

Runs junction-tree calibration over a batch of evidence rows and brute-force
enumeration on a small network, once per backend, and checks that both
backends agree.  Example::

    python benchmarks/bench_kernels.py --rows 2000 --repeat 3
"""

import argparse
import time

import numpy as np

from taxagg import kernels
from taxagg.junction import brute_force_marginals, infer_batch
from taxagg.network import EvidenceFactor, build_network
from taxagg.synthetic import GenConfig, generate


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def run(backend, args, net, l0, l1, small, evidence):
    kernels.USE_NUMBA = backend == "numba"
    # warm-up call so JIT compilation is not timed
    infer_batch(net, l0[:1], l1[:1])
    brute_force_marginals(small, evidence)
    t_jt, (marg, _) = best_of(lambda: infer_batch(net, l0, l1), args.repeat)
    t_bf, bf = best_of(lambda: brute_force_marginals(small, evidence), args.repeat)
    return t_jt, t_bf, marg, bf


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=2000, help="evidence rows for calibration")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--enum-depth", type=int, default=3, help="depth of the enumerated network")
    args = ap.parse_args(argv)

    data = generate(GenConfig(seed=args.seed, depth=3, branching=(2, 4), n_instances=10))
    net = build_network(data.taxonomy, data.true_params)
    rng = np.random.default_rng(args.seed)
    k = len(net.class_nodes)
    l0 = rng.normal(0, 2, (args.rows, k))
    l1 = rng.normal(0, 2, (args.rows, k))

    small_tax = generate(GenConfig(seed=args.seed, depth=args.enum_depth, branching=(2, 2), n_instances=1)).taxonomy
    small = build_network(small_tax, classes=small_tax.classes)
    evidence = [EvidenceFactor(c, float(rng.normal()), float(rng.normal())) for c in small.class_nodes]

    original = kernels.USE_NUMBA
    results = {}
    try:
        backends = ["numpy"] + (["numba"] if kernels.NUMBA_AVAILABLE else [])
        for b in backends:
            results[b] = run(b, args, net, l0, l1, small, evidence)
    finally:
        kernels.USE_NUMBA = original

    print(f"calibration: {k} class nodes, {args.rows} rows; enumeration: {len(small.class_nodes)} class nodes")
    print(f"{'backend':<8} {'calibrate (s)':>14} {'enumerate (s)':>14}")
    for b, (t_jt, t_bf, _, _) in results.items():
        print(f"{b:<8} {t_jt:>14.4f} {t_bf:>14.4f}")
    if "numba" in results:
        a, n = results["numpy"], results["numba"]
        diff = float(np.nanmax(np.abs(a[2] - n[2])))
        bdiff = max(abs(a[3].marginal[c] - n[3].marginal[c]) for c in small.class_nodes)
        print(f"speed-up: calibrate x{a[0] / n[0]:.1f}, enumerate x{a[1] / n[1]:.1f}")
        print(f"max backend difference: calibrate {diff:.1e}, enumerate {bdiff:.1e}")
    else:
        print("numba not available; only the numpy backend was timed")


if __name__ == "__main__":
    main()
