"""Compare the compiled and numpy MLP kernels on actor-sized networks.

    python benchmarks/bench_kernels.py [--repeat 2000] [--paths 5]
"""

import argparse
import timeit

import numpy as np

from acmptc import _kernels
from acmptc.drl.nets import actor_sizes, init_mlp


def bench(backend, params, x, repeat):
    acts = backend.forward(params.weights, params.biases, x)
    dout = np.ones(params.sizes[-1])
    fwd = timeit.timeit(lambda: backend.forward(params.weights, params.biases, x), number=repeat)
    bwd = timeit.timeit(lambda: backend.backward(params.weights, acts, dout), number=repeat)
    return fwd / repeat * 1e6, bwd / repeat * 1e6


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--paths", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    params = init_mlp(actor_sizes(args.paths), rng)
    x = rng.random(params.sizes[0])
    rows = [("python", _kernels.python_backend)]
    if _kernels.compiled_backend is not None:
        rows.append(("cython", _kernels.compiled_backend))
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"actor {params.sizes}, {params.n_params} params, {args.repeat} calls each")
    print(f"{'backend':>8} {'forward us':>11} {'backward us':>12}")
    results = {}
    for name, be in rows:
        results[name] = bench(be, params, x, args.repeat)
        print(f"{name:>8} {results[name][0]:11.2f} {results[name][1]:12.2f}")
    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"speedup: forward {py[0] / cy[0]:.2f}x, backward {py[1] / cy[1]:.2f}x")
        a = _kernels.python_backend.forward(params.weights, params.biases, x)[-1]
        b = _kernels.compiled_backend.forward(params.weights, params.biases, x)[-1]
        print(f"max |difference| of outputs: {np.abs(a - b).max():.2e}")


if __name__ == "__main__":
    main()
