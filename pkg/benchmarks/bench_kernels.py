"""Compare the compiled kernels (with FFTW DCT plans) against the numpy fallback.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat R] [--sizes N ...]``

Times the element kernels, one lifted forward/adjoint pair and a short FISTA
solve for each backend and prints the speedup of the compiled path.
"""

import argparse
import timeit

import numpy as np

from accs import kernels
from accs.liftops import LiftedOperator, lift
from accs.modelgen import gen_coil_coeffs, gen_sampling_pattern, gen_sparse_signal, gen_subspace_basis
from accs.solver import SolverConfig, fista_l12, lambda_max
from accs.transforms import GridShape, Sparsifier


def _cases(N, k, C, seed=0):
    rng = np.random.default_rng(seed)
    gs = GridShape(N)
    op = LiftedOperator(gen_subspace_basis("haar", gs, k, rng), Sparsifier("dct2", gs),
                        gen_sampling_pattern(N, N // 2, rng))
    X0 = lift(gen_sparse_signal(N, 8, rng).z, gen_coil_coeffs("complex_sphere", k, C, rng).H)
    Y = op.forward(X0)
    Z = np.ascontiguousarray(rng.standard_normal((N, k * C)) + 1j * rng.standard_normal((N, k * C)))
    out = np.empty_like(Z)
    lam = 0.05 * lambda_max(op, Y)
    cfg = SolverConfig(max_iters=50, rel_change_tol=1e-300)

    def prox():
        kernels.get_backend().block_prox(Z, 1.0, out)

    def norms():
        kernels.get_backend().block_norms(Z)

    def operator():
        op.adjoint(op.forward(X0))

    def solve():
        fista_l12(op, Y, lam, cfg)

    return {"block_prox": prox, "block_norms": norms, "A*A": operator, "fista x50": solve}


def _time(fn, repeat):
    fn()
    number = max(1, int(0.05 / max(min(timeit.repeat(fn, number=1, repeat=3)), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--C", type=int, default=4)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is available")
    print(f"{'N':>6} {'kernel':<12}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for N in args.sizes:
        for name in ("block_prox", "block_norms", "A*A", "fista x50"):
            t = {}
            for b in backends:
                # fresh operators per backend so cached norm estimates are not shared
                with kernels.use_backend(b):
                    t[b] = _time(_cases(N, args.k, args.C)[name], args.repeat)
            sp = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{N:>6} {name:<12}" + "".join(f"{t[b] * 1e6:>12.1f}us" for b in backends)
                  + f"{sp:>9.2f}x")


if __name__ == "__main__":
    main()
