"""Direct free-energy minimization with and without diagonal preconditioning.

For each seed the mean-field energy (fixed and learned noise variance) and the
Bethe energy are minimized by plain L-BFGS and by L-BFGS that switches to a
diagonally rescaled problem for the second half of each stage.  A large gap
between the two columns means the plain run stalled, not that the energy has
a bad minimum.
"""
import sys
import time

import numpy as np

from cs_variational import PriorParams, Scaling, SolverConfig, generate_instance, solve

N = int(sys.argv[1]) if len(sys.argv) > 1 else 256
SEEDS = int(sys.argv[2]) if len(sys.argv) > 2 else 5
ALPHA, RHO, DELTA0 = 0.5, 0.1, 1e-8

for algo in ("mf-min", "mf-learn-min", "bethe-min"):
    plain, pre = [], []
    t0 = time.time()
    for seed in range(SEEDS):
        inst = generate_instance(N, int(ALPHA * N), PriorParams(RHO), DELTA0, Scaling.ONE_OVER_N,
                                 seed=seed)
        plain.append(solve(inst, SolverConfig(algo)).mse_final)
        pre.append(solve(inst, SolverConfig(algo, precondition=True)).mse_final)
    print(f"{algo:13s} median mse plain {np.median(plain):.2e} "
          f"preconditioned {np.median(pre):.2e}  "
          f"success {sum(e <= 1e-6 for e in plain)}/{SEEDS} vs {sum(e <= 1e-6 for e in pre)}/{SEEDS}"
          f"  ({time.time() - t0:.0f}s)")
