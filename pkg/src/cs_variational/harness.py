"""Phase-diagram sweeps and the brute-force posterior oracle."""
from __future__ import annotations

import hashlib
import io
import itertools
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import Instance, NumericError, ParameterError, PriorParams, Scaling, generate_instance
from .free_energy import Moments
from .solvers import SolverConfig, solve

CSV_HEADER = "rho,alpha,trials,success_rate,median_mse,mean_iters,divergence_rate,algo"
ORACLE_MAX_N = 14


@dataclass(frozen=True)
class SweepSpec:
    """A grid of ``(rho, alpha)`` cells, each solved on ``trials`` random instances.

    ``rho = 0`` is allowed (a trivially recoverable row); ``alpha`` must lie
    in ``(0, 1]``.  Phase-diagram instances use unit-variance matrices.
    """

    rho_grid: Sequence[float]
    alpha_grid: Sequence[float]
    n: int = 256
    delta0: float = 1e-8
    trials: int = 10
    algo: SolverConfig = field(default_factory=SolverConfig)
    success_mse: float = 1e-6
    workers: int = 1
    seed: int = 0
    scaling: Scaling = Scaling.UNIT_VARIANCE

    def __post_init__(self):
        object.__setattr__(self, "rho_grid", tuple(float(r) for r in self.rho_grid))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "scaling", Scaling.parse(self.scaling))
        if not self.rho_grid or not self.alpha_grid:
            raise ParameterError("grids must be non-empty")
        if any(not 0.0 <= r <= 1.0 for r in self.rho_grid):
            raise ParameterError("rho values must lie in [0, 1]")
        if any(not 0.0 < a <= 1.0 for a in self.alpha_grid):
            raise ParameterError("alpha values must lie in (0, 1]")
        if self.trials < 1 or self.n < 1 or self.workers < 1:
            raise ParameterError("trials, n and workers must be positive")
        if not self.delta0 > 0 or not self.success_mse > 0:
            raise ParameterError("delta0 and success_mse must be positive")


@dataclass(frozen=True)
class PhaseCell:
    rho: float
    alpha: float
    trials: int
    success_rate: float
    median_mse: float
    mean_iters: float
    divergence_rate: float
    algo: str

    def csv_row(self) -> str:
        return ",".join([
            _fmt(self.rho), _fmt(self.alpha), str(self.trials), _fmt(self.success_rate),
            _fmt(self.median_mse), _fmt(self.mean_iters), _fmt(self.divergence_rate), self.algo])


def _fmt(x: float) -> str:
    return repr(float(x))


def trial_seed(master: int, i_rho: int, i_alpha: int, trial: int) -> int:
    """Stable 63-bit seed: BLAKE2b of the four indices packed little-endian."""
    payload = struct.pack("<4q", master, i_rho, i_alpha, trial)
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little") & ((1 << 63) - 1)


def measurements_for(alpha: float, n: int) -> int:
    # round half up, never below one row
    return max(1, int(math.floor(alpha * n + 0.5)))


def _run_trial(job):
    rho, alpha, n, delta0, scaling, seed, config = job
    inst = generate_instance(n, measurements_for(alpha, n), PriorParams(rho), delta0,
                             scaling, seed=seed)
    try:
        with np.errstate(all="ignore"):
            rep = solve(inst, config)
    except NumericError:
        return math.inf, 0, True
    err = rep.mse_final if np.isfinite(rep.mse_final) else math.inf
    return err, rep.iterations, bool(rep.diverged or not np.isfinite(rep.mse_final))


def run_sweep(spec: SweepSpec) -> List[PhaseCell]:
    """Run every trial of every cell; cells come back in row-major (rho, alpha) order.

    Trials are independent tasks, so the result does not depend on
    ``spec.workers``.  A trial that raises a numeric error or diverges is
    counted as a failure and in ``divergence_rate``.
    """
    cells = list(itertools.product(enumerate(spec.rho_grid), enumerate(spec.alpha_grid)))
    jobs = []
    for (i, rho), (j, alpha) in cells:
        for t in range(spec.trials):
            jobs.append((rho, alpha, spec.n, spec.delta0, spec.scaling,
                         trial_seed(spec.seed, i, j, t), spec.algo))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=1))
    else:
        results = [_run_trial(job) for job in jobs]

    out = []
    for k, ((_, rho), (_, alpha)) in enumerate(cells):
        chunk = results[k * spec.trials:(k + 1) * spec.trials]
        errs = np.array([r[0] for r in chunk])
        iters = np.array([r[1] for r in chunk], dtype=float)
        div = np.array([r[2] for r in chunk])
        out.append(PhaseCell(
            rho=rho, alpha=alpha, trials=spec.trials,
            success_rate=float(np.mean(errs <= spec.success_mse)),
            median_mse=float(np.median(errs)), mean_iters=float(iters.mean()),
            divergence_rate=float(div.mean()), algo=spec.algo.algo.value))
    return out


def cells_to_csv(cells: Sequence[PhaseCell]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for cell in cells:
        buf.write(cell.csv_row() + "\n")
    return buf.getvalue()


def success_grid(cells: Sequence[PhaseCell], n_rho: int, n_alpha: int, level: float = 0.5):
    """Boolean ``(n_rho, n_alpha)`` array: cells whose success rate reaches ``level``."""
    rates = np.array([c.success_rate for c in cells]).reshape(n_rho, n_alpha)
    return rates >= level


def region_contains(outer, inner, slack: int = 1):
    """True if every success cell of ``inner`` lies within ``slack`` alpha-steps of one of ``outer``.

    Both arguments are boolean grids indexed ``[rho, alpha]``.  Returns the
    flag and the list of violating ``(i_rho, i_alpha)`` cells.
    """
    outer = np.asarray(outer, dtype=bool)
    inner = np.asarray(inner, dtype=bool)
    bad = []
    for i, j in zip(*np.nonzero(inner)):
        lo, hi = max(0, j - slack), min(outer.shape[1], j + slack + 1)
        if not outer[i, lo:hi].any():
            bad.append((int(i), int(j)))
    return not bad, bad


def smoothed_monotone(rates, window: int = 3, tol: float = 0.0):
    """Check that each rho row is non-decreasing in alpha after majority smoothing.

    Each cell is replaced by the median of its ``window`` neighbours along
    alpha (edges use the cells available).
    """
    rates = np.asarray(rates, dtype=float)
    half = window // 2
    ok = True
    for row in rates:
        sm = np.array([np.median(row[max(0, j - half):j + half + 1]) for j in range(row.size)])
        ok &= bool(np.all(np.diff(sm) >= -tol))
    return ok


# ---------------------------------------------------------------- exact oracle

def exact_posterior_oracle(instance: Instance) -> Moments:
    """Exact posterior means and variances by enumerating all supports.

    On a support ``S`` the posterior of ``x_S`` is Gaussian with precision
    ``A = I / g + F_S^T F_S / delta``; the evidence of ``S`` follows from the
    matrix determinant lemma and Woodbury's identity.  Feasible for
    ``N <= 14``.
    """
    n, m = instance.n, instance.m
    if n > ORACLE_MAX_N:
        raise ParameterError(f"oracle enumerates 2^N supports; N={n} exceeds {ORACLE_MAX_N}")
    rho = instance.prior.rho
    g = instance.prior.gaussian_var
    d = instance.delta0
    F, y = instance.F, instance.y
    Fty = F.T @ y / d
    G = F.T @ F / d
    yy = float(y @ y) / d
    log_rho = math.log(rho) if rho > 0 else -math.inf
    log_q = math.log1p(-rho) if rho < 1 else -math.inf

    log_w, means, variances = [], [], []
    for mask in range(1 << n):
        S = [i for i in range(n) if mask >> i & 1]
        k = len(S)
        prior_w = k * log_rho if k else 0.0
        prior_w += (n - k) * log_q if n - k else 0.0
        if prior_w == -math.inf:
            continue
        mu = np.zeros(n)
        var = np.zeros(n)
        if k:
            A = G[np.ix_(S, S)] + np.eye(k) / g
            cf = cho_factor(A, lower=True)
            muS = cho_solve(cf, Fty[S])
            cov = cho_solve(cf, np.eye(k))
            logdet_gA = 2.0 * float(np.sum(np.log(np.diag(cf[0])))) + k * math.log(g)
            quad = float(muS @ Fty[S])
            mu[S] = muS
            var[S] = np.diag(cov)
        else:
            logdet_gA = 0.0
            quad = 0.0
        log_ev = -0.5 * (m * math.log(2 * math.pi * d) + logdet_gA + yy - quad)
        log_w.append(prior_w + log_ev)
        means.append(mu)
        variances.append(var)
    log_w = np.array(log_w)
    w = np.exp(log_w - log_w.max())
    w /= w.sum()
    means = np.array(means)
    variances = np.array(variances)
    a = w @ means
    # spread about the mixture mean, summed without cancellation
    c = w @ (variances + (means - a) ** 2)
    return Moments(a, c)
