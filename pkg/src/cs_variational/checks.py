"""Numerical property checks shared by the ``check`` command and the test suite.

Every check returns a :class:`CheckResult`.  The oracles here are
independent of the closed forms they test: adaptive quadrature for the
denoiser, central differences for gradients, brute-force enumeration for
the posterior.
"""
from __future__ import annotations

import math
import warnings
from typing import Callable, List, NamedTuple

import numpy as np
from numba import cfunc, types
from scipy import LowLevelCallable
from scipy.integrate import quad

from .core import Instance, OutputChannel, PriorParams, Scaling, generate_instance
from .denoiser import dlogz_dR, dlogz_dsigma2, scalar_posterior
from .free_energy import (LOG_2PI, Moments, VarParams, bethe_energy, gamp_generating_gradient,
                          gamp_fixed_point_state, mf_energy)
from .harness import exact_posterior_oracle
from .solvers import (Algo, SolverConfig, normalize_columns, solve_amp, solve_gamp, solve_ist,
                      solve_mf_parallel)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    worst: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return f"{tag} {self.name}: worst={self.worst:.3e} limit={self.limit:.1e}{extra}"


# ---------------------------------------------------------------- quadrature oracle

@cfunc(types.double(types.intc, types.CPointer(types.double)))
def _slab_integrand(n, xx):
    # rho N(x; 0, g) exp(-(x - R)^2 / 2s) (x - center)^k
    x, rho, g, R, s, center, k = xx[0], xx[1], xx[2], xx[3], xx[4], xx[5], xx[6]
    w = rho * math.exp(-0.5 * x * x / g) / math.sqrt(2 * math.pi * g)
    w *= math.exp(-(x - R) * (x - R) / (2 * s))
    return w * (x - center) ** k


_SLAB = LowLevelCallable(_slab_integrand.ctypes)


def quadrature_posterior(prior: PriorParams, R: float, sigma2: float, lim: float = 12.0):
    """``(log Z, mean, var)`` of the tilted prior by adaptive quadrature on ``[-lim, lim]``.

    The spike at zero is added analytically; the variance integrates squared
    deviations from the quadrature mean.
    """
    rho, g = prior.rho, prior.gaussian_var
    peak = R * g / (g + sigma2)

    def q(center, k):
        with warnings.catch_warnings():
            # quad flags roundoff near the 1e-13 target; the result is still accurate
            warnings.simplefilter("ignore")
            return quad(_SLAB, -lim, lim, args=(rho, g, R, sigma2, center, k), points=[R, peak],
                        epsabs=0.0, epsrel=1e-13, limit=200)[0]

    spike = (1 - rho) * math.exp(-R * R / (2 * sigma2))
    Z = spike + q(0.0, 0)
    mean = q(0.0, 1) / Z
    var = (q(mean, 2) + spike * mean * mean) / Z
    return math.log(Z), mean, var


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b), 1e-300)
    return np.where(a == b, 0.0, np.abs(a - b) / scale)


def check_denoiser_quadrature(points: int = 20, limit: float = 1e-10) -> CheckResult:
    """Closed form against quadrature on a ``points^3`` grid over (rho, R, sigma2)."""
    worst = 0.0
    where = ""
    for rho in np.linspace(0.025, 0.975, points):
        prior = PriorParams(float(rho))
        for R in np.linspace(-5.0, 5.0, points):
            for s in np.logspace(-2, 2, points):
                ref = quadrature_posterior(prior, R, s)
                got = scalar_posterior(prior, R, s)
                err = float(np.max(_rel(got, ref)))
                if err > worst:
                    worst, where = err, f"at rho={rho:.3g} R={R:.3g} sigma2={s:.3g}"
    return CheckResult("denoiser vs quadrature", worst <= limit, worst, limit, where)


# ---------------------------------------------------------------- finite differences

def central_difference(f: Callable, x, h: float = 1e-6):
    """Central-difference gradient of a scalar function of a vector (or scalar)."""
    x = np.array(x, dtype=float)
    if x.ndim == 0:
        return (f(x + h) - f(x - h)) / (2 * h)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        out.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def check_identities(n_points: int = 1000, limit: float = 1e-5, seed: int = 0) -> CheckResult:
    """d log Z / dR and d log Z / d sigma2 against central differences of log Z."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    where = ""
    for _ in range(n_points):
        prior = PriorParams(float(rng.uniform(0.01, 0.99)))
        R = float(rng.uniform(-10, 10))
        s = float(10 ** rng.uniform(-2, 2))
        logz = lambda r, v: scalar_posterior(prior, r, v).log_z
        fd_R = central_difference(lambda r: logz(r, s), R)
        fd_s = central_difference(lambda v: logz(R, v), s, h=1e-6 * s)
        errs = (_rel(dlogz_dR(prior, R, s), fd_R), _rel(dlogz_dsigma2(prior, R, s), fd_s))
        err = float(max(errs))
        if err > worst:
            worst, where = err, f"at rho={prior.rho:.3g} R={R:.3g} sigma2={s:.3g}"
    return CheckResult("log Z derivative identities", worst <= limit, worst, limit, where)


def _random_problem(rng, n, m):
    prior = PriorParams(float(rng.uniform(0.05, 0.95)))
    F = rng.standard_normal((m, n)) / math.sqrt(n)
    y = rng.standard_normal(m)
    delta = float(10 ** rng.uniform(-2, 0))
    inst = Instance(F=F, y=y, delta0=delta, prior=prior)
    R = rng.standard_normal(n) * 2
    logs = rng.uniform(-2, 1, n)
    return inst, R, logs, delta


def energy_gradient_error(energy, inst, R, logs, delta, h: float = 1e-6) -> float:
    """Max-norm relative error of the (R, log sigma2) gradient of ``energy``."""
    n = R.size
    rep = energy(inst, VarParams(R, np.exp(logs), delta))
    f = lambda z: energy(inst, VarParams(z[:n], np.exp(z[n:]), delta), grad=False).value
    fd = central_difference(f, np.concatenate([R, logs]), h=h)
    g = np.concatenate([rep.grad_R, rep.grad_logsigma2])
    return float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-300))


def check_energy_gradients(n_points: int = 20, n: int = 8, m: int = 4, limit: float = 1e-5,
                           seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        inst, R, logs, delta = _random_problem(rng, n, m)
        for energy in (mf_energy, bethe_energy):
            worst = max(worst, energy_gradient_error(energy, inst, R, logs, delta))
    return CheckResult("mean-field and Bethe gradients", worst <= limit, worst, limit)


def check_bound_chain(n_points: int = 10_000, slack: float = 1e-12, seed: int = 2) -> CheckResult:
    """(M/2) log(2 pi delta) <= Bethe <= mean field at random points."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    failures = 0
    for _ in range(n_points):
        n = int(rng.integers(1, 13))
        m = int(rng.integers(1, 9))
        inst, R, logs, delta = _random_problem(rng, n, m)
        params = VarParams(R, np.exp(logs), delta)
        floor = 0.5 * m * (LOG_2PI + math.log(delta))
        fb = bethe_energy(inst, params, grad=False).value
        fm = mf_energy(inst, params, grad=False).value
        gaps = (floor - fb, fb - fm)
        scale = max(1.0, abs(fm))
        viol = max(gaps) / scale
        worst = max(worst, viol)
        failures += any(gap > slack * scale for gap in gaps)
    return CheckResult("free-energy bound chain", failures == 0, worst, slack,
                       f"violations={failures}/{n_points}")


# ---------------------------------------------------------------- solver correspondences

def check_mf_ist(seeds: int = 20, iters: int = 50, limit: float = 1e-12) -> CheckResult:
    """Parallel mean field on a column-normalized matrix reproduces iterative thresholding.

    Undamped thresholding blows up at small noise variance when M < N, and a
    diverging trajectory amplifies last-bit differences without bound, so
    the comparison runs at ``delta = 1`` where both iterations stay bounded.
    """
    worst = 0.0
    for seed in range(seeds):
        inst = generate_instance(64, 32, PriorParams(0.1), 1.0, Scaling.ONE_OVER_N, seed=seed)
        normed, _ = normalize_columns(inst)
        cfg = SolverConfig(Algo.IST, max_iter=iters, tol=1e-300)
        mf_iters, ist_iters = [], []
        solve_mf_parallel(normed, cfg, callback=lambda t, a, c: mf_iters.append(a.copy()))
        solve_ist(normed, cfg, callback=lambda t, a, c: ist_iters.append(a.copy()))
        if len(mf_iters) != len(ist_iters):
            return CheckResult("parallel mean field = thresholding", False, math.inf, limit,
                               "trajectory lengths differ")
        for u, v in zip(mf_iters, ist_iters):
            worst = max(worst, float(np.max(np.abs(u - v))))
    return CheckResult("parallel mean field = thresholding", worst <= limit, worst, limit)


def _stationarity_instance(seed: int, n: int = 200):
    # moderate noise keeps the energy O(N) so the scaled test is meaningful
    return generate_instance(n, n // 2, PriorParams(0.1), 1e-3, Scaling.ONE_OVER_N, seed=seed)


def check_amp_bethe(runs: int = 20, limit: float = 1e-6) -> CheckResult:
    """Converged AMP runs are stationary points of the Bethe free energy."""
    worst = 0.0
    skipped = 0
    for seed in range(runs):
        inst = _stationarity_instance(seed)
        rep = solve_amp(inst, SolverConfig(Algo.AMP, max_iter=5000, tol=1e-12))
        if not rep.converged:
            skipped += 1
            worst = math.inf
            continue
        e = bethe_energy(inst, rep.params_final)
        g = max(np.max(np.abs(e.grad_R)), np.max(np.abs(e.grad_logsigma2)))
        worst = max(worst, float(g) / (1 + abs(e.value)))
    return CheckResult("AMP fixed points are Bethe-stationary", worst <= limit, worst, limit,
                       f"unconverged={skipped}/{runs}")


def check_gamp(runs: int = 10, limit: float = 1e-6, traj_limit: float = 1e-10) -> CheckResult:
    """GAMP (AWGN) fixed points zero every gradient block; GAMP and AMP iterates coincide."""
    worst = 0.0
    worst_traj = 0.0
    unconverged = 0
    for seed in range(runs):
        inst = _stationarity_instance(seed)
        channel = OutputChannel.awgn(inst.delta0)
        cfg = SolverConfig(Algo.GAMP, max_iter=5000, tol=1e-12)
        ga, am = [], []
        rep = solve_gamp(inst, channel, cfg, callback=lambda t, a, c: ga.append(a.copy()))
        solve_amp(inst, SolverConfig(Algo.AMP, max_iter=5000, tol=1e-12),
                  callback=lambda t, a, c: am.append(a.copy()))
        if len(ga) != len(am):
            worst_traj = math.inf
        else:
            for u, v in zip(ga, am):
                worst_traj = max(worst_traj, float(np.max(np.abs(u - v))))
        if not rep.converged:
            unconverged += 1
            worst = math.inf
            continue
        moments = Moments(rep.a_final, rep.c_final)
        state = gamp_fixed_point_state(inst, channel, moments)
        grads = gamp_generating_gradient(inst, channel, rep.params_final, moments, state.omega)
        scale = 1 + abs(bethe_energy(inst, rep.params_final, grad=False).value)
        for block in grads.values():
            worst = max(worst, float(np.max(np.abs(block))) / scale)
    ok = worst <= limit and worst_traj <= traj_limit
    return CheckResult("GAMP stationarity and AMP trajectory identity", ok, worst, limit,
                       f"trajectory_dev={worst_traj:.3e} (limit {traj_limit:.0e}) "
                       f"unconverged={unconverged}/{runs}")


def check_scalar_oracle(limit: float = 1e-12) -> CheckResult:
    """The enumeration oracle on a 1x1 problem equals the denoiser at (R=y, sigma2=delta)."""
    worst = 0.0
    for y in np.linspace(-4, 4, 9):
        for delta in (1e-4, 1e-2, 1.0, 10.0):
            for rho in (0.05, 0.3, 0.5, 0.9):
                prior = PriorParams(rho)
                inst = Instance(F=[[1.0]], y=[y], delta0=delta, prior=prior)
                oracle = exact_posterior_oracle(inst)
                post = scalar_posterior(prior, y, delta)
                worst = max(worst, float(_rel(oracle.a[0], post.mean)),
                            float(_rel(oracle.c[0], post.var)))
    return CheckResult("N=1 oracle = denoiser", worst <= limit, worst, limit)


def quick_suite() -> List[CheckResult]:
    """Reduced-size versions of the property checks, for the command line."""
    return [
        check_denoiser_quadrature(points=6),
        check_identities(n_points=200),
        check_energy_gradients(n_points=5),
        check_bound_chain(n_points=1000),
        check_mf_ist(seeds=5),
        check_amp_bethe(runs=4),
        check_gamp(runs=3),
        check_scalar_oracle(),
    ]


def full_suite() -> List[CheckResult]:
    return [
        check_denoiser_quadrature(),
        check_identities(),
        check_energy_gradients(),
        check_bound_chain(),
        check_mf_ist(),
        check_amp_bethe(),
        check_gamp(),
        check_scalar_oracle(),
    ]
