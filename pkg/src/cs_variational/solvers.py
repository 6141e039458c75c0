"""Reconstruction algorithms.

Fixed-point iterations (sequential and parallel mean field, iterative
thresholding, AMP, GAMP, energy-damped AMP) and direct quasi-Newton
minimization of the mean-field or Bethe free energy.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numba
import numpy as np

from .core import Instance, NumericError, OutputChannel, ParameterError, dumps_exact, mse
from .denoiser import SIGMA2_FLOOR, GaussBernoulliDenoiser, gb_scalar
from .free_energy import (DELTA_FLOOR, Moments, VarParams, bethe_energy, channel_partition,
                          curvature_diagonal, learn_delta, mf_energy)
from .lbfgs import minimize_lbfgs

log = logging.getLogger(__name__)


class Algo(str, enum.Enum):
    MF_SEQ = "mf-seq"
    MF_LEARN = "mf-learn"
    IST = "ist"
    AMP = "amp"
    AMP_DAMPED = "amp-damped"
    GAMP = "gamp"
    MINIMIZE_MF = "mf-min"
    MINIMIZE_MF_LEARN = "mf-learn-min"
    MINIMIZE_BETHE = "bethe-min"


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``seed_init`` is ``"zeros"``, ``"prior-mean"`` or ``("random", seed)``.
    ``damping=None`` selects the algorithm default (0.5 for damped AMP, else 0).
    ``continuation`` is the number of noise-variance stages used by the
    minimizers (``None``: 10 for ``bethe-min``, 1 otherwise); ``ftol > 0``
    stops a minimization stage once the relative decrease per step stays
    below it (off by default).  ``precondition`` switches the minimizers to
    a diagonally rescaled L-BFGS for the second half of each stage.
    """

    algo: Algo = Algo.AMP
    max_iter: int = 1000
    tol: float = 1e-8
    damping: Optional[float] = None
    learn_delta: bool = False
    delta_init: Optional[float] = None
    seed_init: object = "zeros"
    continuation: Optional[int] = None
    ftol: float = 0.0
    precondition: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algo", Algo(self.algo))
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.damping is not None and not 0.0 <= self.damping < 1.0:
            raise ParameterError("damping must lie in [0, 1)")
        if self.delta_init is not None and not self.delta_init > 0:
            raise ParameterError("delta_init must be positive")
        if self.continuation is not None and self.continuation < 1:
            raise ParameterError("continuation must be at least 1")
        if not self.ftol >= 0:
            raise ParameterError("ftol must be non-negative")

    @property
    def beta(self) -> float:
        if self.damping is not None:
            return self.damping
        return 0.5 if self.algo is Algo.AMP_DAMPED else 0.0

    @property
    def stages(self) -> int:
        if self.continuation is not None:
            return self.continuation
        return 10 if self.algo is Algo.MINIMIZE_BETHE else 1


@dataclass
class SolveReport:
    algo: str
    a_final: np.ndarray
    c_final: np.ndarray
    params_final: VarParams
    iterations: int
    converged: bool
    energy_trace: List[float] = field(default_factory=list)
    delta_trace: List[float] = field(default_factory=list)
    mse_final: Optional[float] = None
    diverged: bool = False
    events: List[str] = field(default_factory=list)

    def to_dict(self, trace: bool = False) -> dict:
        d = {
            "algo": self.algo,
            "iterations": self.iterations,
            "converged": self.converged,
            "diverged": self.diverged,
            "mse_final": self.mse_final,
            "delta_final": self.params_final.delta,
            "a_final": self.a_final.tolist(),
            "c_final": self.c_final.tolist(),
            "R_final": self.params_final.R.tolist(),
            "sigma2_final": self.params_final.sigma2.tolist(),
            "events": list(self.events),
        }
        if trace:
            d["energy_trace"] = [float(e) for e in self.energy_trace]
            d["delta_trace"] = [float(e) for e in self.delta_trace]
        return d

    def to_json(self, trace: bool = False) -> str:
        return dumps_exact(self.to_dict(trace=trace))


def _report(instance, algo, a, c, R, s, delta, iterations, converged, energy_trace,
            delta_trace=(), diverged=False, events=()):
    params = VarParams(R, np.maximum(s, SIGMA2_FLOOR), delta)
    return SolveReport(
        algo=Algo(algo).value, a_final=np.asarray(a, dtype=float), c_final=np.asarray(c, dtype=float),
        params_final=params, iterations=iterations, converged=converged,
        energy_trace=list(energy_trace), delta_trace=list(delta_trace),
        mse_final=None if instance.x_true is None else mse(a, instance.x_true),
        diverged=diverged, events=list(events))


def _initial_a(instance, config):
    init = config.seed_init
    n = instance.n
    if init in ("zeros", "prior-mean", None):
        return np.zeros(n)
    if isinstance(init, (tuple, list)) and init[0] == "random":
        rng = np.random.Generator(np.random.PCG64(int(init[1])))
        p = instance.prior
        return np.where(rng.random(n) < p.rho, rng.standard_normal(n) * math.sqrt(p.gaussian_var), 0.0)
    raise ParameterError(f"unknown seed_init {init!r}")


def _check_finite(what, t, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite {what}", where=f"iteration {t}")


# ---------------------------------------------------------------- mean field

@numba.njit(cache=True)
def _mf_sweep(Ft, r, a, c, R, s, colnorm2, rho, g):
    """One sequential sweep.  ``Ft`` is F transposed (rows are columns of F)."""
    n, mdim = Ft.shape
    max_change = 0.0
    for i in range(n):
        col = Ft[i]
        dot = 0.0
        for k in range(mdim):
            dot += col[k] * r[k]
        Ri = a[i] + dot / colnorm2[i]
        res = gb_scalar(rho, g, Ri, s[i])
        ai, ci = res[1], res[2]
        da = ai - a[i]
        if da != 0.0:
            for k in range(mdim):
                r[k] -= col[k] * da
        change = abs(da)
        if change > max_change:
            max_change = change
        a[i] = ai
        c[i] = ci
        R[i] = Ri
    return max_change


def _mf_sequential_loop(instance, config, learn, callback):
    prior = instance.prior
    colnorm2 = instance.colnorm2
    if np.any(colnorm2 <= 0):
        raise ParameterError("F has an all-zero column")
    if learn:
        delta = config.delta_init if config.delta_init is not None else max(
            float(instance.y @ instance.y) / instance.m, DELTA_FLOOR)
    else:
        delta = config.delta_init if config.delta_init is not None else instance.delta0
    Ft = np.ascontiguousarray(instance.F.T)
    a = _initial_a(instance, config)
    c = np.zeros(instance.n)
    R = a.copy()
    r = instance.y - instance.F @ a
    s = np.maximum(delta / colnorm2, SIGMA2_FLOOR)
    energy_trace, delta_trace = [], []
    converged = False
    t = 0
    for t in range(1, config.max_iter + 1):
        s = np.maximum(delta / colnorm2, SIGMA2_FLOOR)
        change = _mf_sweep(Ft, r, a, c, R, s, colnorm2, prior.rho, prior.gaussian_var)
        _check_finite("mean-field state", t, a, c)
        # the residual drifts by rounding over many sweeps; refresh it
        r = instance.y - instance.F @ a
        d_change = 0.0
        if learn:
            new_delta = learn_delta(instance, Moments(a, c))
            d_change = abs(new_delta - delta) / delta
            delta = new_delta
            delta_trace.append(delta)
        energy = mf_energy(instance, VarParams(R, s, delta), grad=False).value
        if not math.isfinite(energy):
            raise NumericError("non-finite mean-field energy", where=f"iteration {t}")
        energy_trace.append(energy)
        if callback is not None:
            callback(t, a, c)
        if change < config.tol and d_change < config.tol:
            converged = True
            break
    algo = Algo.MF_LEARN if learn else Algo.MF_SEQ
    return _report(instance, algo, a, c, R, s, delta, t, converged, energy_trace, delta_trace)


def solve_mf_sequential(instance: Instance, config: SolverConfig = SolverConfig(Algo.MF_SEQ),
                        callback: Callable = None) -> SolveReport:
    """Sequential mean-field iteration at fixed noise variance.

    Each coordinate update is the exact minimizer of the mean-field energy
    over that coordinate's factor, so the recorded energy never increases.
    """
    return _mf_sequential_loop(instance, config, learn=False, callback=callback)


def solve_mf_learn(instance: Instance, config: SolverConfig = SolverConfig(Algo.MF_LEARN),
                   callback: Callable = None) -> SolveReport:
    """Sequential mean field alternated with the noise-variance update.

    Starts from ``delta = |y|^2 / M`` unless ``config.delta_init`` is given.
    """
    return _mf_sequential_loop(instance, config, learn=True, callback=callback)


def solve_mf_parallel(instance: Instance, config: SolverConfig = SolverConfig(Algo.MF_SEQ),
                      callback: Callable = None) -> SolveReport:
    """Mean-field equations with all coordinates updated simultaneously."""
    den = GaussBernoulliDenoiser(instance.prior)
    delta = config.delta_init if config.delta_init is not None else instance.delta0
    F = instance.F
    s = delta / instance.colnorm2
    a = _initial_a(instance, config)
    c = np.zeros_like(a)
    R = a.copy()
    energy_trace = []
    converged = False
    t = 0
    for t in range(1, config.max_iter + 1):
        R = a + (s / delta) * (F.T @ (instance.y - F @ a))
        post = den(R, s)
        change = float(np.max(np.abs(post.mean - a)))
        a, c = post.mean, post.var
        _check_finite("mean-field state", t, a, c)
        energy_trace.append(mf_energy(instance, VarParams(R, s, delta), grad=False).value)
        if callback is not None:
            callback(t, a, c)
        if change < config.tol:
            converged = True
            break
    return _report(instance, Algo.MF_SEQ, a, c, R, s, delta, t, converged, energy_trace)


def normalize_columns(instance: Instance):
    """Instance with unit-norm columns and the column norms used."""
    norms = np.sqrt(instance.colnorm2)
    if np.any(norms <= 0):
        raise ParameterError("F has an all-zero column")
    x = None if instance.x_true is None else instance.x_true * norms
    return instance.with_matrix(instance.F / norms, x_true=x), norms


def solve_ist(instance: Instance, config: SolverConfig = SolverConfig(Algo.IST),
              callback: Callable = None) -> SolveReport:
    """Iterative thresholding ``a <- eta_delta(F^T (y - F a) + a)``.

    Runs on column-normalized ``F``; the callback sees the normalized iterate,
    the report holds the estimate mapped back to the original scale.
    """
    den = GaussBernoulliDenoiser(instance.prior)
    delta = config.delta_init if config.delta_init is not None else instance.delta0
    normed, norms = normalize_columns(instance)
    F = normed.F
    a = _initial_a(instance, config) * norms
    c = np.zeros_like(a)
    R = a.copy()
    energy_trace = []
    converged = False
    t = 0
    for t in range(1, config.max_iter + 1):
        z = instance.y - F @ a
        R = F.T @ z + a
        new = den.eta(R, delta)
        change = float(np.max(np.abs(new - a)))
        a = new
        _check_finite("thresholding state", t, a)
        energy_trace.append(mf_energy(normed, VarParams(R, np.full_like(R, delta), delta),
                                      grad=False).value)
        if callback is not None:
            callback(t, a, None)
        if change < config.tol:
            converged = True
            break
    c = den(R, delta).var
    return _report(instance, Algo.IST, a / norms, c / norms ** 2, R / norms,
                   np.full_like(R, delta) / norms ** 2, delta, t, converged, energy_trace)


# ---------------------------------------------------------------- AMP family

class _Diverged(Exception):
    pass


def _amp_loop(instance, config, channel, algo, callback):
    prior = instance.prior
    den = GaussBernoulliDenoiser(prior)
    F, F2, y = instance.F, instance.F2, instance.y
    n = instance.n
    delta = config.delta_init if config.delta_init is not None else instance.delta0
    if channel is None:
        channel = OutputChannel.awgn(delta)
    gaussian = channel.kind == "awgn" and algo is not Algo.GAMP
    beta = config.beta
    guard = 1e3 * math.sqrt(n)

    a = _initial_a(instance, config)
    c = np.full(n, prior.rho * prior.gaussian_var)
    omega = y.copy()
    V = F2 @ c
    R = a.copy()
    s = np.ones(n)
    if not gaussian:
        Vg = np.maximum(V, 1e-300)
        _, g_prev, _ = channel_partition(channel, omega, y, Vg)
    energy_trace, delta_trace = [], []
    converged = diverged = False
    t = 0
    for t in range(1, config.max_iter + 1):
        V_new = F2 @ c
        if gaussian:
            denom_old = channel.delta + V
            if np.any(denom_old <= 0):
                raise NumericError("V + delta must be positive", where=f"iteration {t}")
            onsager = (y - omega) / denom_old
        else:
            onsager = g_prev
        omega_new = F @ a - V_new * onsager
        if beta > 0:
            V_new = (1 - beta) * V_new + beta * V
            omega_new = (1 - beta) * omega_new + beta * omega
        V, omega = V_new, omega_new
        if gaussian:
            denom = channel.delta + V
            if np.any(denom <= 0):
                raise NumericError("V + delta must be positive", where=f"iteration {t}")
            g = (y - omega) / denom
            minus_dg = 1.0 / denom
        else:
            _, g, dg = channel_partition(channel, omega, y, np.maximum(V, 1e-300))
            minus_dg = -dg
            g_prev = g
        s = 1.0 / (F2.T @ minus_dg)
        R = a + s * (F.T @ g)
        post = den(R, s)
        change = float(np.max(np.abs(post.mean - a)))
        a, c = post.mean, post.var
        _check_finite("AMP state", t, a, c, V, omega)
        if gaussian and config.learn_delta:
            delta = learn_delta(instance, Moments(a, c))
            channel = OutputChannel.awgn(delta)
            delta_trace.append(delta)
        if channel.kind == "awgn":
            energy_trace.append(bethe_energy(instance, VarParams(R, s, channel.delta),
                                             grad=False).value)
        if callback is not None:
            callback(t, a, c)
        if np.linalg.norm(a) > guard:
            diverged = True
            break
        if change < config.tol:
            converged = True
            break
    return _report(instance, algo, a, c, R, s, delta if channel.kind != "awgn" else channel.delta,
                   t, converged, energy_trace, delta_trace, diverged=diverged)


def solve_amp(instance: Instance, config: SolverConfig = SolverConfig(Algo.AMP),
              callback: Callable = None) -> SolveReport:
    """AMP for the Gaussian channel.

    Starts from ``a = 0``, ``c = rho * var``, ``omega = y``.  With
    ``damping = beta`` the ``(V, omega)`` updates become
    ``(1 - beta) * new + beta * old``.  Stops early with ``diverged=True`` if
    ``|a|`` exceeds ``1e3 sqrt(N)``.
    """
    return _amp_loop(instance, config, None, Algo.AMP, callback)


def solve_gamp(instance: Instance, channel: OutputChannel,
               config: SolverConfig = SolverConfig(Algo.GAMP),
               callback: Callable = None) -> SolveReport:
    """GAMP: the AMP recursion with the output function of an arbitrary channel.

    The Onsager term uses ``g_out`` from the previous iteration, the
    variances use ``-d g_out / d omega``; for an AWGN channel the iterates
    coincide with :func:`solve_amp`.
    """
    return _amp_loop(instance, config, channel, Algo.GAMP, callback)


def solve_amp_damped(instance: Instance, config: SolverConfig = SolverConfig(Algo.AMP_DAMPED),
                     callback: Callable = None, max_backoffs: int = 8) -> SolveReport:
    """AMP whose steps are damped until the Bethe free energy does not increase.

    Each iteration computes the plain AMP proposal ``(R*, sigma2*)`` and
    blends it with the current fields in natural coordinates,
    ``1/sigma2 <- (1 - beta)/sigma2* + beta/sigma2`` and likewise for
    ``R/sigma2``.  (A linear blend of ``R`` and ``sigma2`` themselves can
    raise the energy for every ``beta`` in ``(0, 1)`` even when the full step
    lowers it.)  A blend that raises the energy is retried with
    ``beta <- 1 - (1 - beta)/2``; after an accepted step ``beta`` relaxes back
    toward ``config.beta``.  When all backoffs fail the last blend is accepted
    and the event is logged.  Convergence is tested on the undamped proposal,
    ``max |f_a(R*, sigma2*) - a| < tol``, so heavy damping cannot fake it.
    """
    prior = instance.prior
    den = GaussBernoulliDenoiser(prior)
    F, F2, y = instance.F, instance.F2, instance.y
    n = instance.n
    delta = config.delta_init if config.delta_init is not None else instance.delta0
    base_beta = config.beta
    beta = base_beta
    guard = 1e3 * math.sqrt(n)

    a = _initial_a(instance, config)
    c = np.full(n, prior.rho * prior.gaussian_var)
    omega = y.copy()
    V = F2 @ c
    R = s = None
    energy = math.inf
    energy_trace, events = [], []
    converged = diverged = False
    t = 0
    for t in range(1, config.max_iter + 1):
        V_new = F2 @ c
        denom_old = delta + V
        if np.any(denom_old <= 0):
            raise NumericError("V + delta must be positive", where=f"iteration {t}")
        omega = F @ a - V_new * (y - omega) / denom_old
        V = V_new
        denom = delta + V
        s_full = 1.0 / (F2.T @ (1.0 / denom))
        R_full = a + s_full * (F.T @ ((y - omega) / denom))
        _check_finite("damped AMP fields", t, R_full, s_full)
        step = float(np.max(np.abs(den(R_full, s_full).mean - a)))
        if R is None:
            R_t, s_t = R_full, s_full
            e_t = bethe_energy(instance, VarParams(R_t, s_t, delta), grad=False).value
        else:
            for attempt in range(max_backoffs + 1):
                prec = (1 - beta) / s_full + beta / s
                s_t = 1.0 / prec
                R_t = s_t * ((1 - beta) * R_full / s_full + beta * R / s)
                e_t = bethe_energy(instance, VarParams(R_t, s_t, delta), grad=False).value
                if e_t <= energy:
                    break
                if attempt == max_backoffs:
                    events.append(f"iteration {t}: backoffs exhausted, step accepted")
                    log.info("damped AMP: backoffs exhausted at iteration %d", t)
                    break
                beta = 1 - (1 - beta) / 2
            beta = max(base_beta, 1 - 2 * (1 - beta))
        R, s, energy = R_t, s_t, e_t
        post = den(R, s)
        a, c = post.mean, post.var
        _check_finite("damped AMP state", t, a, c)
        energy_trace.append(energy)
        if callback is not None:
            callback(t, a, c)
        if np.linalg.norm(a) > guard:
            diverged = True
            break
        if step < config.tol:
            converged = True
            break
    return _report(instance, Algo.AMP_DAMPED, a, c, R, s, delta, t, converged, energy_trace,
                   diverged=diverged, events=events)


# ---------------------------------------------------------------- direct minimization

PRECOND_REFRESH = 200


def _preconditioner(instance, params, algo, learn):
    """Variable scaling ``1 / sqrt(H_ii)`` from the curvature estimate."""
    diag = curvature_diagonal(instance, params, bethe=algo is Algo.MINIMIZE_BETHE)
    diag = np.maximum(diag, 1e-10 * max(float(np.max(diag)), 1e-300))
    scale = 1.0 / np.sqrt(diag)
    if learn:
        # curvature of the energy in log(delta) at its optimum is M / 2
        scale = np.append(scale, 1.0 / math.sqrt(0.5 * instance.m))
    return scale


def _scaled(fun, scale):
    def wrapped(z):
        f, g = fun(z * scale)
        return f, g * scale
    return wrapped


def minimize_energy(instance: Instance, config: SolverConfig) -> SolveReport:
    """Minimize the mean-field or Bethe free energy with L-BFGS.

    Variables are ``(R, log sigma2)`` and, for ``mf-learn-min``, ``log delta``.
    Starts at ``R = 0``, ``sigma2 = 1``; ``delta`` starts at ``|y|^2 / M`` when
    learned and is ``config.delta_init`` (default the true noise variance)
    otherwise.  At most ``5 * max_iter`` function evaluations are spent.
    Convergence means ``max|grad| <= 1e-8 (1 + |f|)``.

    With ``config.stages = K > 1`` and fixed ``delta``, the energy is first
    minimized at ``K - 1`` larger noise variances, geometrically spaced from
    ``|y|^2 / M`` down to the target, each stage warm-starting the next.  At
    ``delta = 1e-8`` the energy landscape seen from ``R = 0`` is dominated by
    a dense least-squares plateau; the larger variances smooth it out.
    With ``config.precondition`` each stage spends half its evaluations on
    plain L-BFGS and the rest on runs rescaled by :func:`curvature_diagonal`.
    ``energy_trace`` holds the final stage only, ``delta_trace`` the stages.
    ``iterations`` counts quasi-Newton steps over all stages; it is bounded by
    the evaluation budget, not by ``max_iter``.
    """
    algo = config.algo
    if algo not in (Algo.MINIMIZE_MF, Algo.MINIMIZE_MF_LEARN, Algo.MINIMIZE_BETHE):
        raise ParameterError(f"{algo.value} is not a minimization algorithm")
    n = instance.n
    learn = algo is Algo.MINIMIZE_MF_LEARN
    energy_fn = bethe_energy if algo is Algo.MINIMIZE_BETHE else mf_energy
    y_scale = max(float(instance.y @ instance.y) / instance.m, DELTA_FLOOR)
    if learn:
        target = y_scale
        deltas = [target]
    else:
        target = config.delta_init if config.delta_init is not None else instance.delta0
        k = config.stages
        deltas = list(np.geomspace(max(y_scale, target), target, k)) if k > 1 else [target]
        deltas[-1] = target
    R0 = _initial_a(instance, config)
    x = np.concatenate([R0, np.zeros(n)] + ([[math.log(target)]] if learn else []))

    def unpack(x, d):
        if learn:
            d = math.exp(x[2 * n])
        return VarParams(x[:n], np.exp(x[n:2 * n]), d)

    def make_fun(d):
        def fun(x):
            try:
                with np.errstate(over="ignore", under="ignore"):
                    params = unpack(x, d)
                    rep = energy_fn(instance, params)
            except (NumericError, ParameterError, OverflowError, ZeroDivisionError):
                return math.inf, np.full_like(x, np.nan)
            parts = [rep.grad_R, rep.grad_logsigma2]
            if learn:
                parts.append([rep.grad_delta * params.delta])
            return rep.value, np.concatenate(parts)
        return fun

    budget = 5 * config.max_iter
    used = iters = 0
    res = None
    events = []
    for k, d in enumerate(deltas):
        last = k == len(deltas) - 1
        share = budget - used if last else max(budget // len(deltas), 1)
        fun = make_fun(d)
        # plain L-BFGS first; it picks the basin.  With preconditioning,
        # rescaled runs (scaling refreshed every PRECOND_REFRESH evaluations)
        # then settle into the minimum, which the plain iteration approaches
        # very slowly when delta is small.
        plain = share // 2 if config.precondition else share
        res = minimize_lbfgs(fun, x, history=10, c1=1e-4, c2=0.9, gtol=1e-8,
                             max_evals=max(plain, 1), ftol=config.ftol)
        x = res.x
        spent = res.n_eval
        iters += res.n_iter
        trace = list(res.f_trace)
        while config.precondition and not res.converged and spent < share:
            scale = _preconditioner(instance, unpack(x, d), algo, learn)
            res = minimize_lbfgs(_scaled(fun, scale), x / scale, history=10, c1=1e-4, c2=0.9,
                                 gtol=1e-8, max_evals=min(share - spent, PRECOND_REFRESH),
                                 ftol=config.ftol, gweights=1.0 / scale)
            x = res.x * scale
            spent += res.n_eval
            iters += res.n_iter
            trace.extend(res.f_trace[1:])
            if "line search" in res.message:
                break
        used += spent
        if not res.converged:
            label = "learned delta" if learn else f"delta={d:.3g}"
            events.append(f"stage {k + 1}/{len(deltas)} ({label}): {res.message}")
    params = unpack(x, deltas[-1])
    post = GaussBernoulliDenoiser(instance.prior)(params.R, params.sigma2)
    delta_trace = deltas if len(deltas) > 1 else []
    return _report(instance, algo, post.mean, post.var, params.R, params.sigma2, params.delta,
                   iters, res.converged, trace, delta_trace=delta_trace, events=events)


def solve(instance: Instance, config: SolverConfig, channel: OutputChannel = None) -> SolveReport:
    """Dispatch on ``config.algo``."""
    algo = config.algo
    if algo is Algo.MF_SEQ:
        return solve_mf_sequential(instance, config)
    if algo is Algo.MF_LEARN:
        return solve_mf_learn(instance, config)
    if algo is Algo.IST:
        return solve_ist(instance, config)
    if algo is Algo.AMP:
        return solve_amp(instance, config)
    if algo is Algo.AMP_DAMPED:
        return solve_amp_damped(instance, config)
    if algo is Algo.GAMP:
        if channel is None:
            channel = OutputChannel.awgn(config.delta_init or instance.delta0)
        return solve_gamp(instance, channel, config)
    return minimize_energy(instance, config)
