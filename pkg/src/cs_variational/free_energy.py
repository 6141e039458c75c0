"""Mean-field and Bethe free energies, their gradients and the GAMP functionals.

All energies are functions of the Gaussian-field parameters ``(R, sigma2)``
of a factorized trial distribution.  Gradients are returned in
``(R, log sigma2)`` coordinates so an unconstrained minimizer can work on
them directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from .core import Instance, NumericError, OutputChannel, ParameterError, PriorParams
from .denoiser import SIGMA2_FLOOR, posterior_jacobian, scalar_posterior

DELTA_FLOOR = 1e-12
V_FLOOR = 1e-300
LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class VarParams:
    """Gaussian-field means ``R``, variances ``sigma2`` and noise variance ``delta``."""

    R: np.ndarray
    sigma2: np.ndarray
    delta: float

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float).reshape(-1)
        s = np.asarray(self.sigma2, dtype=float).reshape(-1)
        if R.shape != s.shape:
            raise ParameterError("R and sigma2 must have the same length")
        if np.any(~(s > 0)):
            raise ParameterError("sigma2 must be positive")
        if not self.delta > 0:
            raise ParameterError("delta must be positive")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "sigma2", s)
        object.__setattr__(self, "delta", float(self.delta))


@dataclass(frozen=True)
class Moments:
    a: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if a.shape != c.shape:
            raise ParameterError("a and c must have the same length")
        if np.any(c < 0):
            raise ParameterError("variances c must be non-negative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)


def moments_of(prior: PriorParams, params: VarParams) -> Moments:
    post = scalar_posterior(prior, params.R, params.sigma2)
    return Moments(post.mean, post.var)


@dataclass
class EnergyReport:
    value: float
    grad_R: np.ndarray
    grad_logsigma2: np.ndarray
    grad_delta: Optional[float] = None


class GampState(NamedTuple):
    V: np.ndarray
    omega: np.ndarray
    gout: np.ndarray
    dgout: np.ndarray


def _check_dims(instance: Instance, params: VarParams):
    if params.R.shape[0] != instance.n:
        raise ParameterError(f"params have length {params.R.shape[0]}, instance has n={instance.n}")


def kl_to_prior(prior: PriorParams, params: VarParams) -> float:
    """``-sum_i [log Z(R_i, s_i) + (c_i + (a_i - R_i)^2) / (2 s_i)]``.

    This is the exact divergence of the tilted factors from the prior; it is
    computed in a cancellation-free form.
    """
    return float(np.sum(posterior_jacobian(prior, params.R, params.sigma2).kl))


def kl_to_prior_direct(prior: PriorParams, params: VarParams) -> float:
    """Literal ``-sum [log Z + (c + (a - R)^2) / (2 s)]``; loses precision when ``R^2 / s`` is large."""
    post = scalar_posterior(prior, params.R, params.sigma2)
    s = np.maximum(params.sigma2, SIGMA2_FLOOR)
    return float(-np.sum(post.log_z + (post.var + (post.mean - params.R) ** 2) / (2 * s)))


def _chain_rule(jac, R, s, dE_da, dE_dc):
    """Gradient in (R, log s) of KL(a, c) + E(a, c) at the constrained point.

    The explicit (R, s) partials of the KL expression vanish when a, c are the
    denoiser moments, so only the paths through a and c remain.
    """
    ga = -(jac.mean - R) / s + dE_da
    gc = -0.5 / s + dE_dc
    grad_R = ga * jac.dmean_dR + gc * jac.dvar_dR
    grad_s = ga * jac.dmean_ds + gc * jac.dvar_ds
    return grad_R, s * grad_s


def _finish(value, grad_R, grad_logs, grad_delta, what):
    if not (np.isfinite(value) and np.all(np.isfinite(grad_R)) and np.all(np.isfinite(grad_logs))):
        raise NumericError(f"non-finite {what}")
    return EnergyReport(float(value), grad_R, grad_logs, grad_delta)


def mf_energy(instance: Instance, params: VarParams, grad: bool = True) -> EnergyReport:
    """Mean-field free energy and its gradient.

    ``grad_delta`` is the derivative with respect to ``delta`` itself; its zero
    is the noise-learning update :func:`learn_delta`.
    """
    _check_dims(instance, params)
    prior = instance.prior
    R = params.R
    s = np.maximum(params.sigma2, SIGMA2_FLOOR)
    d = params.delta
    M = instance.m
    jac = posterior_jacobian(prior, R, s)
    a, c = jac.mean, jac.var
    r = instance.y - instance.F @ a
    rr = float(r @ r)
    Vsum = float(instance.colnorm2 @ c)
    value = 0.5 * M * (LOG_2PI + math.log(d)) + float(np.sum(jac.kl)) + (rr + Vsum) / (2 * d)
    grad_delta = M / (2 * d) - (rr + Vsum) / (2 * d * d)
    if not grad:
        return EnergyReport(float(value), None, None, grad_delta)
    dE_da = -(instance.F.T @ r) / d
    dE_dc = instance.colnorm2 / (2 * d)
    grad_R, grad_logs = _chain_rule(jac, R, s, dE_da, dE_dc)
    return _finish(value, grad_R, grad_logs, grad_delta, "mean-field energy")


def bethe_energy(instance: Instance, params: VarParams, grad: bool = True) -> EnergyReport:
    """Bethe free energy: the mean-field energy with the variance term inside a log."""
    _check_dims(instance, params)
    prior = instance.prior
    R = params.R
    s = np.maximum(params.sigma2, SIGMA2_FLOOR)
    d = params.delta
    M = instance.m
    jac = posterior_jacobian(prior, R, s)
    a, c = jac.mean, jac.var
    r = instance.y - instance.F @ a
    rr = float(r @ r)
    V = instance.F2 @ c
    value = (rr / (2 * d) + 0.5 * M * (LOG_2PI + math.log(d))
             + 0.5 * float(np.sum(np.log1p(V / d))) + float(np.sum(jac.kl)))
    grad_delta = M / (2 * d) - rr / (2 * d * d) - 0.5 * float(np.sum(V / (d * (d + V))))
    if not grad:
        return EnergyReport(float(value), None, None, grad_delta)
    dE_da = -(instance.F.T @ r) / d
    dE_dc = 0.5 * (instance.F2.T @ (1.0 / (d + V)))
    grad_R, grad_logs = _chain_rule(jac, R, s, dE_da, dE_dc)
    return _finish(value, grad_R, grad_logs, grad_delta, "Bethe energy")


def _kl_field_gradient(prior, R, logs):
    s = np.exp(logs)
    jac = posterior_jacobian(prior, R, s)
    return _chain_rule(jac, R, s, 0.0, 0.0)


def curvature_diagonal(instance: Instance, params: VarParams, bethe: bool = True,
                       h: float = 1e-5) -> np.ndarray:
    """Positive estimate of the Hessian diagonal in ``(R, log sigma2)``.

    The divergence term is separable, so its diagonal comes from central
    differences of its own gradient.  The data term uses the Gauss-Newton
    form through ``a`` and ``c``: ``sum_mu F^2 / delta`` for the mean and,
    for the Bethe energy, ``1/2 sum_mu F^4 / (delta + V)^2`` for the
    variance.  Intended for diagonal preconditioning only.
    """
    prior = instance.prior
    R = params.R
    s = np.maximum(params.sigma2, SIGMA2_FLOOR)
    logs = np.log(s)
    d = params.delta
    kl_R = (_kl_field_gradient(prior, R + h, logs)[0] - _kl_field_gradient(prior, R - h, logs)[0]) / (2 * h)
    kl_s = (_kl_field_gradient(prior, R, logs + h)[1] - _kl_field_gradient(prior, R, logs - h)[1]) / (2 * h)
    jac = posterior_jacobian(prior, R, s)
    h_aa = instance.colnorm2 / d
    if bethe:
        V = instance.F2 @ jac.var
        h_cc = 0.5 * ((instance.F2 ** 2).T @ (1.0 / (d + V) ** 2))
    else:
        h_cc = 0.0
    a_s, c_s = s * jac.dmean_ds, s * jac.dvar_ds
    diag_R = np.abs(kl_R) + jac.dmean_dR ** 2 * h_aa + jac.dvar_dR ** 2 * h_cc
    diag_s = np.abs(kl_s) + a_s ** 2 * h_aa + c_s ** 2 * h_cc
    out = np.concatenate([diag_R, diag_s])
    return np.where(np.isfinite(out), out, 0.0)


def learn_delta(instance: Instance, moments: Moments, delta_floor: float = DELTA_FLOOR) -> float:
    """Noise variance minimizing the mean-field energy at fixed moments."""
    r = instance.y - instance.F @ moments.a
    value = (float(r @ r) + float(instance.colnorm2 @ moments.c)) / instance.m
    return max(value, delta_floor)


# ---------------------------------------------------------------- output channel

def channel_partition(channel: OutputChannel, omega, y, V):
    """``log Z_mu``, ``g_out`` and ``d g_out / d omega`` for every measurement.

    ``Z_mu = int dz P_out(y | z) N(z; omega, V)``.  ``g_out`` is the derivative
    of ``log Z_mu`` in ``omega`` and ``dg`` the second derivative.
    """
    omega = np.asarray(omega, dtype=float)
    y = np.asarray(y, dtype=float)
    V = np.asarray(V, dtype=float)
    if np.any(~(V > 0)):
        raise ParameterError("V must be positive")
    if channel.kind == "awgn":
        tot = channel.delta + V
        diff = y - omega
        log_z = -0.5 * (LOG_2PI + np.log(tot)) - diff * diff / (2 * tot)
        g = diff / tot
        dg = -1.0 / tot
        return log_z, g, dg
    t, w = _hermgauss(channel.quadrature_order)
    logw0 = np.log(w)
    # Adaptive Gauss-Hermite: the nodes start on N(omega, V) and are moved
    # onto the running estimate of the tilted distribution of z, so a narrow
    # or distant likelihood is still resolved by many nodes.
    center, s2 = omega, V
    for _ in range(60):
        log_z, e1, var = _tilted(channel, t, logw0, omega, y, V, center, s2)
        _underflow(~np.isfinite(log_z))
        new_center = omega + e1
        new_s2 = np.maximum(var, 0.25 * s2)
        done = (np.abs(new_center - center) <= 1e-4 * np.sqrt(s2)) & (np.abs(new_s2 / s2 - 1) <= 1e-3)
        center, s2 = new_center, new_s2
        if np.all(done):
            break
    log_z, e1, var = _tilted(channel, t, logw0, omega, y, V, center, s2)
    _underflow(~np.isfinite(log_z) | (log_z < math.log(1e-300)))
    g = e1 / V
    dg = var / (V * V) - 1.0 / V
    return log_z, g, dg


def _tilted(channel, t, logw0, omega, y, V, center, s2):
    """``log Z``, mean and variance of ``z - omega`` under the tilted measure,
    using Gauss-Hermite nodes placed on ``N(center, s2)``."""
    sq = np.sqrt(2 * s2)[..., None]
    z = center[..., None] + sq * t
    dz = z - omega[..., None]
    with np.errstate(over="ignore", invalid="ignore"):
        logp = np.asarray(channel.log_pout(y[..., None], z), dtype=float)
    logw = (logw0 + t * t + np.log(sq) - 0.5 * (LOG_2PI + np.log(V))[..., None]
            - dz * dz / (2 * V[..., None]) + logp)
    log_z = logsumexp(logw, axis=-1)
    safe = np.where(np.isfinite(log_z), log_z, 0.0)
    p = np.exp(logw - safe[..., None])
    e1 = np.sum(p * dz, axis=-1)
    var = np.maximum(np.sum(p * (dz - e1[..., None]) ** 2, axis=-1), 0.0)
    return log_z, e1, var


def _underflow(bad):
    if np.any(bad):
        where = int(np.flatnonzero(np.atleast_1d(bad))[0])
        raise NumericError("output-channel quadrature underflow", where=f"measurement {where}")


_HERMGAUSS_CACHE = {}


def _hermgauss(order):
    if order not in _HERMGAUSS_CACHE:
        _HERMGAUSS_CACHE[order] = np.polynomial.hermite.hermgauss(order)
    return _HERMGAUSS_CACHE[order]


def gout(channel: OutputChannel, omega, y, V):
    """Output function ``g_out(omega, y, V)`` and its ``omega``-derivative."""
    _, g, dg = channel_partition(channel, omega, y, V)
    return g, dg


def solve_omega(channel: OutputChannel, Fa, y, V, tol=1e-13, max_iter=100):
    """Solve ``omega = Fa - V g_out(omega, y, V)`` for every measurement.

    The residual ``h(omega) = omega - Fa + V g_out`` is non-decreasing
    (``h' = Var_z / V >= 0``), so a bracket plus safeguarded Newton converges.
    """
    Fa = np.asarray(Fa, dtype=float)
    y = np.asarray(y, dtype=float)
    V = np.asarray(V, dtype=float)
    if channel.kind == "awgn":
        d = channel.delta
        return (Fa * (d + V) - V * y) / d

    def h(om):
        _, g, dg = channel_partition(channel, om, y, V)
        return om - Fa + V * g, 1.0 + V * dg

    # grow the bracket from a narrow start: far from the data the channel
    # integral underflows, so only probe as far out as needed
    h0, _ = h(Fa)
    width = np.sqrt(V) + V * 1e-3
    lo = np.where(h0 > 0, Fa - width, Fa)
    hi = np.where(h0 < 0, Fa + width, Fa)
    hlo, _ = h(lo)
    hhi, _ = h(hi)
    for _ in range(80):
        grow = (hlo > 0) | (hhi < 0)
        if not np.any(grow):
            break
        width = np.where(grow, 2 * width, width)
        lo = np.where(hlo > 0, lo - width, lo)
        hi = np.where(hhi < 0, hi + width, hi)
        hlo, _ = h(lo)
        hhi, _ = h(hi)
    else:
        where = int(np.flatnonzero((hlo > 0) | (hhi < 0))[0])
        raise NumericError("could not bracket omega fixed point", where=f"measurement {where}")
    om = np.clip(Fa, lo, hi)
    for _ in range(max_iter):
        val, slope = h(om)
        lo = np.where(val < 0, om, lo)
        hi = np.where(val > 0, om, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = om - val / slope
        inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
        new = np.where(inside, newton, 0.5 * (lo + hi))
        step = np.abs(new - om)
        om = new
        if np.all(step <= tol * (1 + np.abs(om))):
            return om
    where = int(np.argmax(step))
    raise NumericError("omega fixed point did not converge", where=f"measurement {where}")


# ---------------------------------------------------------------- GAMP functionals

def gamp_generating_energy(instance: Instance, channel: OutputChannel, params: VarParams,
                           moments: Moments, omega) -> float:
    """Unconstrained GAMP free energy with ``a``, ``c``, ``omega`` as free variables.

    Its stationary points are the GAMP fixed points; they are saddles, not
    minima, so this function is meant for checking, not for minimizing.
    """
    _check_dims(instance, params)
    R = params.R
    s = np.maximum(params.sigma2, SIGMA2_FLOOR)
    a, c = moments.a, moments.c
    omega = np.asarray(omega, dtype=float)
    V = instance.F2 @ c
    if np.any(~(V > 0)):
        raise NumericError("V_mu must be positive", where=f"measurement {int(np.argmin(V))}")
    log_zmu, _, _ = channel_partition(channel, omega, instance.y, V)
    post = scalar_posterior(instance.prior, R, s)
    Fa = instance.F @ a
    value = (-np.sum(log_zmu) - np.sum((c + (a - R) ** 2) / (2 * s))
             - np.sum((omega - Fa) ** 2 / (2 * V)) - np.sum(post.log_z))
    return float(value)


def gamp_generating_gradient(instance: Instance, channel: OutputChannel, params: VarParams,
                             moments: Moments, omega) -> dict:
    """Partial derivatives of :func:`gamp_generating_energy`.

    Keys ``R``, ``sigma2``, ``omega``, ``a``, ``c``.  Uses
    ``d log Z_mu / dV = (dg + g^2) / 2``.
    """
    R = params.R
    s = np.maximum(params.sigma2, SIGMA2_FLOOR)
    a, c = moments.a, moments.c
    omega = np.asarray(omega, dtype=float)
    V = instance.F2 @ c
    if np.any(~(V > 0)):
        raise NumericError("V_mu must be positive", where=f"measurement {int(np.argmin(V))}")
    _, g, dg = channel_partition(channel, omega, instance.y, V)
    post = scalar_posterior(instance.prior, R, s)
    Fa = instance.F @ a
    u = (omega - Fa) / V
    return {
        "R": (a - post.mean) / s,
        "sigma2": ((c + (a - R) ** 2) - ((post.mean - R) ** 2 + post.var)) / (2 * s * s),
        "omega": -g - u,
        "a": -(a - R) / s + instance.F.T @ u,
        "c": -0.5 / s + instance.F2.T @ (-0.5 * (dg + g * g) + 0.5 * u * u),
    }


def gamp_fixed_point_state(instance: Instance, channel: OutputChannel, moments: Moments) -> GampState:
    """``V*``, ``omega*`` and the output function at the fixed point for given moments."""
    V = instance.F2 @ moments.c
    Fa = instance.F @ moments.a
    omega = solve_omega(channel, Fa, instance.y, V)
    _, g, dg = channel_partition(channel, omega, instance.y, V)
    return GampState(V, omega, g, dg)


def gamp_variational_energy(instance: Instance, channel: OutputChannel, params: VarParams,
                            grad: bool = True) -> EnergyReport:
    """Bethe free energy for a generic channel, as a function of ``(R, sigma2)`` only.

    ``a, c`` are the denoiser moments, ``V = F^2 c`` and ``omega`` solves its
    fixed-point condition.  The value is

        sum_i KL(Q_i || P0) + sum_mu KL(M_mu || P_out)
            + 1/2 sum_mu (log 2 pi V_mu + 1 + V_mu dg_mu),

    with the channel divergence obtained from ``log Z_mu`` and ``g_out``.
    """
    _check_dims(instance, params)
    prior = instance.prior
    R = params.R
    s = np.maximum(params.sigma2, SIGMA2_FLOOR)
    jac = posterior_jacobian(prior, R, s)
    moments = Moments(jac.mean, jac.var)
    # c = 0 everywhere gives V = 0; a tiny floor keeps the log terms finite
    V = np.maximum(instance.F2 @ moments.c, V_FLOOR)
    Fa = instance.F @ moments.a
    omega = solve_omega(channel, Fa, instance.y, V)
    log_zmu, g, dg = channel_partition(channel, omega, instance.y, V)
    half = 0.5 * (LOG_2PI + np.log(V) + 1 + V * dg)
    channel_kl = -log_zmu - half - 0.5 * V * g * g
    value = float(np.sum(jac.kl)) + float(np.sum(channel_kl)) + float(np.sum(half))
    if not grad:
        return EnergyReport(value, None, None, None)
    dE_da = -(instance.F.T @ g)
    dE_dc = -0.5 * (instance.F2.T @ dg)
    grad_R, grad_logs = _chain_rule(jac, R, s, dE_da, dE_dc)
    return _finish(value, grad_R, grad_logs, None, "GAMP variational energy")

