"""Closed-form scalar denoiser for the Gauss-Bernoulli prior.

For a Gaussian field with mean ``R`` and variance ``sigma2`` the tilted
distribution ``Q(x) ~ P0(x) exp(-(x - R)^2 / (2 sigma2))`` is a mixture of
the spike at zero and a Gaussian ``N(m, v)`` with

    m = R g / (g + sigma2),    v = sigma2 g / (g + sigma2),

where ``g`` is the variance of the prior's Gaussian component.  The mixture
weight of the Gaussian is ``expit(L)`` with log-odds

    L = log(rho / (1 - rho)) + log(v / g) / 2 + R^2 g / (2 sigma2 (g + sigma2)).

Everything is evaluated by one compiled kernel; the public functions
broadcast over array-valued ``R`` and ``sigma2``.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numba
import numpy as np

from .core import ParameterError, PriorParams

SIGMA2_FLOOR = 1e-14


class ScalarPosterior(NamedTuple):
    log_z: np.ndarray
    mean: np.ndarray
    var: np.ndarray


class PosteriorJacobian(NamedTuple):
    """Moments plus their derivatives with respect to ``R`` and ``sigma2``."""

    log_z: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    dmean_dR: np.ndarray
    dmean_ds: np.ndarray
    dvar_dR: np.ndarray
    dvar_ds: np.ndarray
    kl: np.ndarray


@numba.njit(cache=True)
def gb_scalar(rho, g, R, s):
    """log Z, mean, var, their (R, s) derivatives and KL(Q || P0) at one point."""
    if s < SIGMA2_FLOOR:
        s = SIGMA2_FLOOR
    gs = g + s
    m = R * g / gs
    v = s * g / gs
    log_ratio = math.log(s / gs)
    spike = -R * R / (2.0 * s)
    if rho <= 0.0:
        return spike, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    if rho >= 1.0:
        kl = 0.5 * (m * m / g - g / gs - log_ratio)
        slab = 0.5 * log_ratio - R * R / (2.0 * gs)
        return slab, m, v, g / gs, -R * g / (gs * gs), 0.0, g * g / (gs * gs), kl
    log_rho = math.log(rho)
    log_1mrho = math.log1p(-rho)
    logit = (log_rho - log_1mrho) + 0.5 * log_ratio + R * R * g / (2.0 * s * gs)
    # log(1 - pi) = -softplus(logit), log(pi) = logit + log(1 - pi)
    e = math.exp(-abs(logit))
    log_q = -(max(logit, 0.0) + math.log1p(e))
    log_pi = logit + log_q
    pi = math.exp(log_pi)
    q = math.exp(log_q)
    pq = pi * q
    # log-sum-exp of the two component evidences, led by the larger one
    if logit > 0.0:
        log_z = log_rho + 0.5 * log_ratio - R * R / (2.0 * gs) + math.log1p(e)
    else:
        log_z = spike + log_1mrho + math.log1p(e)

    mean = pi * m
    var = pi * v + pq * m * m

    dL_dR = R * g / (s * gs)
    dL_ds = g / (2.0 * s * gs) - R * R * g * (g + 2.0 * s) / (2.0 * s * s * gs * gs)
    dm_dR = g / gs
    dm_ds = -R * g / (gs * gs)
    dv_ds = g * g / (gs * gs)
    # d(pi) = pq dL ; d(pq) = pq (q - pi) dL
    spread = v + (q - pi) * m * m
    dmean_dR = pq * dL_dR * m + pi * dm_dR
    dmean_ds = pq * dL_ds * m + pi * dm_ds
    dvar_dR = pq * dL_dR * spread + 2.0 * pq * m * dm_dR
    dvar_ds = pq * dL_ds * spread + pi * dv_ds + 2.0 * pq * m * dm_ds

    # KL of the mixture (1-pi) delta + pi N(m, v) from the prior; every term >= 0
    gauss_kl = 0.5 * (m * m / g - g / gs - log_ratio)
    kl = 0.0
    if pi > 0.0:
        kl += pi * (log_pi - log_rho + gauss_kl)
    if q > 0.0:
        kl += q * (log_q - log_1mrho)
    return log_z, mean, var, dmean_dR, dmean_ds, dvar_dR, dvar_ds, kl


@numba.njit(cache=True)
def _gb_array(rho, g, R, s, out):
    for i in range(R.shape[0]):
        res = gb_scalar(rho, g, R[i], s[i])
        for k in range(8):
            out[k, i] = res[k]


def _evaluate(prior: PriorParams, R, sigma2):
    R, s = np.broadcast_arrays(np.asarray(R, dtype=float), np.asarray(sigma2, dtype=float))
    if np.any(~(s > 0)):
        raise ParameterError("sigma2 must be positive")
    shape = R.shape
    Rf = np.ascontiguousarray(R).reshape(-1)
    sf = np.ascontiguousarray(s).reshape(-1)
    out = np.empty((8, Rf.shape[0]))
    _gb_array(float(prior.rho), float(prior.gaussian_var), Rf, sf, out)
    if shape == ():
        return [float(row[0]) for row in out]
    return [row.reshape(shape) for row in out]


def scalar_posterior(prior: PriorParams, R, sigma2) -> ScalarPosterior:
    """``log Z(R, sigma2)``, posterior mean ``f_a`` and variance ``f_c``.

    ``Z`` is ``int dx P0(x) exp(-(x - R)^2 / (2 sigma2))`` (no Gaussian
    normalization).  ``sigma2`` below ``SIGMA2_FLOOR`` is clamped.
    """
    vals = _evaluate(prior, R, sigma2)
    return ScalarPosterior(vals[0], vals[1], vals[2])


def posterior_jacobian(prior: PriorParams, R, sigma2) -> PosteriorJacobian:
    return PosteriorJacobian(*_evaluate(prior, R, sigma2))


def dlogz_dR(prior: PriorParams, R, sigma2):
    post = scalar_posterior(prior, R, sigma2)
    return (post.mean - R) / np.maximum(sigma2, SIGMA2_FLOOR)


def dlogz_dsigma2(prior: PriorParams, R, sigma2):
    post = scalar_posterior(prior, R, sigma2)
    s = np.maximum(sigma2, SIGMA2_FLOOR)
    return ((post.mean - R) ** 2 + post.var) / (2 * s * s)


def threshold_eta(prior: PriorParams, x, delta):
    """Thresholding function ``eta_delta(x)``: the posterior mean at ``sigma2 = delta``."""
    return scalar_posterior(prior, x, delta).mean


class GaussBernoulliDenoiser:
    """Denoiser interface used by the solvers.

    Another prior can be plugged in by providing ``__call__``, ``jacobian``
    and ``eta`` with the same signatures.
    """

    def __init__(self, prior: PriorParams):
        self.prior = prior

    def __call__(self, R, sigma2) -> ScalarPosterior:
        return scalar_posterior(self.prior, R, sigma2)

    def jacobian(self, R, sigma2) -> PosteriorJacobian:
        return posterior_jacobian(self.prior, R, sigma2)

    def eta(self, x, delta):
        return threshold_eta(self.prior, x, delta)
