"""Problem definition for compressed sensing with a Gauss-Bernoulli prior.

Holds the prior, the problem instance ``y = F x + noise``, the output
channel and the seeded instance generator shared by every solver.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np


class ParameterError(ValueError):
    """Invalid argument: bad dimension, negative variance, etc."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""

    def __init__(self, message, where=None):
        super().__init__(message if where is None else f"{message} (at {where})")
        self.where = where


class Scaling(str, enum.Enum):
    UNIT_VARIANCE = "unit-variance"
    ONE_OVER_N = "one-over-n"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"unitvariance": "unit-variance", "oneovern": "one-over-n"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown matrix scaling {value!r}") from None


@dataclass(frozen=True)
class PriorParams:
    """Gauss-Bernoulli prior ``rho * N(mean, var) + (1 - rho) * delta(x)``.

    Only a zero-mean Gaussian component is supported.
    """

    rho: float
    gaussian_mean: float = 0.0
    gaussian_var: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [0, 1], got {self.rho}")
        if not self.gaussian_var > 0.0:
            raise ParameterError("gaussian_var must be positive")
        if self.gaussian_mean != 0.0:
            raise ParameterError("only a zero-mean Gaussian component is supported")


@dataclass(frozen=True, eq=False)
class Instance:
    """A compressed sensing problem. Arrays are made read-only on construction."""

    F: np.ndarray
    y: np.ndarray
    delta0: float
    prior: PriorParams
    x_true: Optional[np.ndarray] = None
    scaling: Scaling = Scaling.ONE_OVER_N
    seed: Optional[int] = None

    def __post_init__(self):
        F = np.array(self.F, dtype=float, copy=True)
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if F.ndim != 2:
            raise ParameterError("F must be a 2-D matrix")
        if F.shape[0] != y.shape[0]:
            raise ParameterError(f"F has {F.shape[0]} rows but y has length {y.shape[0]}")
        if not self.delta0 > 0.0:
            raise ParameterError("delta0 must be positive")
        F.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "scaling", Scaling.parse(self.scaling))
        if self.x_true is not None:
            x = np.array(self.x_true, dtype=float, copy=True).reshape(-1)
            if x.shape[0] != F.shape[1]:
                raise ParameterError(f"F has {F.shape[1]} columns but x_true has length {x.shape[0]}")
            x.flags.writeable = False
            object.__setattr__(self, "x_true", x)

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def n(self) -> int:
        return self.F.shape[1]

    @property
    def alpha(self) -> float:
        return self.m / self.n

    @cached_property
    def F2(self) -> np.ndarray:
        """Element-wise square of ``F``."""
        F2 = self.F * self.F
        F2.flags.writeable = False
        return F2

    @cached_property
    def colnorm2(self) -> np.ndarray:
        """Squared column norms ``sum_mu F_{mu i}^2``."""
        out = self.F2.sum(axis=0)
        out.flags.writeable = False
        return out

    def with_matrix(self, F, y=None, x_true=None) -> "Instance":
        """Copy of the instance with a different matrix (and optionally data)."""
        return Instance(F=F, y=self.y if y is None else y, delta0=self.delta0,
                        prior=self.prior, x_true=x_true, scaling=self.scaling,
                        seed=self.seed)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "rho": self.prior.rho,
            "delta0": self.delta0,
            "scaling": self.scaling.value,
            "seed": self.seed,
            "F": self.F.tolist(),
            "y": self.y.tolist(),
            "x_true": None if self.x_true is None else self.x_true.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        F = np.asarray(d["F"], dtype=float).reshape(int(d["m"]), int(d["n"]))
        return cls(F=F, y=d["y"], delta0=float(d["delta0"]),
                   prior=PriorParams(rho=float(d["rho"])),
                   x_true=d.get("x_true"), scaling=d.get("scaling", "one-over-n"),
                   seed=d.get("seed"))

    def to_json(self) -> str:
        return dumps_exact(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class OutputChannel:
    """Element-wise output channel ``P_out(y | z)``.

    ``kind`` is ``"awgn"`` (closed form, variance ``delta``) or ``"custom"``
    (``log_pout(y, z)`` evaluated by Gauss-Hermite quadrature).
    """

    kind: str = "awgn"
    delta: Optional[float] = None
    log_pout: Optional[Callable] = field(default=None, compare=False)
    quadrature_order: int = 61

    def __post_init__(self):
        if self.kind == "awgn":
            if self.delta is None or not self.delta > 0.0:
                raise ParameterError("AWGN channel needs delta > 0")
        elif self.kind == "custom":
            if self.log_pout is None:
                raise ParameterError("custom channel needs log_pout")
            if self.quadrature_order < 16:
                raise ParameterError("quadrature_order must be at least 16")
        else:
            raise ParameterError(f"unknown channel kind {self.kind!r}")

    @classmethod
    def awgn(cls, delta: float) -> "OutputChannel":
        return cls(kind="awgn", delta=float(delta))

    @classmethod
    def custom(cls, log_pout: Callable, quadrature_order: int = 61) -> "OutputChannel":
        return cls(kind="custom", log_pout=log_pout, quadrature_order=quadrature_order)


def channel_log_likelihood(channel: OutputChannel, y, z):
    """``log P_out(y | z)``; broadcasts over array arguments."""
    if channel.kind == "awgn":
        d = channel.delta
        return -(np.subtract(y, z) ** 2) / (2 * d) - 0.5 * math.log(2 * math.pi * d)
    return channel.log_pout(y, z)


def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append(format(x, ".17g") if math.isfinite(x) else json.dumps(x))
    elif isinstance(obj, dict):
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(", ")
            out.append(json.dumps(str(key)) + ": ")
            _encode(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for k, val in enumerate(obj):
            if k:
                out.append(", ")
            _encode(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_exact(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    out = []
    _encode(obj, out)
    return "".join(out)


def generate_instance(n: int, m: int, prior: PriorParams, delta0: float,
                      scaling=Scaling.ONE_OVER_N, seed: int = 0) -> Instance:
    """Draw ``F``, a Gauss-Bernoulli ``x`` and noisy measurements ``y``.

    ``F`` has iid ``N(0, 1)`` entries (unit-variance scaling) or
    ``N(0, 1/n)`` entries. Everything is drawn from a PCG64 generator seeded
    with ``seed``, so the result is bit-reproducible.
    """
    if n < 1 or m < 1:
        raise ParameterError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if not delta0 > 0:
        raise ParameterError("delta0 must be positive")
    scaling = Scaling.parse(scaling)
    rng = np.random.Generator(np.random.PCG64(seed))
    support = rng.random(n) < prior.rho
    values = rng.standard_normal(n) * math.sqrt(prior.gaussian_var)
    x = np.where(support, values, 0.0)
    F = rng.standard_normal((m, n))
    if scaling is Scaling.ONE_OVER_N:
        F /= math.sqrt(n)
    noise = rng.standard_normal(m) * math.sqrt(delta0)
    y = F @ x + noise
    return Instance(F=F, y=y, delta0=float(delta0), prior=prior, x_true=x,
                    scaling=scaling, seed=seed)


def mse(a, x_true) -> float:
    a = np.asarray(a, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if a.shape != x_true.shape:
        raise ParameterError(f"length mismatch: {a.shape} vs {x_true.shape}")
    return float(np.mean((a - x_true) ** 2))
