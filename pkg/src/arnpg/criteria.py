"""Scalarization criteria over value vectors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import ParameterError, TabularMDP

SUM_LOG = "sum-log"
WEIGHTED_LINEAR = "weighted-linear"


@dataclass(frozen=True)
class SmoothScalarizer:
    """F(v) = sum_i a_i log(delta + v_i)  (sum-log)  or  sum_i a_i v_i  (weighted-linear)."""

    kind: str = SUM_LOG
    weights: tuple = (1.0, 1.0)
    delta: float = 0.1

    def __post_init__(self):
        if self.kind not in (SUM_LOG, WEIGHTED_LINEAR):
            raise ParameterError(f"unknown scalarizer kind '{self.kind}'")
        w = tuple(float(x) for x in self.weights)
        if not w or min(w) <= 0:
            raise ParameterError("scalarizer weights must be positive")
        if self.kind == SUM_LOG and not self.delta > 0:
            raise ParameterError("delta must be positive")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def beta(self) -> float:
        """Smoothness constant w.r.t. ||.||_inf (gradient measured in ||.||_1)."""
        if self.kind == WEIGHTED_LINEAR:
            return 0.0
        return sum(self.weights) / self.delta ** 2

    @property
    def lipschitz(self) -> float:
        """Bound L on ||grad F||_1 over the nonnegative orthant."""
        if self.kind == WEIGHTED_LINEAR:
            return sum(self.weights)
        return sum(self.weights) / self.delta

    def value(self, v) -> float:
        return scalarize(self, v)[0]

    def gradient(self, v) -> np.ndarray:
        return scalarize(self, v)[1]


def scalarize(F: SmoothScalarizer, v) -> tuple[float, np.ndarray]:
    v = np.asarray(v, dtype=np.float64)
    a = np.asarray(F.weights)
    if v.shape != a.shape:
        raise ParameterError(f"value vector has {v.size} entries, scalarizer expects {a.size}")
    if F.kind == WEIGHTED_LINEAR:
        return float(a @ v), a.copy()
    if np.any(F.delta + v <= 0):
        raise ParameterError("sum-log scalarizer requires v_i > -delta")
    return float(a @ np.log(F.delta + v)), a / (F.delta + v)


@dataclass(frozen=True)
class MaxMinBifunction:
    """Phi(v, lam) = sum_i v_i lam_i / c_i with lam on the probability simplex."""

    c: tuple = field(default=(1.0, 1.0))

    def __post_init__(self):
        c = tuple(float(x) for x in self.c)
        if not c or min(c) <= 0:
            raise ParameterError("max-min scales c_i must be positive")
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return len(self.c)

    @property
    def beta(self) -> float:
        # (grad_v, -grad_lam) = (lam/c, -v/c); dual-norm change <= Psi-norm change / min c
        return 1.0 / min(self.c)

    @property
    def lipschitz(self) -> float:
        return 1.0 / min(self.c)

    def value(self, v) -> float:
        """F(v) = min over simplex vertices of Phi = min_i v_i / c_i."""
        return float(np.min(np.asarray(v, dtype=np.float64) / np.asarray(self.c)))


def maxmin_phi(M: MaxMinBifunction, v, lam) -> tuple[float, np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    c = np.asarray(M.c)
    if v.shape != c.shape or lam.shape != c.shape:
        raise ParameterError("v, lambda and c must have equal length")
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
        raise ParameterError("lambda must lie on the probability simplex")
    return float(np.sum(v * lam / c)), lam / c, v / c


def maxmin_value(M: MaxMinBifunction, v) -> float:
    return M.value(v)


def direction_reward(gradient, mdp: TabularMDP) -> np.ndarray:
    """r~(s, a) = <g, r_{1:m}(s, a)>."""
    g = np.asarray(gradient, dtype=np.float64)
    if g.shape != (mdp.num_objectives,):
        raise ParameterError(f"gradient has {g.size} entries, MDP has {mdp.num_objectives} rewards")
    return np.einsum("i,isa->sa", g, mdp.rewards)
