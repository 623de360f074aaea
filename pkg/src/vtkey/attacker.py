"""Closed-form analysis of an invasive threshold readout attack.

The attacker measures both PMOS thresholds of every key cell and guesses the
stored bit from the sign of their difference.  With process variation
``sigma_var`` per device and measurement error ``sigma_err`` per reading,
averaged over ``C`` chips, that difference is
``Normal(delta_vt, (2 sigma_var^2 + 2 sigma_err^2) / C)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .bch import BchCodeSpec
from .error_model import phi


class DegenerateDistribution(RuntimeWarning):
    """The misread distribution has zero variance; a limiting value was returned."""


@dataclass(frozen=True)
class AttackerParams:
    """Attacker capability.

    ``repeat_measurements`` re-measures each transistor of each chip and only
    averages out measurement error.  It defaults to 1 (off).
    """

    sigma_err: float
    chips: int = 1
    repeat_measurements: int = 1

    def __post_init__(self) -> None:
        if self.sigma_err < 0:
            raise ValueError("sigma_err must be non-negative")
        if self.chips < 1 or self.repeat_measurements < 1:
            raise ValueError("chips and repeat_measurements must be >= 1")


@dataclass(frozen=True)
class DesignPoint:
    delta_vt: float
    code: BchCodeSpec
    key_bits: int = 128
    sigma_var: float = 30.0

    def __post_init__(self) -> None:
        if self.delta_vt <= 0:
            raise ValueError("delta_vt must be positive")
        if self.key_bits < 1:
            raise ValueError("key_bits must be >= 1")

    @property
    def blocks(self) -> int:
        return self.code.blocks_for(self.key_bits)

    @property
    def cells(self) -> int:
        return self.code.n * self.blocks


def misread_variance(sigma_var: float, attacker: AttackerParams) -> float:
    per_chip = 2.0 * sigma_var**2 + 2.0 * attacker.sigma_err**2 / attacker.repeat_measurements
    return per_chip / attacker.chips


def misread_probability(delta_vt: float, sigma_var: float, attacker: AttackerParams) -> float:
    """Probability that one cell is read as the complement of its stored bit."""
    var = misread_variance(sigma_var, attacker)
    if var == 0.0:
        warnings.warn("zero-variance readout; returning the limiting misread probability", DegenerateDistribution)
        if delta_vt > 0:
            return 0.0
        return 0.5 if delta_vt == 0 else 1.0
    return float(phi(-delta_vt / math.sqrt(var)))


def block_read_success(code: BchCodeSpec, p_re: float) -> float:
    """``sum_{i<=t} C(n,i) p^i (1-p)^(n-i)``, summed in log space."""
    if not 0.0 <= p_re <= 1.0:
        raise ValueError("p_re must lie in [0, 1]")
    n, t = code.n, code.t
    if t >= n or p_re == 0.0:
        return 1.0
    if p_re == 1.0:
        return 0.0
    i = np.arange(t + 1)
    log_terms = (
        gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1) + i * math.log(p_re) + (n - i) * math.log1p(-p_re)
    )
    return float(min(1.0, math.exp(logsumexp(log_terms))))


def key_read_success(design: DesignPoint, attacker: AttackerParams) -> float:
    p_re = misread_probability(design.delta_vt, design.sigma_var, attacker)
    block = block_read_success(design.code, p_re)
    if block == 0.0:
        return 0.0
    return math.exp(design.blocks * math.log(block))


def success_vs_chips(design: DesignPoint, sigma_err: float, c_max: int) -> list[tuple[int, float]]:
    if c_max < 1:
        raise ValueError("c_max must be >= 1")
    return [(c, key_read_success(design, AttackerParams(sigma_err, c))) for c in range(1, c_max + 1)]


def measurement_cost(design: DesignPoint, attacker: AttackerParams) -> int:
    """Transistor threshold measurements for one key extraction: two per cell per chip."""
    return attacker.chips * attacker.repeat_measurements * 2 * design.cells


SUCCESS_CURVE_HEADER = "C,p_rskey"
