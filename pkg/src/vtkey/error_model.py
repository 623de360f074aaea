"""Heterogeneous cell error-probability model.

The distribution of per-cell error probabilities ``Pe`` is described by two
parameters::

    P(Pe <= x) = Phi(lambda1 * Phi^-1(x) + lambda2)

where ``Phi`` is the standard normal CDF.  In probit coordinates the model is a
straight line, which is where fitting happens.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .cell_sim import EmpiricalErrorData


class DegenerateData(ValueError):
    """Raised when a sample carries no spread to fit a line through."""


def phi(x):
    """Standard normal CDF (``scipy.special.ndtr``; erfc based, accurate deep in the tails)."""
    return special.ndtr(x)


def phi_inv(p):
    """Inverse of :func:`phi`; ``-inf``/``inf`` at 0 and 1."""
    return special.ndtri(p)


@dataclass(frozen=True)
class MaesModel:
    lambda1: float
    lambda2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lambda1) and math.isfinite(self.lambda2)):
            raise ValueError("model parameters must be finite")
        if self.lambda1 <= 0:
            raise ValueError("lambda1 must be positive")

    @classmethod
    def from_latent(cls, delta_vt: float, sigma_var: float, sigma_noise: float) -> "MaesModel":
        """Parameters implied by mismatch ``Normal(delta_vt, 2 sigma_var^2)`` and noise ``sigma_noise``."""
        sigma_m = math.sqrt(2.0) * sigma_var
        return cls(sigma_noise / sigma_m, delta_vt / sigma_m)


@dataclass(frozen=True)
class FitReport:
    model: MaesModel
    residual: float
    points_used: int
    points_clamped: int

    def csv_row(self, delta_vt: float) -> str:
        return f"{float(delta_vt)!r},{self.model.lambda1!r},{self.model.lambda2!r},{self.residual!r}"


FIT_CSV_HEADER = "delta_vt,lambda1,lambda2,residual"


def cdf_pe(model: MaesModel, x):
    """CDF of the cell error probability at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in [0, 1]")
    with np.errstate(invalid="ignore"):
        out = phi(model.lambda1 * phi_inv(x) + model.lambda2)
    out = np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, out))
    return float(out) if out.ndim == 0 else out


def sample_pe(model: MaesModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-transform samples of cell error probabilities."""
    if count < 1:
        raise ValueError("count must be >= 1")
    u = rng.random(count)
    return pe_from_uniform(model, u)


_TINY = np.finfo(float).tiny
_BELOW_ONE = np.nextafter(1.0, 0.0)


def pe_from_uniform(model: MaesModel, u) -> np.ndarray:
    """Map uniforms on (0, 1) through the inverse of :func:`cdf_pe`.

    Results are kept inside the open interval; values that round to 0 or 1 in
    double precision are pulled to the nearest representable interior point.
    """
    return np.clip(phi((phi_inv(u) - model.lambda2) / model.lambda1), _TINY, _BELOW_ONE)


def fit(data: EmpiricalErrorData | np.ndarray, trials: int | None = None) -> FitReport:
    """Least-squares fit of the model in the probit-probit plane.

    The sorted sample gets plotting positions ``(i - 0.5) / n``.  Probabilities
    of exactly 0 or 1 are clamped to ``1/(2 trials)`` and ``1 - 1/(2 trials)``.
    Clamped cells only bound the tail, so while at least two distinct
    unclamped values exist they keep their rank but are left out of the
    regression; otherwise every clamped point is used.
    """
    if isinstance(data, EmpiricalErrorData):
        probs = data.error_probs
        trials = data.trials_per_cell if trials is None else trials
    else:
        probs = np.asarray(data, dtype=float)
    if probs.ndim != 1 or len(probs) < 2:
        raise DegenerateData("need at least two probabilities")
    if np.any((probs < 0) | (probs > 1)):
        raise ValueError("probabilities must lie in [0, 1]")

    n = len(probs)
    x = np.sort(probs)
    y = phi_inv((np.arange(1, n + 1) - 0.5) / n)
    extreme = (x <= 0.0) | (x >= 1.0)
    if extreme.any():
        if trials is None:
            raise ValueError("trials is required to clamp probabilities of 0 or 1")
        eps = 1.0 / (2.0 * trials)
        x = np.clip(x, eps, 1.0 - eps)

    if len(np.unique(x)) < 2:
        raise DegenerateData("all probabilities are identical after clamping")
    use = ~extreme
    if len(np.unique(x[use])) < 2:
        use = np.ones(n, dtype=bool)

    px = phi_inv(x[use])
    design = np.column_stack([px, np.ones_like(px)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y[use], rcond=None)
    if not slope > 0:
        raise DegenerateData(f"fitted slope {slope:.4g} is not positive")
    resid = y[use] - (slope * px + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    return FitReport(MaesModel(float(slope), float(intercept)), rms, int(use.sum()), int(extreme.sum()))
