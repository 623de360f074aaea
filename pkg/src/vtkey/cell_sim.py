"""Behavioral Monte Carlo model of a threshold-biased SRAM cell population.

A cell powers up as ``1`` when ``M + N >= 0``, where ``M`` is the persistent
mismatch between its two PMOS thresholds (one offset by ``delta_vt``) and
``N`` is per-evaluation noise.  This is the same latent form that the
heterogeneous error-rate model in :mod:`vtkey.error_model` assumes, so data
produced here can be fitted by it directly.

All voltages are in millivolts.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Nominal device thresholds in the 45nm technology used for the original
# characterisation. Only differences enter the model; kept for reference.
NOMINAL_VT_PMOS_MV = -418.0
NOMINAL_VT_NMOS_MV = 469.0

DEFAULT_SIGMA_VAR_MV = 30.0
DEFAULT_SIGMA_NOISE_MV = 40.0
DEFAULT_NMOS_SENSITIVITY = 0.6


@dataclass(frozen=True)
class CellPhysicalParams:
    """Physical knobs of the latent cell model.

    Attributes
    ----------
    delta_vt:
        Intended threshold offset applied to one PMOS device (mV).
    sigma_var:
        Per-transistor process-variation standard deviation (mV).
    sigma_noise:
        Equivalent transient-noise standard deviation per evaluation (mV).
    nmos_sensitivity:
        Relative influence of the same offset placed on an NMOS device.
    """

    delta_vt: float
    sigma_var: float = DEFAULT_SIGMA_VAR_MV
    sigma_noise: float = DEFAULT_SIGMA_NOISE_MV
    nmos_sensitivity: float = DEFAULT_NMOS_SENSITIVITY

    def __post_init__(self) -> None:
        if not math.isfinite(self.delta_vt):
            raise ValueError("delta_vt must be finite")
        if self.sigma_var < 0 or self.sigma_noise < 0:
            raise ValueError("sigmas must be non-negative")
        if not 0.0 <= self.nmos_sensitivity <= 1.0:
            raise ValueError("nmos_sensitivity must lie in [0, 1]")

    @property
    def process_sigma(self) -> float:
        """Standard deviation of the mismatch of two independently varying devices."""
        return math.sqrt(2.0) * self.sigma_var


@dataclass(frozen=True)
class CellInstance:
    process_value: float
    intended_bit: int = 1

    def __post_init__(self) -> None:
        if not math.isfinite(self.process_value):
            raise ValueError("process_value must be finite")
        if self.intended_bit not in (0, 1):
            raise ValueError("intended_bit must be 0 or 1")


@dataclass(frozen=True, eq=False)
class EmpiricalErrorData:
    """Per-cell empirical error probabilities of one simulated population."""

    error_probs: np.ndarray
    cells: int
    trials_per_cell: int

    def __post_init__(self) -> None:
        probs = np.asarray(self.error_probs, dtype=float)
        if probs.ndim != 1 or len(probs) != self.cells:
            raise ValueError("error_probs must hold one value per cell")
        if np.any((probs < 0) | (probs > 1)):
            raise ValueError("error probabilities must lie in [0, 1]")
        object.__setattr__(self, "error_probs", probs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmpiricalErrorData):
            return NotImplemented
        return (
            self.cells == other.cells
            and self.trials_per_cell == other.trials_per_cell
            and np.array_equal(self.error_probs, other.error_probs)
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("cell_index,error_prob\n")
        for i, p in enumerate(self.error_probs.tolist()):
            buf.write(f"{i},{p!r}\n")
        return buf.getvalue()


def sample_cell(
    params: CellPhysicalParams, rng: np.random.Generator, intended_bit: int = 1
) -> CellInstance:
    """Draw one manufactured cell.

    The mismatch is ``Normal(delta_vt, 2 * sigma_var**2)``; ``delta_vt`` is signed,
    so a cell storing ``0`` is modelled by a negative offset.
    """
    value = rng.normal(params.delta_vt, params.process_sigma) if params.sigma_var > 0 else params.delta_vt
    return CellInstance(float(value), intended_bit)


def evaluate_cell(cell: CellInstance, params: CellPhysicalParams, rng: np.random.Generator) -> int:
    noise = rng.normal(0.0, params.sigma_noise) if params.sigma_noise > 0 else 0.0
    return 1 if cell.process_value + noise >= 0.0 else 0


def simulate_population(
    params: CellPhysicalParams,
    cells: int,
    trials: int,
    rng: np.random.Generator,
    intended_bit: int = 1,
) -> EmpiricalErrorData:
    """Simulate ``cells`` instances evaluated ``trials`` times each.

    The error probability of a cell is the fraction of its evaluations that
    produced the complement of ``intended_bit``.
    """
    if cells < 1 or trials < 1:
        raise ValueError("cells and trials must be >= 1")
    if params.sigma_var > 0:
        m = rng.normal(params.delta_vt, params.process_sigma, size=cells)
    else:
        m = np.full(cells, float(params.delta_vt))
    counts = np.empty(cells, dtype=np.int64)
    # chunked so that large trial counts stay within a bounded memory footprint
    chunk = max(1, 2_000_000 // trials)
    for lo in range(0, cells, chunk):
        hi = min(cells, lo + chunk)
        if params.sigma_noise > 0:
            noise = rng.normal(0.0, params.sigma_noise, size=(hi - lo, trials))
        else:
            noise = np.zeros((hi - lo, trials))
        ones = (m[lo:hi, None] + noise) >= 0.0
        wrong = ~ones if intended_bit == 1 else ones
        counts[lo:hi] = wrong.sum(axis=1)
    return EmpiricalErrorData(counts / trials, cells, trials)


def one_probability_curve(
    params: CellPhysicalParams,
    offsets: Iterable[float],
    device: str = "PMOS",
    cells: int = 1000,
    rng: np.random.Generator | None = None,
) -> list[tuple[float, float]]:
    """Fraction of cells biased toward ``1`` (long-run 1-rate above one half) per offset.

    An offset on an NMOS device acts through ``nmos_sensitivity * offset``.
    """
    device = device.upper()
    if device not in ("PMOS", "NMOS"):
        raise ValueError(f"unknown device {device!r}")
    rng = rng if rng is not None else np.random.default_rng()
    scale = 1.0 if device == "PMOS" else params.nmos_sensitivity
    curve = []
    for offset in offsets:
        offset = float(offset)
        if not math.isfinite(offset):
            raise ValueError("offsets must be finite")
        z = rng.standard_normal(cells)
        m = scale * offset + params.process_sigma * z
        # long-run 1-rate is Phi(m / sigma_noise), which exceeds 0.5 exactly when m > 0
        curve.append((offset, float(np.mean(m > 0.0))))
    return curve


def population_mean_error(data: EmpiricalErrorData) -> float:
    return float(np.mean(data.error_probs))


def asymptotic_error_probability(process_value: float, sigma_noise: float) -> float:
    """Long-run error rate ``Phi(-process_value / sigma_noise)`` of a cell storing ``1``."""
    from .error_model import phi

    if sigma_noise == 0:
        return 0.0 if process_value >= 0 else 1.0
    return float(phi(-process_value / sigma_noise))


__all__: Sequence[str] = (
    "CellPhysicalParams",
    "CellInstance",
    "EmpiricalErrorData",
    "sample_cell",
    "evaluate_cell",
    "simulate_population",
    "one_probability_curve",
    "asymptotic_error_probability",
)
