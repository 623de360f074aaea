"""Designer-side reliability analysis.

Block failure is the upper tail of a Poisson-binomial count of cell errors;
the key fails when any of its ``ceil(k/m)`` blocks fails.  Chips differ in
their cell error probabilities, so a design is judged on the distribution of
key failure rates across simulated chips.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bch import BchCodeSpec
from .error_model import MaesModel, pe_from_uniform


class InsufficientSamples(ValueError):
    pass


class NoFeasibleCode(Exception):
    def __init__(self, message: str, evaluations: list["CodeEvaluation"] | None = None):
        super().__init__(message)
        self.evaluations = evaluations or []


@dataclass(frozen=True, eq=False)
class BlockErrorProfile:
    pe: np.ndarray

    def __post_init__(self) -> None:
        pe = np.asarray(self.pe, dtype=float)
        if pe.ndim != 1:
            raise ValueError("profile must be one-dimensional")
        if np.any((pe < 0) | (pe > 1)):
            raise ValueError("error probabilities must lie in [0, 1]")
        object.__setattr__(self, "pe", pe)

    def __len__(self) -> int:
        return len(self.pe)


@dataclass(frozen=True)
class ReliabilityCriterion:
    chip_quantile: float = 0.99
    max_key_failure: float = 1e-6

    def __post_init__(self) -> None:
        if not 0 < self.chip_quantile < 1:
            raise ValueError("chip_quantile must lie in (0, 1)")
        if not 0 < self.max_key_failure < 1:
            raise ValueError("max_key_failure must lie in (0, 1)")

    @property
    def min_chips(self) -> int:
        return math.ceil(10.0 / (1.0 - self.chip_quantile) - 1e-9)


@dataclass(frozen=True, eq=False)
class KeyFailureDistribution:
    samples: np.ndarray
    chips: int

    def __post_init__(self) -> None:
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.chips,):
            raise ValueError("need exactly one sample per chip")
        if np.any((s < 0) | (s > 1)):
            raise ValueError("key failure probabilities must lie in [0, 1]")
        object.__setattr__(self, "samples", s)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeyFailureDistribution):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    def quantile(self, q: float) -> float:
        """Nearest-rank empirical quantile."""
        rank = max(1, math.ceil(q * self.chips - 1e-9))
        return float(np.sort(self.samples)[rank - 1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("chip_index,key_failure_prob\n")
        for i, v in enumerate(self.samples.tolist()):
            buf.write(f"{i},{v!r}\n")
        return buf.getvalue()


def _pe(profile: BlockErrorProfile | Sequence[float]) -> np.ndarray:
    return profile.pe if isinstance(profile, BlockErrorProfile) else BlockErrorProfile(profile).pe


def poisson_binomial_cdf(t: int, profile: BlockErrorProfile | Sequence[float]) -> float:
    """``P(X <= t)`` for a sum of independent Bernoulli(pe_k), via the DFT of the characteristic function.

    ``F(t) = (t+1)/(n+1) + 1/(n+1) * sum_{l=1..n} [(1 - w^-(l(t+1))) / (1 - w^-l)] * prod_k (pe_k w^l + 1 - pe_k)``
    with ``w = exp(2 pi j / (n+1))``.  Absolute accuracy is around 1e-14, so it
    cannot resolve tails far below that.
    """
    pe = _pe(profile)
    n = len(pe)
    if not 0 <= t <= n:
        raise ValueError("t must lie in [0, n]")
    if t == n:
        return 1.0
    return float(_dft_cdf(pe, np.array([t]))[0])


def poisson_binomial_cdf_all(profile: BlockErrorProfile | Sequence[float]) -> np.ndarray:
    """:func:`poisson_binomial_cdf` for every ``t`` in ``0..n``, sharing one characteristic-function pass."""
    pe = _pe(profile)
    out = _dft_cdf(pe, np.arange(len(pe) + 1))
    out[-1] = 1.0
    return out


def _dft_cdf(pe: np.ndarray, ts: np.ndarray) -> np.ndarray:
    n = len(pe)
    l = np.arange(1, n + 1)
    w = np.exp(2j * np.pi * l / (n + 1))
    # product over cells in log form avoids underflow of the modulus for long blocks
    terms = pe[None, :] * w[:, None] + (1.0 - pe[None, :])
    with np.errstate(divide="ignore"):
        prod = np.exp(np.sum(np.log(terms), axis=1))
    ratio = (1 - np.exp(-2j * np.pi * np.outer(ts + 1, l) / (n + 1))) / (1 - np.exp(-2j * np.pi * l / (n + 1)))
    value = (ts + 1) / (n + 1) + (ratio @ prod).real / (n + 1)
    return np.clip(value, 0.0, 1.0)


def poisson_binomial_pmf_dp(profile: BlockErrorProfile | Sequence[float]) -> np.ndarray:
    pe = _pe(profile)
    dist = np.zeros(len(pe) + 1)
    dist[0] = 1.0
    for i, p in enumerate(pe):
        dist[1 : i + 2] = dist[1 : i + 2] * (1 - p) + dist[: i + 1] * p
        dist[0] *= 1 - p
    return dist


def poisson_binomial_cdf_dp(t: int, profile: BlockErrorProfile | Sequence[float]) -> float:
    """Same contract as :func:`poisson_binomial_cdf`, by convolving one cell at a time."""
    pe = _pe(profile)
    if not 0 <= t <= len(pe):
        raise ValueError("t must lie in [0, n]")
    if t == len(pe):
        return 1.0
    return float(min(1.0, poisson_binomial_pmf_dp(pe)[: t + 1].sum()))


def poisson_binomial_cdf_dp_all(profile: BlockErrorProfile | Sequence[float]) -> np.ndarray:
    out = np.minimum(np.cumsum(poisson_binomial_pmf_dp(profile)), 1.0)
    out[-1] = 1.0
    return out


def block_failures(t: int, profiles: np.ndarray) -> np.ndarray:
    """``P(X > t)`` for each row of a ``(blocks, n)`` array of cell error probabilities.

    Mass that passes ``t`` errors is accumulated in an absorbing state, so the
    result keeps full relative precision however small it is.
    """
    p = np.asarray(profiles, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    rows, n = p.shape
    if not 0 <= t <= n:
        raise ValueError("t must lie in [0, n]")
    dist = np.zeros((rows, t + 1))
    dist[:, 0] = 1.0
    over = np.zeros(rows)
    q = 1.0 - p
    for k in range(n):
        pk = p[:, k]
        over += dist[:, t] * pk
        dist[:, 1:] = dist[:, 1:] * q[:, k, None] + dist[:, :-1] * pk[:, None]
        dist[:, 0] *= q[:, k]
    return np.minimum(over, 1.0)


def block_failure(t: int, profile: BlockErrorProfile | Sequence[float], method: str = "tail") -> float:
    """Probability that a block with these cell error rates has more than ``t`` errors.

    ``method="tail"`` sums the upper tail directly; ``method="dft"`` returns
    ``1 - poisson_binomial_cdf`` and loses everything below about 1e-14.
    """
    pe = _pe(profile)
    if method == "dft":
        return max(0.0, 1.0 - poisson_binomial_cdf(t, pe))
    if method != "tail":
        raise ValueError(f"unknown method {method!r}")
    return float(block_failures(t, pe)[0])


def key_failure(block_failures_: Iterable[float]) -> float:
    """``1 - prod(1 - P_block)``, accumulated in log space."""
    pb = np.asarray(list(block_failures_), dtype=float)
    if np.any((pb < 0) | (pb > 1)):
        raise ValueError("block failure probabilities must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        return float(-np.expm1(np.sum(np.log1p(-pb))))


def _key_failure_rows(pb: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -np.expm1(np.sum(np.log1p(-pb), axis=-1))


def majority_vote_transform(profile: BlockErrorProfile | Sequence[float], r: int) -> BlockErrorProfile:
    """Effective error probability when each cell is read ``r`` times and majority-voted."""
    if r < 1 or r % 2 == 0:
        raise ValueError("r must be a positive odd integer")
    pe = _pe(profile)
    return BlockErrorProfile(majority_vote(pe, r))


def majority_vote(pe: np.ndarray, r: int) -> np.ndarray:
    if r == 1:
        return np.array(pe, dtype=float, copy=True)
    pe = np.asarray(pe, dtype=float)
    out = np.zeros_like(pe)
    for i in range(r // 2 + 1, r + 1):
        out += math.comb(r, i) * pe**i * (1.0 - pe) ** (r - i)
    return np.clip(out, 0.0, 1.0)


def _chip_failures(
    model: MaesModel, code: BchCodeSpec, key_bits: int, uniforms: np.ndarray, votes: int
) -> np.ndarray:
    chips, blocks, n = uniforms.shape
    pe = pe_from_uniform(model, uniforms)
    if votes > 1:
        pe = majority_vote(pe, votes)
    pb = block_failures(code.t, pe.reshape(chips * blocks, n)).reshape(chips, blocks)
    return _key_failure_rows(pb)


def sample_chip_key_failure(
    model: MaesModel, code: BchCodeSpec, key_bits: int, rng: np.random.Generator, votes: int = 1
) -> float:
    """Key failure probability of one simulated chip."""
    if key_bits < 1:
        raise ValueError("key_bits must be >= 1")
    u = rng.random((1, code.blocks_for(key_bits), code.n))
    return float(_chip_failures(model, code, key_bits, u, votes)[0])


def key_failure_distribution(
    model: MaesModel,
    code: BchCodeSpec,
    key_bits: int,
    chips: int,
    rng: np.random.Generator,
    votes: int = 1,
) -> KeyFailureDistribution:
    """Key failure rates of ``chips`` independently sampled chips.

    Every block of every chip gets a fresh set of ``n`` cell error
    probabilities.  ``votes`` applies per-cell majority voting first.
    """
    if key_bits < 1 or chips < 1:
        raise ValueError("key_bits and chips must be >= 1")
    u = rng.random((chips, code.blocks_for(key_bits), code.n))
    return KeyFailureDistribution(_chip_failures(model, code, key_bits, u, votes), chips)


def criterion_percentile(dist: KeyFailureDistribution, criterion: ReliabilityCriterion) -> float:
    if dist.chips < criterion.min_chips:
        raise InsufficientSamples(
            f"{dist.chips} chips cannot resolve the {criterion.chip_quantile} quantile "
            f"(need {criterion.min_chips})"
        )
    return dist.quantile(criterion.chip_quantile)


def check_criterion(dist: KeyFailureDistribution, criterion: ReliabilityCriterion) -> bool:
    return criterion_percentile(dist, criterion) < criterion.max_key_failure


@dataclass(frozen=True)
class CodeEvaluation:
    code: BchCodeSpec
    percentile: float
    passed: bool


def evaluate_code(
    model: MaesModel,
    code: BchCodeSpec,
    key_bits: int,
    criterion: ReliabilityCriterion,
    chips: int,
    rng: np.random.Generator,
    votes: int = 1,
) -> CodeEvaluation:
    dist = key_failure_distribution(model, code, key_bits, chips, rng, votes)
    value = criterion_percentile(dist, criterion)
    return CodeEvaluation(code, value, value < criterion.max_key_failure)


def select_minimal_code(
    model: MaesModel,
    key_bits: int,
    criterion: ReliabilityCriterion,
    candidates: Sequence[BchCodeSpec],
    chips: int,
    rng: np.random.Generator,
    votes: int = 1,
) -> CodeEvaluation:
    """Weakest candidate (smallest ``t``) whose chips meet the criterion.

    Raises :class:`NoFeasibleCode` with the evaluations tried when none does.
    """
    if [c.t for c in candidates] != sorted(c.t for c in candidates):
        raise ValueError("candidates must be sorted by ascending t")
    tried = []
    for code in candidates:
        ev = evaluate_code(model, code, key_bits, criterion, chips, rng, votes)
        tried.append(ev)
        if ev.passed:
            return ev
    raise NoFeasibleCode("no candidate code meets the reliability criterion", tried)
