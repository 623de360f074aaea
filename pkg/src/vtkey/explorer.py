"""Design flow: calibrate, sweep threshold offsets, pick codes, score security and cost.

Every Monte Carlo quantity draws from a stream derived from ``(seed, purpose,
offset in microvolts, ...)``, so results do not depend on evaluation order or
on how many worker processes share the work.
"""
from __future__ import annotations

import dataclasses
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from ._rng import derive
from .attacker import AttackerParams, DesignPoint, key_read_success, measurement_cost, success_vs_chips
from .bch import MAX_T, TABLE1_T, BchCodeSpec, DecodeFailure, build_code, codes_for, decode, encode, join_key, split_key
from .cell_sim import CellPhysicalParams, EmpiricalErrorData, simulate_population
from .error_model import DegenerateData, FitReport, MaesModel, fit
from .reliability import (
    CodeEvaluation,
    KeyFailureDistribution,
    NoFeasibleCode,
    ReliabilityCriterion,
    criterion_percentile,
    evaluate_code,
    key_failure_distribution,
    select_minimal_code,
)

# Offset (mV) -> t of the cheapest code meeting the reliability criterion (reference design table).
TABLE1_PAIRINGS: dict[float, int] = {100.0: 42, 150.0: 25, 200.0: 18, 250.0: 13, 300.0: 11}

# Synthesised decoder areas (um^2) for the reference codes; provided constants, not computed.
TABLE1_DECODER_AREA_UM2: dict[int, float] = {42: 61403.0, 25: 40723.0, 18: 31428.0, 13: 24835.0, 11: 21602.0}

SRAM_CELL_AREA_UM2 = 0.345

# Best noise sigma found by ``calibrate_noise`` on the default configuration
# (exhaustive 1 mV grid, seed 42); see README for the achieved match count.
CALIBRATED_SIGMA_NOISE_MV = 78.0

TABLE1_HEADER = (
    "delta_vt,n,m,t,cells,cell_area_um2,decoder_area_um2,total_area_um2,criterion_percentile,p_rskey"
)


class CalibrationFailed(RuntimeError):
    def __init__(self, message: str, result: "CalibrationResult"):
        super().__init__(message)
        self.result = result


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FlowConfig:
    offsets: tuple[float, ...] = (100.0, 150.0, 200.0, 250.0, 300.0)
    sigma_var: float = 30.0
    sigma_noise: float = CALIBRATED_SIGMA_NOISE_MV
    key_bits: int = 128
    criterion: ReliabilityCriterion = ReliabilityCriterion()
    sigma_err: tuple[float, ...] = (200.0,)
    chip_counts: tuple[int, ...] = (1,)
    candidate_t: tuple[int, ...] = TABLE1_T
    seed: int = 42
    cell_area_um2: float = SRAM_CELL_AREA_UM2
    decoder_area_um2: Mapping[int, float] = field(default_factory=lambda: dict(TABLE1_DECODER_AREA_UM2))
    cells: int = 512
    trials: int = 300
    chips: int = 1000
    votes: int = 1
    c_max: int = 20
    tradeoff_delta_vt: float = 200.0
    tradeoff_sigma_err: float = 100.0
    fixed_codes: Mapping[float, int] = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.offsets:
            raise ConfigError("offsets must not be empty")
        if any(not (o > 0 and math.isfinite(o)) for o in self.offsets):
            raise ConfigError("offsets must be positive")
        positive = {
            "sigma_var": self.sigma_var,
            "sigma_noise": self.sigma_noise,
            "key_bits": self.key_bits,
            "cell_area_um2": self.cell_area_um2,
            "cells": self.cells,
            "trials": self.trials,
            "chips": self.chips,
            "votes": self.votes,
            "c_max": self.c_max,
            "workers": self.workers,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.sigma_err or any(s < 0 for s in self.sigma_err):
            raise ConfigError("sigma_err must be a non-empty list of non-negative values")
        if not self.chip_counts or any(c < 1 for c in self.chip_counts):
            raise ConfigError("chip_counts must be a non-empty list of positive integers")
        if not self.candidate_t or any(not 1 <= t <= MAX_T for t in self.candidate_t):
            raise ConfigError(f"candidate_t values must lie in 1..{MAX_T}")
        if self.votes % 2 == 0:
            raise ConfigError("votes must be odd")

    def replace(self, **changes: Any) -> "FlowConfig":
        return dataclasses.replace(self, **changes)

    def candidates(self) -> list[BchCodeSpec]:
        return codes_for(sorted(set(self.candidate_t)))


def _mv(delta_vt: float) -> int:
    """Stream id of an offset: its value in microvolts."""
    return int(round(delta_vt * 1000))


# --- per-offset pipeline ----------------------------------------------------


def population_for(config: FlowConfig, delta_vt: float, sigma_noise: float | None = None) -> EmpiricalErrorData:
    sn = config.sigma_noise if sigma_noise is None else sigma_noise
    params = CellPhysicalParams(delta_vt, config.sigma_var, sn)
    return simulate_population(params, config.cells, config.trials, derive(config.seed, "population", _mv(delta_vt)))


def model_for(config: FlowConfig, delta_vt: float, sigma_noise: float | None = None) -> FitReport:
    return fit(population_for(config, delta_vt, sigma_noise))


def evaluate_for(config: FlowConfig, model: MaesModel, delta_vt: float, code: BchCodeSpec) -> CodeEvaluation:
    rng = derive(config.seed, "keyfail", _mv(delta_vt), code.t)
    return evaluate_code(model, code, config.key_bits, config.criterion, config.chips, rng, config.votes)


def select_for(config: FlowConfig, model: MaesModel, delta_vt: float) -> CodeEvaluation:
    """Minimal passing candidate, each candidate scored on its own derived stream."""
    tried = []
    for code in config.candidates():
        ev = evaluate_for(config, model, delta_vt, code)
        tried.append(ev)
        if ev.passed:
            return ev
    raise NoFeasibleCode(f"no candidate code meets the criterion at {delta_vt} mV", tried)


def keyfail_distribution_for(
    config: FlowConfig, model: MaesModel, delta_vt: float, code: BchCodeSpec
) -> KeyFailureDistribution:
    rng = derive(config.seed, "keyfail", _mv(delta_vt), code.t)
    return key_failure_distribution(model, code, config.key_bits, config.chips, rng, config.votes)


# --- calibration ------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationPoint:
    sigma_noise: float
    selections: dict[float, int | None]
    matches: int
    distance: int
    anchor_match: bool


@dataclass(frozen=True)
class CalibrationResult:
    sigma_noise: float
    best: CalibrationPoint
    grid: tuple[CalibrationPoint, ...]

    @property
    def matches(self) -> int:
        return self.best.matches

    def to_csv(self) -> str:
        offsets = sorted(self.best.selections)
        buf = io.StringIO()
        buf.write("sigma_noise,matches," + ",".join(f"t_at_{o:g}" for o in offsets) + "\n")
        for p in self.grid:
            sel = ",".join("" if p.selections[o] is None else str(p.selections[o]) for o in offsets)
            buf.write(f"{p.sigma_noise:g},{p.matches},{sel}\n")
        return buf.getvalue()


def _calibration_point(args: tuple[FlowConfig, float, dict[float, int]]) -> CalibrationPoint:
    config, sigma_noise, targets = args
    ladder = [c.t for c in config.candidates()]
    selections: dict[float, int | None] = {}
    for delta_vt in targets:
        try:
            model = model_for(config, delta_vt, sigma_noise).model
            selections[delta_vt] = select_for(config, model, delta_vt).code.t
        except (NoFeasibleCode, DegenerateData):
            selections[delta_vt] = None
    matches = sum(selections[d] == targets[d] for d in targets)
    distance = 0
    for d, t in targets.items():
        got = selections[d]
        pos = len(ladder) if got is None else ladder.index(got)
        distance += abs(pos - ladder.index(t)) if t in ladder else len(ladder)
    anchor = 200.0 in targets and selections.get(200.0) == targets[200.0]
    return CalibrationPoint(sigma_noise, selections, matches, distance, anchor)


def _rank(p: CalibrationPoint) -> tuple:
    return (-p.matches, not p.anchor_match, p.distance, p.sigma_noise)


def _plateau_centre(grid: list[CalibrationPoint], first: CalibrationPoint) -> CalibrationPoint:
    """Middle of the contiguous run of grid points that tie with ``first``."""
    key = _rank(first)[:-1]
    i = grid.index(first)
    j = i
    while j + 1 < len(grid) and _rank(grid[j + 1])[:-1] == key and grid[j + 1].selections == first.selections:
        j += 1
    return grid[(i + j) // 2]


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
        return list(pool.map(fn, items))


def calibrate_noise(
    config: FlowConfig,
    low: float = 5.0,
    high: float = 120.0,
    coarse_step: float = 5.0,
    exhaustive: bool = False,
    targets: Mapping[float, int] | None = None,
    min_matches: int = 3,
) -> CalibrationResult:
    """Pick the noise sigma whose selected codes best reproduce the reference pairings.

    A coarse grid is refined at 1 mV around its best point; ``exhaustive``
    scans the whole range at 1 mV instead.  Ties prefer matching the 200 mV
    anchor, then selections closer to the targets on the candidate ladder;
    among equal points the middle of the first contiguous run is returned.  Raises :class:`CalibrationFailed` (carrying the
    result) when fewer than ``min_matches`` pairings can be matched.
    """
    targets = dict(TABLE1_PAIRINGS if targets is None else targets)
    targets = {d: t for d, t in targets.items() if d in config.offsets} or targets

    def scan(values: Iterable[float]) -> list[CalibrationPoint]:
        return _map(_calibration_point, [(config, float(v), targets) for v in values], config.workers)

    if exhaustive:
        grid = scan(np.arange(low, high + 0.5, 1.0))
    else:
        grid = scan(np.arange(low, high + 1e-9, coarse_step))
        centre = min(grid, key=_rank).sigma_noise
        done = {p.sigma_noise for p in grid}
        fine = [v for v in np.arange(max(low, centre - coarse_step + 1), min(high, centre + coarse_step - 1) + 0.5, 1.0)
                if float(v) not in done]
        grid += scan(fine)
    grid.sort(key=lambda p: p.sigma_noise)
    best = _plateau_centre(grid, min(grid, key=_rank))
    result = CalibrationResult(best.sigma_noise, best, tuple(grid))
    if best.matches < min_matches:
        raise CalibrationFailed(
            f"best sigma_noise={best.sigma_noise:g} mV matches only {best.matches} of {len(targets)} pairings",
            result,
        )
    return result


# --- full flow --------------------------------------------------------------


@dataclass
class DesignRecord:
    delta_vt: float
    fit: FitReport | None
    code: BchCodeSpec | None
    criterion_percentile: float | None
    attack: dict[tuple[float, int], float] = field(default_factory=dict)
    cost: dict[int, int] = field(default_factory=dict)
    cell_area_um2: float | None = None
    decoder_area_um2: float | None = None
    keyfail: KeyFailureDistribution | None = None
    success_curve: list[tuple[int, float]] = field(default_factory=list)
    status: str = "ok"
    key_bits: int = 128

    @property
    def cells(self) -> int | None:
        return None if self.code is None else self.code.n * self.code.blocks_for(self.key_bits)

    @property
    def total_area_um2(self) -> float | None:
        if self.cell_area_um2 is None or self.decoder_area_um2 is None:
            return None
        return self.cell_area_um2 + self.decoder_area_um2


@dataclass
class Report:
    records: list[DesignRecord]
    tradeoff: list[tuple[int, float, float]]
    metadata: dict[str, str]


def _design_record(args: tuple[FlowConfig, float]) -> DesignRecord:
    config, delta_vt = args
    try:
        report = model_for(config, delta_vt)
    except DegenerateData as exc:
        return DesignRecord(delta_vt, None, None, None, status=f"degenerate-fit: {exc}", key_bits=config.key_bits)
    model = report.model
    fixed = config.fixed_codes.get(delta_vt)
    try:
        if fixed is not None:
            ev = evaluate_for(config, model, delta_vt, build_code(fixed))
        else:
            ev = select_for(config, model, delta_vt)
    except NoFeasibleCode as exc:
        worst = exc.evaluations[-1].percentile if exc.evaluations else None
        return DesignRecord(delta_vt, report, None, worst, status="no-feasible-code", key_bits=config.key_bits)

    code = ev.code
    design = DesignPoint(delta_vt, code, config.key_bits, config.sigma_var)
    rec = DesignRecord(delta_vt, report, code, ev.percentile, key_bits=config.key_bits)
    if fixed is not None and not ev.passed:
        rec.status = "fixed-code-fails-criterion"
    for s in config.sigma_err:
        for c in config.chip_counts:
            rec.attack[(s, c)] = key_read_success(design, AttackerParams(s, c))
    for c in config.chip_counts:
        rec.cost[c] = measurement_cost(design, AttackerParams(config.sigma_err[0], c))
    rec.cell_area_um2 = design.cells * config.cell_area_um2
    rec.decoder_area_um2 = config.decoder_area_um2.get(code.t)
    rec.keyfail = keyfail_distribution_for(config, model, delta_vt, code)
    rec.success_curve = success_vs_chips(design, config.sigma_err[0], config.c_max)
    return rec


def tradeoff_curve(
    delta_vt: float,
    sigma_err: float,
    t_values: Sequence[int] | None,
    config: FlowConfig,
    model: MaesModel | None = None,
) -> list[tuple[int, float, float]]:
    """Rows ``(t, first-percentile key failure, attacker key read success)``.

    With ``t_values=None`` the curve starts at the code the flow selects for
    ``delta_vt`` and walks down through every distinct weaker BCH code.
    """
    if model is None:
        model = model_for(config, delta_vt).model
    if t_values is None:
        start = select_for(config, model, delta_vt).code.t
        t_values = distinct_t_values(start)
    rows = []
    for t in t_values:
        code = build_code(t)
        ev = evaluate_for(config, model, delta_vt, code)
        success = key_read_success(DesignPoint(delta_vt, code, config.key_bits, config.sigma_var), AttackerParams(sigma_err))
        rows.append((t, ev.percentile, success))
    return rows


def distinct_t_values(start: int) -> list[int]:
    """Descending ``t`` values from ``start``, one per distinct code (largest ``t`` for each ``m``)."""
    seen: dict[int, int] = {}
    for t in range(1, start + 1):
        seen[build_code(t).m] = t
    return sorted(set(seen.values()) | {start}, reverse=True)


def run_flow(config: FlowConfig) -> Report:
    """Evaluate every configured offset and the reliability/security tradeoff."""
    records = _map(_design_record, [(config, d) for d in config.offsets], config.workers)
    tradeoff: list[tuple[int, float, float]] = []
    anchor = next((r for r in records if r.delta_vt == config.tradeoff_delta_vt), None)
    if anchor is not None and anchor.fit is not None and anchor.code is not None:
        tradeoff = tradeoff_curve(
            config.tradeoff_delta_vt,
            config.tradeoff_sigma_err,
            distinct_t_values(anchor.code.t),
            config,
            model=anchor.fit.model,
        )
    metadata = {
        "seed": str(config.seed),
        "vtkey_version": __version__,
        "numpy_version": np.__version__,
        "sigma_noise_mv": repr(config.sigma_noise),
        "sigma_var_mv": repr(config.sigma_var),
        "chips": str(config.chips),
        "decoder_areas": "provided constants",
    }
    return Report(records, tradeoff, metadata)


# --- empirical attack -------------------------------------------------------


@dataclass(frozen=True)
class AttackSimResult:
    successes: int
    trials: int
    ci_low: float
    ci_high: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


_E2E_CHUNK = 500
_NOMINAL_VT = 418.0  # PMOS threshold magnitude, mV; cancels in every difference


def _attack_chunk(args: tuple[DesignPoint, AttackerParams, int, np.random.Generator]) -> int:
    design, attacker, trials, rng = args
    code = design.code
    blocks = design.blocks
    shape = (attacker.chips, blocks, code.n)
    successes = 0
    for _ in range(trials):
        key = rng.integers(0, 2, design.key_bits, dtype=np.uint8)
        bits = np.stack([encode(code, msg).bits for msg in split_key(key, code)])
        # magnitudes of P1 and P2: a stored 1 raises P2, a stored 0 raises P1
        p1 = _NOMINAL_VT + design.delta_vt * (1 - bits)
        p2 = _NOMINAL_VT + design.delta_vt * bits
        reads = []
        for nominal in (p1, p2):
            actual = nominal + rng.normal(0.0, 1.0, shape) * design.sigma_var
            noise = rng.normal(0.0, 1.0, (attacker.repeat_measurements, *shape)).mean(axis=0)
            reads.append((actual + attacker.sigma_err * noise).mean(axis=0))
        guess = (reads[1] > reads[0]).astype(np.uint8)
        messages = []
        try:
            for b in range(blocks):
                messages.append(decode(code, guess[b]).message)
        except DecodeFailure:
            continue
        successes += bool(np.array_equal(join_key(messages, design.key_bits), key))
    return successes


def end_to_end_attack_sim(
    design: DesignPoint,
    attacker: AttackerParams,
    trials: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> AttackSimResult:
    """Simulate the full readout attack and count how often the key comes out right.

    Each trial draws a random key, encodes it, manufactures ``attacker.chips``
    chips with independently varying thresholds, measures every transistor
    with noise, averages per transistor across chips, guesses each bit from
    the sign of the difference and decodes.  Trials are split into fixed-size
    chunks with spawned streams, so the result does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = [min(_E2E_CHUNK, trials - lo) for lo in range(0, trials, _E2E_CHUNK)]
    streams = rng.spawn(len(sizes))
    counts = _map(_attack_chunk, [(design, attacker, s, g) for s, g in zip(sizes, streams)], workers)
    successes = int(sum(counts))
    low, high = wilson_interval(successes, trials)
    return AttackSimResult(successes, trials, low, high)


# --- reports ----------------------------------------------------------------


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _round_area(x: float | None) -> str:
    return "" if x is None else str(int(math.floor(x + 0.5)))


def table1_csv(report: Report, sigma_err: float, chips: int) -> str:
    buf = io.StringIO()
    buf.write(TABLE1_HEADER + "\n")
    for r in report.records:
        if r.code is None:
            buf.write(f"{r.delta_vt:g},,,,,,,,{_fmt(r.criterion_percentile)},\n")
            continue
        buf.write(
            f"{r.delta_vt:g},{r.code.n},{r.code.m},{r.code.t},{r.cells},"
            f"{_round_area(r.cell_area_um2)},{_round_area(r.decoder_area_um2)},{_round_area(r.total_area_um2)},"
            f"{_fmt(r.criterion_percentile)},{_fmt(r.attack.get((sigma_err, chips)))}\n"
        )
    return buf.getvalue()


def emit_reports(report: Report, out_dir: str | os.PathLike, config: FlowConfig | None = None) -> list[Path]:
    """Write the CSV reports and a plain-text summary; returns the written paths."""
    config = config or FlowConfig()
    if not report.records:
        raise ConfigError("report has no design points; nothing written")
    out = Path(out_dir)
    files: dict[str, str] = {}
    sigma0, c0 = config.sigma_err[0], config.chip_counts[0]
    files["table1.csv"] = table1_csv(report, sigma0, c0)

    buf = io.StringIO()
    buf.write("t,first_percentile_key_failure,attacker_success\n")
    for t, kf, rs in report.tradeoff:
        buf.write(f"{t},{kf!r},{rs!r}\n")
    files["tradeoff.csv"] = buf.getvalue()

    buf = io.StringIO()
    buf.write("delta_vt,C,p_rskey\n")
    for r in report.records:
        for c, p in r.success_curve:
            buf.write(f"{r.delta_vt:g},{c},{p!r}\n")
    files["success_vs_chips.csv"] = buf.getvalue()

    buf = io.StringIO()
    buf.write("delta_vt,n,m,t,sigma_err,C,p_rskey,measurements\n")
    for r in report.records:
        if r.code is None:
            continue
        for (s, c), p in sorted(r.attack.items()):
            buf.write(f"{r.delta_vt:g},{r.code.n},{r.code.m},{r.code.t},{s:g},{c},{p!r},{r.cost.get(c, '')}\n")
    files["attack.csv"] = buf.getvalue()

    buf = io.StringIO()
    buf.write("delta_vt,lambda1,lambda2,residual\n")
    for r in report.records:
        if r.fit is not None:
            buf.write(r.fit.csv_row(r.delta_vt) + "\n")
    files["fits.csv"] = buf.getvalue()

    buf = io.StringIO()
    buf.write("delta_vt,code_t,pass,percentile_value\n")
    for r in report.records:
        passed = r.code is not None and r.criterion_percentile is not None and (
            r.criterion_percentile < config.criterion.max_key_failure
        )
        buf.write(f"{r.delta_vt:g},{'' if r.code is None else r.code.t},{str(passed).lower()},{_fmt(r.criterion_percentile)}\n")
    files["criterion.csv"] = buf.getvalue()

    for r in report.records:
        if r.keyfail is not None:
            files[f"keyfail_dist_{r.delta_vt:g}.csv"] = r.keyfail.to_csv()

    files["summary.txt"] = summary_text(report, config)

    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []
    for name, text in files.items():
        path = out / name
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)
    return written


def summary_text(report: Report, config: FlowConfig) -> str:
    lines = ["Threshold-obfuscated key design flow", ""]
    for k, v in report.metadata.items():
        lines.append(f"{k}: {v}")
    lines.append("")
    lines.append(f"criterion: {config.criterion.chip_quantile:.0%} of chips below {config.criterion.max_key_failure:g}")
    lines.append("")
    for r in report.records:
        if r.code is None:
            lines.append(f"{r.delta_vt:g} mV: {r.status}")
            continue
        lam = "" if r.fit is None else f" lambda=({r.fit.model.lambda1:.3f}, {r.fit.model.lambda2:.3f})"
        lines.append(
            f"{r.delta_vt:g} mV: BCH{r.code.label()} cells={r.cells} total_area={_round_area(r.total_area_um2)} um^2 "
            f"percentile={r.criterion_percentile:.3g}{lam} status={r.status}"
        )
        for (s, c), p in sorted(r.attack.items()):
            lines.append(f"    sigma_err={s:g} C={c}: P_RSkey={p:.3g} measurements={r.cost.get(c)}")
    return "\n".join(lines) + "\n"


# --- config files -----------------------------------------------------------

_LIST_FLOAT = {"offsets", "sigma_err"}
_LIST_INT = {"chip_counts", "candidate_t"}
_FLOAT = {"sigma_var", "sigma_noise", "cell_area_um2", "tradeoff_delta_vt", "tradeoff_sigma_err"}
_INT = {"key_bits", "seed", "cells", "trials", "chips", "votes", "c_max", "workers"}


def _coerce(key: str, value: str) -> Any:
    try:
        if key in _LIST_FLOAT:
            return tuple(float(v) for v in value.split(",") if v.strip())
        if key in _LIST_INT:
            return tuple(int(v) for v in value.split(",") if v.strip())
        if key in _FLOAT:
            return float(value)
        if key in _INT:
            return int(value)
        if key in ("chip_quantile", "max_key_failure"):
            return float(value)
        if key in ("decoder_area_um2", "fixed_codes"):
            pairs = [p.split(":") for p in value.split(",") if p.strip()]
            if key == "decoder_area_um2":
                return {int(a): float(b) for a, b in pairs}
            return {float(a): int(b) for a, b in pairs}
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, value)
    return values


def config_from_values(values: Mapping[str, Any], base: FlowConfig | None = None) -> FlowConfig:
    base = base or FlowConfig()
    values = dict(values)
    crit = {k: values.pop(k) for k in ("chip_quantile", "max_key_failure") if k in values}
    if crit:
        values["criterion"] = dataclasses.replace(base.criterion, **crit)
    return base.replace(**values)
