import math

import numpy as np
import pytest

from vtkey import explorer
from vtkey.attacker import AttackerParams, DesignPoint, key_read_success
from vtkey.bch import build_code
from vtkey.error_model import MaesModel
from vtkey.explorer import (
    TABLE1_PAIRINGS,
    ConfigError,
    FlowConfig,
    Report,
    emit_reports,
    end_to_end_attack_sim,
    run_flow,
    tradeoff_curve,
    wilson_interval,
)

SMALL = FlowConfig(cells=256, trials=200)


@pytest.fixture(scope="module")
def reference_flow():
    return run_flow(SMALL.replace(fixed_codes=dict(TABLE1_PAIRINGS)))


def test_fixed_codes_reproduce_area_rows(reference_flow):
    rows = {r.delta_vt: r for r in reference_flow.records}
    want = {
        100.0: (765, 264, 61667),
        150.0: (510, 176, 40899),
        200.0: (255, 88, 31516),
        250.0: (255, 88, 24923),
        300.0: (255, 88, 21690),
    }
    for d, (cells, cell_area, total) in want.items():
        r = rows[d]
        assert r.code.t == TABLE1_PAIRINGS[d]
        assert r.cells == cells
        assert math.floor(r.cell_area_um2 + 0.5) == cell_area
        assert math.floor(r.total_area_um2 + 0.5) == total


def test_table1_csv_columns(reference_flow):
    lines = explorer.table1_csv(reference_flow, 200.0, 1).splitlines()
    assert lines[0] == explorer.TABLE1_HEADER
    first = lines[1].split(",")
    assert first[:8] == ["100", "255", "47", "42", "765", "264", "61403", "61667"]


def test_attack_values_in_report(reference_flow):
    for r in reference_flow.records:
        design = DesignPoint(r.delta_vt, r.code)
        assert r.attack[(200.0, 1)] == key_read_success(design, AttackerParams(200.0))
        assert r.cost[1] == 2 * r.cells
        assert len(r.success_curve) == SMALL.c_max


def test_default_flow_selects_anchor_code():
    report = run_flow(FlowConfig(offsets=(200.0,)))
    assert report.records[0].code.label() == "(255,131,18)"


def test_infeasible_offset_is_reported_not_raised():
    report = run_flow(SMALL.replace(offsets=(20.0,), candidate_t=(1, 2)))
    r = report.records[0]
    assert r.code is None
    assert r.status == "no-feasible-code" or r.status.startswith("degenerate")


def test_reports_are_deterministic(tmp_path):
    config = SMALL.replace(offsets=(150.0, 250.0), tradeoff_delta_vt=250.0)
    outputs = []
    for i, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"run{i}"
        report = run_flow(config.replace(workers=workers))
        paths = emit_reports(report, out, config)
        outputs.append({p.name: p.read_bytes() for p in paths})
    assert outputs[0] == outputs[1] == outputs[2]
    assert {"table1.csv", "tradeoff.csv", "success_vs_chips.csv", "summary.txt"} <= set(outputs[0])


def test_seed_changes_monte_carlo_output(tmp_path):
    a = run_flow(SMALL.replace(offsets=(200.0,)))
    b = run_flow(SMALL.replace(offsets=(200.0,), seed=7))
    assert not np.array_equal(a.records[0].keyfail.samples, b.records[0].keyfail.samples)


def test_empty_report_writes_nothing(tmp_path):
    out = tmp_path / "none"
    with pytest.raises(ConfigError):
        emit_reports(Report([], [], {}), out)
    assert not out.exists()


def test_config_validation():
    with pytest.raises(ConfigError):
        FlowConfig(offsets=())
    with pytest.raises(ConfigError):
        FlowConfig(sigma_var=0.0)
    with pytest.raises(ConfigError):
        FlowConfig(candidate_t=(43,))
    with pytest.raises(ConfigError):
        FlowConfig(votes=2)


def test_config_file_parsing():
    text = """
    # design sweep
    offsets = 100, 200   # mV
    sigma_err = 150,200
    chips = 2000
    max_key_failure = 1e-7
    fixed_codes = 200:18
    """
    config = explorer.config_from_values(explorer.parse_config_text(text))
    assert config.offsets == (100.0, 200.0)
    assert config.sigma_err == (150.0, 200.0)
    assert config.chips == 2000
    assert config.criterion.max_key_failure == 1e-7
    assert config.fixed_codes == {200.0: 18}
    with pytest.raises(ConfigError):
        explorer.parse_config_text("bogus = 1")
    with pytest.raises(ConfigError):
        explorer.parse_config_text("chips 5")
    with pytest.raises(ConfigError):
        explorer.parse_config_text("chips = many")


def test_tradeoff_is_monotone():
    model = MaesModel(1.4, 4.7)
    rows = tradeoff_curve(200.0, 100.0, [25, 18, 13, 11, 5], SMALL, model=model)
    kf = [r[1] for r in rows]
    rs = [r[2] for r in rows]
    assert all(a <= b for a, b in zip(kf, kf[1:]))
    assert all(a >= b for a, b in zip(rs, rs[1:]))


def test_tradeoff_starts_at_selected_code():
    config = FlowConfig(offsets=(200.0,))
    report = run_flow(config)
    selected = report.records[0]
    first = report.tradeoff[0]
    assert first[0] == selected.code.t
    assert first[1] == selected.criterion_percentile
    ts = [row[0] for row in report.tradeoff]
    assert ts == sorted(ts, reverse=True) and ts[-1] == 1


def test_distinct_t_values_skip_duplicate_codes():
    ts = explorer.distinct_t_values(18)
    ms = [build_code(t).m for t in ts]
    assert len(set(ms)) == len(ms)
    assert ts[0] == 18


def test_wilson_interval():
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == pytest.approx(1.0)


def test_e2e_perfect_attacker_always_wins():
    design = DesignPoint(200.0, build_code(18), sigma_var=0.0)
    result = end_to_end_attack_sim(design, AttackerParams(0.0), 20, np.random.default_rng(1))
    assert result.successes == 20


def test_e2e_hopeless_attacker_never_wins():
    design = DesignPoint(200.0, build_code(18))
    result = end_to_end_attack_sim(design, AttackerParams(200.0), 200, np.random.default_rng(2))
    assert result.successes == 0


def test_e2e_independent_of_workers():
    design = DesignPoint(100.0, build_code(42))
    att = AttackerParams(200.0, 9)
    a = end_to_end_attack_sim(design, att, 1100, np.random.default_rng(3), workers=1)
    b = end_to_end_attack_sim(design, att, 1100, np.random.default_rng(3), workers=2)
    assert a == b
    assert a.contains(key_read_success(design, att))


def test_calibration_on_anchor_only():
    config = FlowConfig(offsets=(200.0,))
    result = explorer.calibrate_noise(config, low=60, high=90, coarse_step=10, min_matches=1)
    assert 60 <= result.sigma_noise <= 90
    assert result.best.selections[200.0] == 18
    assert result.to_csv().startswith("sigma_noise,matches,t_at_200")


def test_calibration_failure_carries_result():
    config = FlowConfig(offsets=(200.0,))
    with pytest.raises(explorer.CalibrationFailed) as info:
        explorer.calibrate_noise(config, low=5, high=10, coarse_step=5, min_matches=1)
    assert info.value.result.matches == 0

