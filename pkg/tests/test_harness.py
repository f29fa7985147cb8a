import json

import numpy as np
import pytest

from modlab.errors import ConfigError
from modlab.harness import (CSV_COLUMNS, DEFAULT_CONFIG, GrowthReport, GrowthRow, _norms, emit_report, fit_slope,
                            grid_for, load_config, load_report, params_from_config, plan_from_config, rows_csv,
                            theoretical_exponents, validate_config)
from modlab.symbols import CounterexampleParams


def test_defaults_accepted_and_echoed():
    cfg = validate_config({})
    assert cfg == {**DEFAULT_CONFIG, "j_lo": 10, "j_hi": 14}


def test_j_range_follows_j0():
    cfg = validate_config({"delta_tau": 0.25})
    assert (cfg["j_lo"], cfg["j_hi"]) == (12, 16)


@pytest.mark.parametrize("raw, path", [
    ({"delta_tau": 0.5}, "$.delta_tau"),
    ({"colour": 1}, "$.colour"),
    ({"n": 1.5}, "$.n"),
    ({"m": "big"}, "$.m"),
    ({"refine": 1}, "$.refine"),
    ({"j_lo": 9}, "$.j_lo"),
    ({"j_lo": 10, "j_hi": 12}, "$.j_hi"),
    ({"q": 1.0}, "$.p"),
    ({"L": -1}, "$.L"),
    ({"n": 3}, "$.n"),
])
def test_bad_configs_name_the_field(raw, path):
    with pytest.raises(ConfigError, match=path.replace("$", r"\$")):
        validate_config(raw)


def test_infeasible_delta_mentions_j0():
    with pytest.raises(ConfigError, match="j0"):
        validate_config({"delta_tau": 0.5})


def test_load_config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"m": 0.0}))
    assert load_config(p)["m"] == 0.0
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_exponents_examples():
    ex = theoretical_exponents(CounterexampleParams())
    assert (ex.input, ex.output_lower, ex.ratio) == pytest.approx((-0.225, 0.41, 0.635))
    assert ex.theorem_condition
    assert theoretical_exponents(CounterexampleParams(m=0.0)).ratio == pytest.approx(0.135)
    q2 = theoretical_exponents(CounterexampleParams(q=2.0))
    assert q2.input == pytest.approx(-0.15)
    edge = theoretical_exponents(CounterexampleParams(q=2.0, m=0.0, epsilon=1e-9))
    assert edge.ratio == pytest.approx(0.0, abs=1e-8)


def test_fit_slope_examples():
    js = range(10, 15)
    f = fit_slope((j, 2.0**j) for j in js)
    assert f.slope == pytest.approx(1.0, abs=1e-13) and f.r_squared == pytest.approx(1.0)
    assert fit_slope((j, 3.0) for j in js).slope == pytest.approx(0.0, abs=1e-14)
    rng = np.random.default_rng(0x5EED)
    noisy = [(j, 5.0 * 2 ** (0.41 * j) * (1 + 0.01 * rng.standard_normal())) for j in js]
    assert fit_slope(noisy).slope == pytest.approx(0.41, abs=0.02)
    with pytest.raises(ValueError):
        fit_slope([(1, 1.0), (2, 0.0), (3, 2.0)])
    with pytest.raises(ValueError):
        fit_slope([(1, 1.0), (2, 2.0)])


def test_grid_schedule():
    prm = CounterexampleParams()
    sched = [(g.L, g.log2_N) for g in (grid_for(j, prm) for j in prm.js)]
    assert sched == [(64.0, 17), (32.0, 17), (32.0, 18), (32.0, 19), (16.0, 19)]
    assert grid_for(10, prm, L_min=128).L == 128
    assert grid_for(10, prm, extra_log2=1).log2_N == 18


def _toy_report():
    rows = [GrowthRow(j, 0.3 * 2 ** (-0.2 * j), 10 * 2 ** (0.45 * j), 7 * 2 ** (0.42 * j), 33 * 2 ** (0.65 * j),
                      17 + j % 2, 1e-14, {"n": 1, "L": 32.0, "log2_N": 17}) for j in range(10, 15)]
    return GrowthReport(config=validate_config({}), rows=rows,
                        slopes={"ratio": {"slope": 0.65, "intercept": 0.0, "r_squared": 1.0}},
                        theory={"input": -0.225, "output_lower": 0.41, "ratio": 0.635},
                        verdict={"unbounded_growth": True, "r_squared": 1.0})


def test_report_round_trip(tmp_path):
    rep = _toy_report()
    csv_path, json_path = emit_report(rep, tmp_path / "out")
    assert load_report(json_path) == rep
    lines = csv_path.read_text().splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) == 6
    assert float(lines[1].split(",")[1]) == rep.rows[0].input_norm
    assert not list((tmp_path / "out").glob("*.tmp"))


def test_report_schema_version_checked(tmp_path):
    _, json_path = emit_report(_toy_report(), tmp_path)
    data = json.loads(json_path.read_text())
    data["schema_version"] = 99
    json_path.write_text(json.dumps(data))
    with pytest.raises(ConfigError, match="schema_version"):
        load_report(json_path)


def test_row_pipeline_is_bit_reproducible(dual_cache_path):
    cfg = validate_config({})
    prm, plan = params_from_config(cfg), plan_from_config(cfg)
    grid = grid_for(10, prm)
    a = _norms(10, prm, grid, plan, cfg["truncation_radius"], dual_cache_path)
    b = _norms(10, prm, grid, plan, cfg["truncation_radius"], dual_cache_path)
    assert (a[0].value, a[1].value, a[2]) == (b[0].value, b[1].value, b[2])


def test_full_report_structure(growth_report, tmp_path):
    rep = growth_report
    assert [r.j for r in rep.rows] == [10, 11, 12, 13, 14]
    assert set(rep.slopes) == {"input", "output_lower", "ratio"}
    assert rep.verdict["statement"] == "growth consistent with unboundedness at predicted exponent"
    assert all(r.refinement_delta_pct < 0.5 for r in rep.rows)
    assert all(r.output_lower_bound <= r.output_norm * (1 + 1e-3) for r in rep.rows)
    assert rep.verdict["discriminates_from_control"]
    _, json_path = emit_report(rep, tmp_path)
    again = load_report(json_path)
    assert again == rep
    assert rows_csv(again.rows) == rows_csv(rep.rows)
