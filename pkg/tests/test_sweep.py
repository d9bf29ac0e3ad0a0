import json

import numpy as np
import pytest

from hetcov.network_model import two_tier_config
from hetcov.sweep import (
    SweepGrid,
    coupled_vs_decoupled,
    optimal_pcf,
    percentile_rate,
    weight_sweep,
    with_ratios,
)
from hetcov.uplink import rate_coverage, sir_coverage


@pytest.fixture(scope="module")
def cfg():
    return two_tier_config(6, -20, pcf=0.5)


def test_grid_validation():
    with pytest.raises(ValueError, match="empty grid"):
        SweepGrid(epsilon_values=())
    with pytest.raises(ValueError, match="sorted"):
        SweepGrid(epsilon_values=(1.0, 0.5))
    with pytest.raises(ValueError, match="epsilon"):
        SweepGrid(epsilon_values=(1.5,))
    with pytest.raises(ValueError, match="metric"):
        SweepGrid(metric="bogus")


def test_with_ratios(cfg):
    c = with_ratios(cfg, 0.0, -14.0)
    assert np.allclose(c.ul_weights, [1, 1]) and np.allclose(c.dl_weights, [1, 10**-1.4])
    assert np.allclose(with_ratios(cfg).ul_weights, cfg.ul_weights)


def test_one_point_grid_is_argmax(cfg):
    g = SweepGrid(epsilon_values=(0.3,), ul_ratio_db=(-6.0,), dl_ratio_db=(-4.0,), thresholds=(1.0,))
    res = weight_sweep(cfg, g)
    (best,) = res.argmax()
    assert (best["epsilon"], best["ul_ratio_db"], best["dl_ratio_db"]) == (0.3, -6.0, -4.0)
    assert best["value"] == pytest.approx(float(sir_coverage(1.0, with_ratios(cfg.replace(pcf=0.3), -6.0, -4.0))))


def test_lower_bound_argmax_equal_weights(cfg):
    g = SweepGrid(epsilon_values=tuple(np.round(np.arange(0, 1.01, 0.1), 10)),
                  ul_ratio_db=tuple(range(-20, 21, 5)), thresholds=(0.1, 1.0, 10.0), metric="sir_lower")
    res = weight_sweep(cfg, g)
    for r in res.argmax():
        # at eps = 1 the bound is flat in the weights, so only ties are allowed
        at_eq = next(q for q in res.rows if q["epsilon"] == r["epsilon"] and q["threshold"] == r["threshold"]
                     and q["ul_ratio_db"] == 0.0)
        assert at_eq["value"] >= r["value"] * (1 - 1e-12)
    for r in res.overall_argmax():
        assert (r["epsilon"], r["ul_ratio_db"]) == (0.5, 0.0)


def test_lower_bound_optimal_pcf(cfg):
    for tau in (0.1, 1.0, 10.0):
        e, _ = optimal_pcf(tau, with_ratios(cfg, 0.0),
                           objective="sir_lower")
        assert e == pytest.approx(0.5, abs=1e-3)


def test_percentile_rate(cfg):
    edge = percentile_rate(cfg, 0.95)
    med = percentile_rate(cfg, 0.5)
    assert edge < med
    assert float(rate_coverage(edge, cfg)) == pytest.approx(0.95, abs=1e-3)
    assert float(rate_coverage(med, cfg)) == pytest.approx(0.5, abs=1e-3)
    assert percentile_rate(cfg, 0.9999) < 0.05 * edge
    assert percentile_rate(cfg, 0.95, "joint") < percentile_rate(cfg, 0.5, "joint")
    with pytest.raises(ValueError):
        percentile_rate(cfg, 1.0)
    with pytest.raises(ValueError):
        percentile_rate(cfg, 0.5, "both")


def test_edge_rate_prefers_higher_pcf():
    base = two_tier_config(6, 0.0)
    grid = np.round(np.arange(0, 1.01, 0.1), 10)
    e_edge, _ = optimal_pcf(0.0, base, grid, objective="edge_rate", refine=False)
    e_med, _ = optimal_pcf(0.0, base, grid, objective="median_rate", refine=False)
    assert e_edge > e_med


def test_optimal_pcf_refines(cfg):
    grid = np.round(np.arange(0, 1.01, 0.1), 10)
    e0, v0 = optimal_pcf(1.0, cfg, grid, refine=False)
    e1, v1 = optimal_pcf(1.0, cfg, grid)
    assert v1 >= v0 and abs(e1 - e0) <= 0.1
    with pytest.raises(ValueError, match="empty grid"):
        optimal_pcf(1.0, cfg, [])


def test_rate_metric_rows(cfg):
    g = SweepGrid(epsilon_values=(1.0,), ul_ratio_db=(-10.0, 0.0), metric="edge_rate")
    res = weight_sweep(cfg, g)
    assert [r["threshold"] for r in res.rows] == [None, None]
    assert res.argmax()[0]["ul_ratio_db"] == 0.0


def test_csv_and_summary(tmp_path, cfg):
    g = SweepGrid(epsilon_values=(0.5, 1.0), ul_ratio_db=(-10.0, 0.0), thresholds=(1.0,))
    res = weight_sweep(cfg, g)
    res.write_csv(tmp_path / "s.csv")
    res.write_summary(tmp_path / "s.json")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "epsilon,ul_ratio_db,dl_ratio_db,threshold,value" and len(lines) == 5
    vals = [float(l.split(",")[-1]) for l in lines[1:]]
    assert vals == [r["value"] for r in res.rows]
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["metric"] == "sir_coverage" and len(doc["argmax"]) == 2
    assert doc["overall_argmax"][0]["value"] == max(vals)


def test_decoupled_contains_coupled(cfg):
    (row,) = coupled_vs_decoupled(cfg, [0.5], ratios_db=(-12.0, 0.0), ul_ratios_db=(0.0,), dl_ratios_db=(-14.0,))
    assert row["decoupled_edge_rate"] >= row["coupled_edge_rate"]
    assert row["decoupled_median_rate"] > 0


def test_deterministic(cfg):
    g = SweepGrid(epsilon_values=(0.5,), ul_ratio_db=(-5.0, 0.0), thresholds=(1.0,))
    assert weight_sweep(cfg, g).rows == weight_sweep(cfg, g).rows
