import math

import numpy as np
import pytest

from hetcov import simulator as S
from hetcov.network_model import derive_constants, two_tier_config

SIDE = 3.6  # about 65 macro APs: small but above the window floor


@pytest.fixture(scope="module")
def cfg():
    return two_tier_config(6, -20, pcf=0.7)


@pytest.fixture(scope="module")
def dep(cfg):
    return S.generate_deployment(cfg, SIDE, seed=(7, 0))


def _full_log_loss(dep):
    return np.concatenate([dep.log_loss_block(i) for i in range(dep.n_blocks)])


def test_default_window(cfg):
    side = S.default_window(cfg)
    assert cfg.densities.min() * side**2 == pytest.approx(S.DEFAULT_EXPECTED_APS)


def test_window_too_small(cfg):
    with pytest.raises(S.WindowTooSmallError):
        S.generate_deployment(cfg, 1.0)
    with pytest.raises(S.WindowTooSmallError):
        S.run_simulation(cfg, 10, window_size=1.0)


def test_deployment_is_deterministic(cfg, dep):
    again = S.generate_deployment(cfg, SIDE, seed=(7, 0))
    assert np.array_equal(dep.ap_xy, again.ap_xy) and np.array_equal(dep.ue_xy, again.ue_xy)
    assert np.array_equal(dep.log_loss_block(2), again.log_loss_block(2))
    other = S.generate_deployment(cfg, SIDE, seed=(7, 1))
    assert not np.array_equal(dep.ap_xy[:5], other.ap_xy[:5])


def test_poisson_counts(cfg):
    deps = [S.generate_deployment(cfg, SIDE, seed=(1, d)) for d in range(30)]
    counts = np.array([d.tier_counts(2) for d in deps])
    lam = cfg.densities * SIDE**2
    # mean within 4 standard errors of the Poisson mean
    assert np.all(np.abs(counts.mean(axis=0) - lam) < 4 * np.sqrt(lam / 30))


def test_loss_matches_geometry(dep):
    b = 5
    col = dep.loss_column(b)
    d = S._torus_dist(dep.ue_xy, dep.ap_xy[b], dep.side)
    shadow = np.log(col) - dep.alpha * np.log(d)
    assert np.std(shadow) == pytest.approx(dep.sigma, rel=0.05)
    assert abs(np.mean(shadow)) < 0.1 * dep.sigma


def test_torus_distance_wraps():
    side = 10.0
    p, q = np.array([0.5, 0.5]), np.array([9.5, 9.5])
    assert S._torus_dist(p, q, side) == pytest.approx(math.sqrt(2))


def test_association_brute_force(cfg, dep):
    ul, dl = S.associate(dep, [cfg.ul_weights, cfg.dl_weights])
    ll = _full_log_loss(dep)
    for a, w in ((ul, cfg.ul_weights), (dl, cfg.dl_weights)):
        metric = np.log(w[dep.ap_tier])[:, None] - ll
        assert np.array_equal(a.serving, np.argmax(metric, axis=0))
        np.testing.assert_allclose(a.loss, np.exp(ll[a.serving, np.arange(dep.n_ue)]), rtol=1e-6)
    single = S.associate(dep, cfg.ul_weights)
    assert np.array_equal(single.serving, ul.serving)


def test_association_fractions():
    cfg = two_tier_config(6, -20)
    dc = derive_constants(cfg)
    fr = []
    for d in range(3):
        dep = S.generate_deployment(cfg, seed=(3, d))
        a = S.associate(dep, cfg.ul_weights)
        fr.append(np.mean(dep.ap_tier[a.serving] == 0))
    assert np.mean(fr) == pytest.approx(dc.assoc_prob_ul[0], abs=0.01)
    assert dc.assoc_prob_ul[0] == pytest.approx(0.698, abs=5e-4)


def test_bias_moves_users_to_macro(dep):
    eq = S.associate(dep, [1.0, 1.0])
    biased = S.associate(dep, [1.0, 0.01])
    assert np.mean(dep.ap_tier[biased.serving] == 1) < np.mean(dep.ap_tier[eq.serving] == 1)


def test_synthetic_users_fill_empty_cells(cfg):
    sparse = cfg.replace(user_density=20.0)
    dep = S.generate_deployment(sparse, SIDE, seed=(5, 0))
    ul = S.associate(dep, sparse.ul_weights)
    assert np.any(ul.loads(dep.n_ap) == 0)
    full = S.add_synthetic_users(dep, ul, sparse)
    cells = S._cell_index(full, ul)
    assert np.all(cells.count >= 1)
    logw = np.log(sparse.ul_weights)[dep.ap_tier]
    for m, b in enumerate(full.syn_ap):
        d2 = S._torus_d2(dep.ap_xy, full.syn_xy[m], dep.side)
        metric = logw - full.syn_log_shadow[m] - 0.5 * dep.alpha * np.log(d2)
        assert np.argmax(metric) == b


def test_schedule(cfg, dep):
    ul = S.associate(dep, cfg.ul_weights)
    full = S.add_synthetic_users(dep, ul, cfg)
    real = S.schedule_uplink(full, ul, typical_ue=3, seed=(1, 2))
    serv = np.concatenate([ul.serving, full.syn_ap])
    assert real.interferers[real.tagged_ap] == -1
    act = real.interferers >= 0
    assert act.sum() == dep.n_ap - 1
    # each scheduled UE belongs to the AP it is scheduled on
    assert np.array_equal(serv[real.interferers[act]], np.nonzero(act)[0])
    sinr = S.measure_ul_sinr(real, full, ul, cfg, seed=(4,))
    assert sinr > 0 and sinr == S.measure_ul_sinr(real, full, ul, cfg, seed=(4,))


def test_run_simulation_single_trial(cfg):
    res = S.run_simulation(cfg, 1, seed=3, window_size=SIDE)
    assert res.n == 1 and len(res.dl_rate) == 1


def test_run_simulation_deterministic(cfg):
    a = S.run_simulation(cfg, 3000, seed=11, window_size=SIDE, max_samples_per_deployment=1000)
    b = S.run_simulation(cfg, 3000, seed=11, window_size=SIDE, max_samples_per_deployment=1000)
    assert a.n_deployments == 3
    for k in ("ul_sinr", "dl_sinr", "ul_rate", "dl_rate", "ul_tier"):
        assert np.array_equal(getattr(a, k), getattr(b, k))
    c = S.run_simulation(cfg, 3000, seed=12, window_size=SIDE, max_samples_per_deployment=1000)
    assert not np.array_equal(a.ul_sinr, c.ul_sinr)


def test_estimators_agree(cfg):
    res = S.run_simulation(cfg, 8000, seed=2, window_size=SIDE, downlink=False)
    grid = np.array([-5.0, 0.0, 5.0, 10.0])
    emp = res.sinr_curve(grid)
    cond = res.sinr_curve(grid, estimator="conditional")
    assert np.all(np.abs(emp.values - cond.values) < 3 * emp.half_width)
    assert np.all(cond.half_width < emp.half_width)
    assert np.all(np.isnan(res.dl_rate))


def test_wilson_and_ccdf():
    assert S.wilson_half_width(0.5, 100) == pytest.approx(0.0961, abs=1e-4)
    assert np.allclose(S.empirical_ccdf([1, 2, 3, 4], [0, 2, 4]), [1.0, 0.5, 0.0])


def test_interferer_reference_integrates_to_thinned_mass(cfg):
    dc = derive_constants(cfg)
    x = np.geomspace(1e-9, 1e9, 20001)
    v = S.interferer_intensity_reference(x, 0, 1, cfg)
    # int delta a x**(delta-1) (1 - exp(-G x**delta)) over x <= X equals a (X**delta - (1 - e**(-G X**delta))/G)
    X = 10.0
    m = x <= X
    num = np.trapezoid(v[m], x[m])
    want = dc.a[1] * (X**dc.delta - (1 - math.exp(-dc.g_ul[0] * X**dc.delta)) / dc.g_ul[0])
    assert num == pytest.approx(want, rel=1e-3)


@pytest.mark.slow
def test_window_doubling_changes_little():
    cfg = two_tier_config(6, 0, 0, pcf=1.0, alpha=4.0)
    side = S.default_window(cfg)
    base = S.run_simulation(cfg, 50_000, seed=21, window_size=side, downlink=False)
    big = S.run_simulation(cfg, 50_000, seed=22, window_size=2 * side, downlink=False)
    a = base.sinr_curve([0.0], estimator="conditional").values[0]
    b = big.sinr_curve([0.0], estimator="conditional").values[0]
    print(f"window {side:.2f}: {a:.4f}, window {2 * side:.2f}: {b:.4f}")
    assert abs(a - b) < 0.005
