import math

import numpy as np
import pytest
from scipy import integrate

from hetcov.distributions import (
    interferer_pl_pdf,
    joint_expectation,
    joint_nodes,
    joint_pl_diagonal_pdf,
    joint_pl_pdf,
    joint_tier_masses,
    joint_wedge,
    kt_pmf,
    load_pmf,
    mean_load,
    serving_pl_ccdf,
    serving_pl_pdf,
)
from hetcov.network_model import derive_constants, two_tier_config
from hetcov.special_math import integrate_semi_infinite

from conftest import three_tier_config


@pytest.fixture
def decoupled():
    # UL min path loss, DL max received power
    return two_tier_config(6, 0, -20)


def _quad_loss(f, dc):
    # integrate over l via u = l**delta, which removes the l**(delta-1) singularity
    d = dc.delta
    g = lambda u: f(u ** (1 / d)) * u ** (1 / d - 1) / d
    return integrate.quad(g, 0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=200)[0]


@pytest.mark.parametrize("tier", [None, 0, 1])
def test_serving_pdf_normalised(two_tier, tier):
    dc = derive_constants(two_tier)
    assert _quad_loss(lambda l: serving_pl_pdf(l, dc, tier), dc) == pytest.approx(1.0, abs=1e-9)
    assert integrate_semi_infinite(lambda l: serving_pl_pdf(l, dc, tier)) == pytest.approx(1.0, abs=1e-7)


def test_serving_pdf_is_mixture_of_tiers(two_tier):
    dc = derive_constants(two_tier)
    l = np.geomspace(1e-4, 1e4, 40)
    mix = sum(dc.assoc_prob_ul[k] * serving_pl_pdf(l, dc, k) for k in range(2))
    np.testing.assert_allclose(serving_pl_pdf(l, dc), mix, rtol=1e-12)


def test_serving_ccdf_derivative(two_tier):
    dc = derive_constants(two_tier)
    l = np.geomspace(1e-2, 1e2, 25)
    h = 1e-6 * l
    num = -(serving_pl_ccdf(l + h, dc) - serving_pl_ccdf(l - h, dc)) / (2 * h)
    np.testing.assert_allclose(num, serving_pl_pdf(l, dc), rtol=1e-6)
    assert serving_pl_ccdf(0.0, dc) == pytest.approx(1.0)


def test_serving_pdf_rejects_negative(two_tier):
    with pytest.raises(ValueError):
        serving_pl_pdf(-1.0, derive_constants(two_tier))


@pytest.mark.parametrize("j, k", [(0, 0), (0, 1), (1, 0), (1, 1)])
@pytest.mark.parametrize("y", [1e-3, 0.1, 3.0, 50.0])
def test_interferer_pdf_normalised(two_tier, j, k, y):
    dc = derive_constants(two_tier)
    cap = dc.ul_weights[j] / dc.ul_weights[k] * y
    d = dc.delta
    g = lambda u: interferer_pl_pdf(u ** (1 / d), j, k, y, dc) * u ** (1 / d - 1) / d
    m = integrate.quad(g, 0, cap**d, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    assert m == pytest.approx(1.0, abs=1e-8)
    assert interferer_pl_pdf(cap * 1.0001, j, k, y, dc) == 0.0


def test_joint_masses(decoupled):
    dc = derive_constants(decoupled)
    m = joint_tier_masses(dc)
    assert m.sum() == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(m.sum(axis=1), dc.assoc_prob_ul, atol=1e-10)
    np.testing.assert_allclose(m.sum(axis=0), dc.assoc_prob_dl, atol=1e-10)
    # UL macro with DL small cell is impossible when mu'_2/mu'_1 < mu_2/mu_1
    assert joint_wedge(0, 1, dc) is None and m[0, 1] == 0.0
    assert m[1, 0] > 0


def test_joint_masses_three_tier():
    cfg = three_tier_config().with_weights(dl=[1.0, 0.03, 0.003])
    dc = derive_constants(cfg)
    m = joint_tier_masses(dc)
    assert m.sum() == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(m.sum(axis=1), dc.assoc_prob_ul, atol=1e-10)
    np.testing.assert_allclose(m.sum(axis=0), dc.assoc_prob_dl, atol=1e-10)


def test_coupled_association_is_diagonal(two_tier):
    dc = derive_constants(two_tier)
    m = joint_tier_masses(dc)
    np.testing.assert_allclose(np.diag(m), dc.assoc_prob_ul, atol=1e-12)
    assert m[0, 1] == m[1, 0] == 0.0


def test_joint_pdf_integrates_to_wedge_mass(decoupled):
    dc = derive_constants(decoupled)
    lo, hi = joint_wedge(1, 0, dc)
    d = dc.delta
    # substitute y = r x and u = x**delta
    f = lambda u, lr: (np.exp(lr) * u ** (2 / d - 1) / d
                       * joint_pl_pdf(u ** (1 / d), np.exp(lr) * u ** (1 / d), 1, 0, dc))
    val = integrate.dblquad(f, math.log(lo), math.log(hi), 0, 50, epsabs=1e-11, epsrel=1e-9)[0]
    assert val == pytest.approx(joint_tier_masses(dc)[1, 0], rel=1e-7)


def test_joint_diagonal_density_mass(decoupled):
    dc = derive_constants(decoupled)
    val = _quad_loss(lambda x: joint_pl_diagonal_pdf(x, 0, dc), dc)
    assert val == pytest.approx(joint_tier_masses(dc)[0, 0], rel=1e-9)


def test_joint_nodes_reproduce_marginals(decoupled):
    dc = derive_constants(decoupled)
    d = dc.delta
    # E[G_k L**delta] = 1 given the UL tier, likewise for DL
    ul = joint_expectation(lambda k, j, x, y: dc.g_ul[k] * x**d, dc)
    dl = joint_expectation(lambda k, j, x, y: dc.g_dl[j] * y**d, dc)
    assert ul == pytest.approx(1.0, abs=1e-9)
    assert dl == pytest.approx(1.0, abs=1e-9)
    total = sum(np.sum(nd.weight) for nd in joint_nodes(dc))
    assert total == pytest.approx(1.0, abs=1e-10)


def test_joint_expectation_of_ul_function(decoupled):
    dc = derive_constants(decoupled)
    f = lambda l: np.exp(-l)
    want = _quad_loss(lambda l: serving_pl_pdf(l, dc) * f(l), dc)
    got = joint_expectation(lambda k, j, x, y: f(x), dc)
    assert got == pytest.approx(want, rel=1e-9)


@pytest.mark.parametrize("c", [0.0, 0.3, 8.0, 120.0])
def test_load_pmf(two_tier, c):
    n = np.arange(1, 20000)
    p = kt_pmf(c, n)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    # number of other users is negative binomial with mean c * 4.5 / 3.5
    assert np.sum(n * p) == pytest.approx(1 + c * 4.5 / 3.5, rel=1e-9)


@pytest.mark.parametrize("k", [0, 1])
def test_truncated_load_pmf(two_tier, k):
    pmf = load_pmf(two_tier, k)
    assert 1 - 1e-6 <= pmf.pmf.sum() <= 1.0 + 1e-12
    assert pmf.support[0] == 1


def test_mean_load(two_tier):
    dc = derive_constants(two_tier)
    assert mean_load(two_tier, 0) == pytest.approx(1 + 1.28 * 200 * dc.assoc_prob_ul[0] / 5)
    assert mean_load(two_tier.replace(user_density=0.0), 1) == 1.0
    assert load_pmf(two_tier.replace(user_density=0.0), 0).pmf.tolist() == [1.0]
