"""Downlink interference and joint uplink-downlink coverage.

UL and DL association use separate weights (``mu`` and ``mu'``) on the
same deployment and shadowing.  The UL and DL interference fields are
treated as independent given the two serving path losses, so the joint
coverage is an expectation of a product of Laplace transforms against
the joint law of (UL loss, DL loss, UL tier, DL tier).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .distributions import joint_nodes, mean_load
from .network_model import NetworkConfig
from .special_math import c_delta, exp_sinh_rule
from .uplink import _spectral_threshold, _ul_exponent, constants

__all__ = [
    "JointCoveragePoint",
    "laplace_dl_interference",
    "dl_sir_coverage",
    "dl_rate_coverage",
    "joint_sir_coverage",
    "joint_rate_coverage",
    "coupled_joint_sir_coverage",
    "joint_surface",
]

_LEVEL = 5
_NR = 32


@dataclass(frozen=True)
class JointCoveragePoint:
    rho_u: float
    rho_d: float
    value: float

    def __post_init__(self):
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError("joint coverage must lie in [0, 1]")


def _dl_exponent(s, j: int, l, cfg: NetworkConfig):
    # delta/(1-delta) s l**(delta-1) sum_i a_i P_i nu'_i**(delta-1) C(s P_i / (l nu'_i))
    dc = constants(cfg)
    d = dc.delta
    s = np.asarray(s, dtype=float)
    l = np.asarray(l, dtype=float)
    nup = dc.nu_dl(j)
    p = cfg.tx_powers
    out = np.zeros(np.broadcast(s, l).shape)
    for i in range(dc.n_tiers):
        if dc.a[i] == 0:
            continue
        out = out + dc.a[i] * p[i] * nup[i] ** (d - 1) * c_delta(s * p[i] / (l * nup[i]), d)
    return d / (1 - d) * s * l ** (d - 1) * out


def laplace_dl_interference(s, j: int, l, cfg: NetworkConfig):
    """Laplace transform of DL interference at a user served by tier `j`
    with DL path loss `l`.

    Interferers are all APs whose weighted received power does not beat the
    serving one, each transmitting at its tier power.  For the SIR
    threshold ``tau`` the relevant argument is ``s = tau * l / P_j``.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be non-negative")
    if np.any(np.asarray(l) <= 0):
        raise ValueError("path loss must be positive")
    return np.exp(-_dl_exponent(s, j, l, cfg))


def dl_sir_coverage(tau, cfg: NetworkConfig, level: int = _LEVEL):
    """Marginal DL SIR coverage under the DL weights."""
    t = np.asarray(tau, dtype=float)
    dc = constants(cfg)
    v, w = exp_sinh_rule(level)
    p = cfg.tx_powers
    out = np.zeros(t.shape)
    for j in range(dc.n_tiers):
        if dc.assoc_prob_dl[j] == 0:
            continue
        l = (v / dc.g_dl[j]) ** (1 / dc.delta)
        e = _dl_exponent(t[..., None] * l / p[j], j, l, cfg)
        out = out + dc.assoc_prob_dl[j] * np.sum(np.exp(-e - v) * w, axis=-1)
    return out


def dl_rate_coverage(rho, cfg: NetworkConfig):
    """Mean-load DL rate coverage with bandwidth share ``1 - eta``."""
    r = np.asarray(rho, dtype=float)
    dc = constants(cfg)
    rho_hat = r / ((1 - cfg.uplink_fraction) * cfg.bandwidth_hz)
    v, w = exp_sinh_rule(_LEVEL)
    p = cfg.tx_powers
    out = np.zeros(r.shape)
    for j in range(dc.n_tiers):
        if dc.assoc_prob_dl[j] == 0:
            continue
        tau = _spectral_threshold(rho_hat, mean_load(cfg, j, "dl"))
        l = (v / dc.g_dl[j]) ** (1 / dc.delta)
        e = _dl_exponent(tau[..., None] * l / p[j], j, l, cfg)
        out = out + dc.assoc_prob_dl[j] * np.sum(np.exp(-e - v) * w, axis=-1)
    return out


@lru_cache(maxsize=32)
def _nodes(cfg: NetworkConfig, level: int, n_r: int):
    return joint_nodes(constants(cfg), level, n_r)


def _joint(tau_u_of, tau_d_of, cfg: NetworkConfig, level: int, n_r: int):
    """Sum over tier pairs; ``tau_*_of(k)`` give (broadcastable) thresholds."""
    eps = cfg.pcf
    p = cfg.tx_powers
    total = 0.0
    for nd in _nodes(cfg, level, n_r):
        tu = np.asarray(tau_u_of(nd.k), dtype=float)[..., None]
        td = np.asarray(tau_d_of(nd.j), dtype=float)[..., None]
        e = _ul_exponent(tu * nd.x ** (1 - eps), nd.k, cfg)
        e = e + _dl_exponent(td * nd.y / p[nd.j], nd.j, nd.y, cfg)
        total = total + np.sum(nd.weight * np.exp(-e), axis=-1)
    return total


def joint_sir_coverage(tau_u, tau_d, cfg: NetworkConfig, level: int = _LEVEL, n_r: int = _NR):
    """``P(SIR_u > tau_u, SIR_d > tau_d)`` under decoupled association.

    `tau_u` and `tau_d` broadcast against each other; zero thresholds are
    allowed and make the corresponding link event certain.
    """
    tu, td = np.broadcast_arrays(np.asarray(tau_u, float), np.asarray(tau_d, float))
    if np.any(tu < 0) or np.any(td < 0):
        raise ValueError("thresholds must be non-negative")
    out = _joint(lambda k: tu, lambda j: td, cfg, level, n_r)
    return np.clip(out, 0.0, 1.0)


def joint_rate_coverage(rho_u, rho_d, cfg: NetworkConfig, level: int = _LEVEL, n_r: int = _NR):
    """``P(R_u > rho_u, R_d > rho_d)`` with mean UL and DL loads.

    The UL load is that of the UL serving tier under ``mu``; the DL load
    that of the DL serving tier under ``mu'``.
    """
    ru, rd = np.broadcast_arrays(np.asarray(rho_u, float), np.asarray(rho_d, float))
    if np.any(ru < 0) or np.any(rd < 0):
        raise ValueError("rates must be non-negative")
    eta, bw = cfg.uplink_fraction, cfg.bandwidth_hz
    hu = ru / (bw * eta)
    hd = rd / (bw * (1 - eta))
    nk = [mean_load(cfg, k, "ul") for k in range(cfg.n_tiers)]
    nj = [mean_load(cfg, j, "dl") for j in range(cfg.n_tiers)]
    out = _joint(lambda k: _spectral_threshold(hu, nk[k]), lambda j: _spectral_threshold(hd, nj[j]),
                 cfg, level, n_r)
    return np.clip(out, 0.0, 1.0)


def coupled_joint_sir_coverage(tau_u, tau_d, cfg: NetworkConfig, level: int = _LEVEL):
    """Joint SIR coverage when UL and DL share one weight vector.

    Written directly as a single Exp(1) expectation per tier, independent
    of the joint-law quadrature, for cross-checking.
    """
    if not np.allclose(cfg.ul_weights, cfg.dl_weights, rtol=1e-12):
        raise ValueError("coupled association requires equal UL and DL weights")
    dc = constants(cfg)
    d, eps = dc.delta, cfg.pcf
    tu, td = np.broadcast_arrays(np.asarray(tau_u, float), np.asarray(tau_d, float))
    v, w = exp_sinh_rule(level)
    p = cfg.tx_powers
    out = np.zeros(tu.shape)
    for k in range(dc.n_tiers):
        if dc.a[k] == 0:
            continue
        l = (v / dc.g_ul[k]) ** (1 / d)
        e = _ul_exponent(tu[..., None] * l ** (1 - eps), k, cfg)
        e = e + _dl_exponent(td[..., None] * l / p[k], k, l, cfg)
        out = out + dc.assoc_prob_ul[k] * np.sum(np.exp(-e - v) * w, axis=-1)
    return out


def joint_surface(rho_u, rho_d, cfg: NetworkConfig) -> list[JointCoveragePoint]:
    """Joint rate coverage on the product grid ``rho_u x rho_d``."""
    ru, rd = np.meshgrid(np.asarray(rho_u, float), np.asarray(rho_d, float), indexing="ij")
    vals = joint_rate_coverage(ru, rd, cfg)
    return [JointCoveragePoint(float(a), float(b), float(c)) for a, b, c in zip(ru.ravel(), rd.ravel(), vals.ravel())]
