"""Uplink interference, SIR/SINR coverage, bounds and rate coverage.

With power control ``P = L**eps`` each interfering UE of tier j contributes
through its own serving loss L, whose conditional law is a Weibull in
``V = G_j L**delta ~ Exp(1)``.  Writing ``beta = (delta - 1 + eps)/delta``
and ``gamma = (1 - eps)/delta``, every tier-j inner expectation is a
rescaling of one universal kernel::

    E[L**(delta-1+eps) C(z / L**(1-eps)) | j] = G_j**-beta * H(z G_j**gamma),
    H(zeta) = E_V[V**beta C(zeta V**-gamma)].

H depends only on ``(delta, eps)`` so it is tabulated once on a log grid
and interpolated with a cubic spline in log-log coordinates.  At
``eps = 1`` the kernel reduces to C itself.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import CoverageCurve
from .distributions import load_pmf, mean_load
from .network_model import DerivedConstants, NetworkConfig, derive_constants
from .special_math import c_delta, exp_sinh_rule

__all__ = [
    "KernelTable",
    "ul_kernel",
    "laplace_ul_interference",
    "conditional_coverage",
    "sinr_coverage",
    "sir_coverage",
    "sir_coverage_eps0",
    "sir_coverage_closed_eps1",
    "sir_coverage_upper",
    "sir_coverage_lower",
    "lower_bound_factor",
    "downlink_sir_reference",
    "sir_coverage_a1",
    "sir_coverage_a2",
    "rate_coverage",
    "coverage_curve",
    "rate_curve",
]

Method = Literal["table", "direct"]

_LEVEL = 5
_TABLE_RANGE = (-10.0, 10.0)  # log10 of the tabulated argument
_TABLE_PER_DECADE = 48


@lru_cache(maxsize=32)
def constants(cfg: NetworkConfig) -> DerivedConstants:
    """Memoised `derive_constants` (configs are frozen and hashable)."""
    return derive_constants(cfg)


class KernelTable:
    """Log-log cubic spline of a positive function on ``[1e-10, 1e10]``.

    Beyond the table ends the kernels behave like power laws, so the
    spline is continued linearly in log-log coordinates with the end
    slopes.  ``method="direct"`` bypasses the table entirely.
    """

    def __init__(self, direct: Callable[[np.ndarray], np.ndarray], chunk: int = 256):
        self.direct = direct
        lo, hi = _TABLE_RANGE
        n = int((hi - lo) * _TABLE_PER_DECADE) + 1
        self.log_lo, self.log_hi = lo * math.log(10), hi * math.log(10)
        lz = np.linspace(self.log_lo, self.log_hi, n)
        vals = np.concatenate([direct(np.exp(lz[i:i + chunk])) for i in range(0, n, chunk)])
        self.spline = CubicSpline(lz, np.log(vals))
        d1 = self.spline.derivative()
        self._ends = (float(self.spline(self.log_lo)), float(d1(self.log_lo)),
                      float(self.spline(self.log_hi)), float(d1(self.log_hi)))

    def __call__(self, z, method: Method = "table"):
        z = np.asarray(z, dtype=float)
        if method == "direct":
            return self.direct(z.ravel()).reshape(z.shape)
        with np.errstate(divide="ignore"):
            lz = np.log(z)
        f_lo, s_lo, f_hi, s_hi = self._ends
        inner = self.spline(np.clip(lz, self.log_lo, self.log_hi))
        out = np.where(lz < self.log_lo, f_lo + s_lo * (lz - self.log_lo), inner)
        out = np.where(lz > self.log_hi, f_hi + s_hi * (lz - self.log_hi), out)
        return np.exp(out)


def _exponents(delta: float, eps: float):
    return (delta - 1.0 + eps) / delta, (1.0 - eps) / delta


def _kernel_direct(delta: float, eps: float, level: int = 7):
    v, w = exp_sinh_rule(level)
    beta, gam = _exponents(delta, eps)
    vb = v**beta * np.exp(-v) * w
    vg = v**-gam

    def h(z, chunk=512):
        z = np.asarray(z, dtype=float).ravel()
        return np.concatenate([c_delta(z[i:i + chunk, None] * vg, delta) @ vb
                               for i in range(0, max(z.size, 1), chunk)])[: z.size]

    return h


@lru_cache(maxsize=32)
def _kernel_table(delta: float, eps: float) -> KernelTable:
    return KernelTable(_kernel_direct(delta, eps))


def ul_kernel(z, delta: float, eps: float, method: Method = "table"):
    """Universal inner kernel ``H(z) = E_V[V**beta C(z V**-gamma)]``."""
    if eps == 1.0:
        return c_delta(np.asarray(z, dtype=float), delta)
    return _kernel_table(delta, eps)(z, method)


def _ul_exponent(s, k: int, cfg: NetworkConfig, method: Method = "table"):
    # sum_j delta/(1-delta) s nu_j**(1-delta) a_j G_j**-beta H(s nu_j G_j**gamma)
    dc = constants(cfg)
    d, eps = dc.delta, cfg.pcf
    beta, gam = _exponents(d, eps)
    s = np.asarray(s, dtype=float)
    nu = dc.nu_ul(k)
    out = np.zeros(s.shape)
    zero = s == 0
    sp = np.where(zero, 1.0, s)  # the exponent vanishes at s = 0 even where H(0) diverges
    for j in range(dc.n_tiers):
        if dc.a[j] == 0:
            continue
        hz = ul_kernel(sp * nu[j] * dc.g_ul[j] ** gam, d, eps, method)
        out += nu[j] ** (1.0 - d) * dc.a[j] * dc.g_ul[j] ** -beta * hz
    return np.where(zero, 0.0, d / (1.0 - d) * sp * out)


def laplace_ul_interference(s, k: int, cfg: NetworkConfig, method: Method = "table"):
    """Laplace transform of the interference at a tier-`k` tagged AP.

    Parameters
    ----------
    s : array_like
        Non-negative transform variable(s), in units of the normalised
        (received power / P_u) interference.
    k : int
        Tier of the tagged AP.
    cfg : NetworkConfig
    method : {"table", "direct"}
        Spline-tabulated or directly integrated inner kernel.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be non-negative")
    return np.exp(-_ul_exponent(s, k, cfg, method))


def _tau_array(tau):
    t = np.asarray(tau, dtype=float)
    if np.any(t <= 0):
        raise ValueError("thresholds must be positive")
    return t


def conditional_coverage(tau, k: int, cfg: NetworkConfig, snr: float | None = None,
                         method: Method = "table", level: int = _LEVEL):
    """P(SINR > tau | serving tier k); noise-free when ``snr`` is None."""
    t = _tau_array(tau)
    dc = constants(cfg)
    gam = (1.0 - cfg.pcf) / dc.delta
    v, w = exp_sinh_rule(level)
    # l**(1-eps) with G_k l**delta = v
    lp = (v / dc.g_ul[k]) ** gam
    s = t[..., None] * lp
    expo = _ul_exponent(s, k, cfg, method)
    if snr is not None and np.isfinite(snr):
        expo = expo + s / snr
    return np.sum(np.exp(-expo - v) * w, axis=-1)


def sinr_coverage(tau, cfg: NetworkConfig, snr: float | None = None, method: Method = "table"):
    """Uplink SINR coverage ``P(SINR > tau)``; `snr` defaults to ``cfg.snr``."""
    snr = cfg.snr if snr is None else snr
    dc = constants(cfg)
    t = _tau_array(tau)
    return sum(dc.assoc_prob_ul[k] * conditional_coverage(t, k, cfg, snr, method)
               for k in range(dc.n_tiers) if dc.assoc_prob_ul[k] > 0)


def sir_coverage(tau, cfg: NetworkConfig, method: Method = "table"):
    """Noise-free uplink coverage ``P(SIR > tau)``."""
    return sinr_coverage(tau, cfg, snr=math.inf, method=method)


def sir_coverage_eps0(tau, cfg: NetworkConfig, level: int = 6):
    """Coverage without power control (``pcf == 0``), via its own integral.

    Without power control the interferer's own loss only enters through
    the thinning, and the Laplace exponent at serving loss l is
    ``a int_0^inf (1 - exp(-G_k u)) / (1 + u**(1/delta) / (tau l)) du``
    with ``a = sum_j a_j``.  The unthinned part is integrated in closed
    form, which leaves an exponentially weighted remainder.
    """
    if cfg.pcf != 0.0:
        raise ValueError("sir_coverage_eps0 requires pcf == 0")
    t = _tau_array(tau)
    dc = constants(cfg)
    d = dc.delta
    a_tot = float(np.sum(dc.a))
    kd = math.pi * d / math.sin(math.pi * d)
    v, w = exp_sinh_rule(level)
    y, wy = v, w * np.exp(-v)
    # with G_k l**delta = v every tier reduces to the same function of v
    ratio = (y[None, :] / v[:, None]) ** (1.0 / d)
    tt = t[..., None, None]
    rem = np.sum(wy / (1.0 + ratio / tt), axis=-1)
    out = np.zeros(t.shape)
    for k in range(dc.n_tiers):
        if dc.a[k] == 0:
            continue
        expo = a_tot / dc.g_ul[k] * (t[..., None] ** d * v * kd - rem)
        out = out + dc.assoc_prob_ul[k] * np.sum(np.exp(-expo - v) * w, axis=-1)
    return out


def sir_coverage_closed_eps1(tau, cfg: NetworkConfig):
    """Finite-sum coverage under full channel inversion (``pcf == 1``)."""
    if cfg.pcf != 1.0:
        raise ValueError("sir_coverage_closed_eps1 requires pcf == 1")
    t = _tau_array(tau)
    dc = constants(cfg)
    d = dc.delta
    out = np.zeros(t.shape)
    for k in range(dc.n_tiers):
        if dc.a[k] == 0:
            continue
        nu = dc.nu_ul(k)
        expo = np.zeros(t.shape)
        for j in range(dc.n_tiers):
            expo += nu[j] ** (1 - d) * dc.a[j] / dc.g_ul[j] * c_delta(t * nu[j], d)
        out = out + dc.a[k] / dc.g_ul[k] * np.exp(-d / (1 - d) * t * expo)
    return out


def sir_coverage_upper(tau, cfg: NetworkConfig, level: int = _LEVEL):
    """Jensen upper bound: the interferer loss is replaced by its mean.

    Uses ``E[L**(1-eps) | j] = Gamma(2 + gamma) / G_j**gamma``.
    """
    t = _tau_array(tau)
    dc = constants(cfg)
    d = dc.delta
    gam = (1.0 - cfg.pcf) / d
    m = math.gamma(2.0 + gam)
    v, w = exp_sinh_rule(level)
    out = np.zeros(t.shape)
    for k in range(dc.n_tiers):
        if dc.a[k] == 0:
            continue
        s = t[..., None] * (v / dc.g_ul[k]) ** gam
        nu = dc.nu_ul(k)
        expo = np.zeros(s.shape)
        for j in range(dc.n_tiers):
            if dc.a[j] == 0:
                continue
            gj = dc.g_ul[j] ** gam
            expo += dc.a[j] * nu[j] ** (1 - d) * gj / dc.g_ul[j] / m * c_delta(s * nu[j] * gj / m, d)
        expo *= d / (1 - d) * s
        out = out + dc.assoc_prob_ul[k] * np.sum(np.exp(-expo - v) * w, axis=-1)
    return out


def lower_bound_factor(delta: float, eps: float) -> float:
    """``pi**2 delta eps (1-eps) / (sin(pi delta) sin(pi eps))``.

    Written as ``pi delta / sin(pi delta) * Gamma(1+eps) Gamma(2-eps)``,
    which is finite at both ``eps = 0`` and ``eps = 1``.
    """
    return math.pi * delta / math.sin(math.pi * delta) * math.gamma(1 + eps) * math.gamma(2 - eps)


def sir_coverage_lower(tau, cfg: NetworkConfig):
    """Closed-form lower bound that ignores the thinning of interferers."""
    t = _tau_array(tau)
    dc = constants(cfg)
    eps = cfg.pcf
    s1 = float(np.sum(dc.a / dc.g_ul ** (2 - eps)))
    s2 = float(np.sum(dc.a / dc.g_ul**eps))
    return np.exp(-(t**dc.delta) * lower_bound_factor(dc.delta, eps) * s1 * s2)


def downlink_sir_reference(tau, delta: float):
    """Single-tier downlink SIR coverage ``1 / (1 + delta tau C(tau) / (1-delta))``."""
    t = _tau_array(tau)
    return 1.0 / (1.0 + delta * t / (1.0 - delta) * c_delta(t, delta))


# --------------------------------------------------------------------------
# simplified interference models


def _a2_exponent(s, cfg: NetworkConfig):
    dc = constants(cfg)
    d, eps = dc.delta, cfg.pcf
    k = math.pi * d / math.sin(math.pi * d) * math.gamma(1 + eps)
    return np.asarray(s) ** d * k * float(np.sum(dc.a / dc.g_ul**eps))


def _thinning_direct(delta: float, eps: float, level: int = 5):
    # J(psi) = E_{U,V}[psi / (psi + U**(1/delta) V**(-eps/delta))], U, V ~ Exp(1)
    x, w = exp_sinh_rule(level)
    we = np.exp(-x) * w
    q = (x[:, None] ** (1.0 / delta) * x[None, :] ** (-eps / delta)).ravel()
    ww = (we[:, None] * we[None, :]).ravel()
    keep = ww > 1e-300
    q, ww = q[keep], ww[keep]

    def j(psi):
        psi = np.asarray(psi, dtype=float)
        return (psi[:, None] / (psi[:, None] + q)) @ ww

    return j


@lru_cache(maxsize=32)
def _thinning_table(delta: float, eps: float) -> KernelTable:
    return KernelTable(_thinning_direct(delta, eps), chunk=16)


def _a1_exponent(s, k: int, cfg: NetworkConfig):
    # untruncated interferer power law, thinned interferer intensity:
    # A2 exponent minus sum_j (a_j/G_k) J(s G_k**(1/delta) / G_j**(eps/delta))
    dc = constants(cfg)
    d, eps = dc.delta, cfg.pcf
    s = np.asarray(s, dtype=float)
    tab = _thinning_table(d, eps)
    sub = np.zeros(s.shape)
    for j in range(dc.n_tiers):
        if dc.a[j] == 0:
            continue
        sub += dc.a[j] / dc.g_ul[k] * tab(s * dc.g_ul[k] ** (1 / d) / dc.g_ul[j] ** (eps / d))
    return _a2_exponent(s, cfg) - sub


def _simplified_coverage(tau, cfg: NetworkConfig, exponent, level: int = _LEVEL):
    t = _tau_array(tau)
    dc = constants(cfg)
    gam = (1.0 - cfg.pcf) / dc.delta
    v, w = exp_sinh_rule(level)
    out = np.zeros(t.shape)
    for k in range(dc.n_tiers):
        if dc.a[k] == 0:
            continue
        s = t[..., None] * (v / dc.g_ul[k]) ** gam
        out = out + dc.assoc_prob_ul[k] * np.sum(np.exp(-exponent(s, k) - v) * w, axis=-1)
    return out


def sir_coverage_a1(tau, cfg: NetworkConfig):
    """Coverage when interferer powers ignore their conditioning on the tagged AP."""
    return _simplified_coverage(tau, cfg, lambda s, k: _a1_exponent(s, k, cfg))


def sir_coverage_a2(tau, cfg: NetworkConfig):
    """Coverage when interferers of each tier form an unthinned PPP."""
    return _simplified_coverage(tau, cfg, lambda s, k: _a2_exponent(s, cfg))


# --------------------------------------------------------------------------
# rate


def _spectral_threshold(rho_hat, n):
    # 2**(rho_hat n) - 1, saturated to avoid overflow
    with np.errstate(over="ignore"):
        return np.minimum(np.expm1(np.asarray(rho_hat) * n * math.log(2.0)), 1e300)


def rate_coverage(rho, cfg: NetworkConfig, mode: Literal["full_pmf", "mean_load"] = "mean_load",
                  method: Method = "table"):
    """Uplink rate coverage ``P(rate > rho)`` (noise-free, load-averaged).

    ``rate = eta W / N log2(1 + SIR)``; `mode` selects the full load PMF or
    the mean-load approximation.
    """
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0):
        raise ValueError("rates must be positive")
    dc = constants(cfg)
    rho_hat = r / (cfg.uplink_fraction * cfg.bandwidth_hz)
    out = np.zeros(r.shape)
    for k in range(dc.n_tiers):
        if dc.assoc_prob_ul[k] == 0:
            continue
        if mode == "mean_load":
            tau = _spectral_threshold(rho_hat, mean_load(cfg, k, "ul"))
            out = out + dc.assoc_prob_ul[k] * conditional_coverage(tau, k, cfg, method=method)
        elif mode == "full_pmf":
            pmf = load_pmf(cfg, k, "ul")
            tau = _spectral_threshold(rho_hat[..., None], pmf.support)
            pk = conditional_coverage(tau, k, cfg, method=method)
            out = out + dc.assoc_prob_ul[k] * np.sum(pk * pmf.pmf, axis=-1)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return out


def coverage_curve(thresholds_db, cfg: NetworkConfig, kind: str = "exact") -> CoverageCurve:
    """Evaluate one analytic SIR curve on a dB grid.

    `kind` is one of ``exact``, ``sinr``, ``upper_bound``, ``lower_bound``,
    ``a1``, ``a2``, ``closed_form``.
    """
    tdb = np.asarray(thresholds_db, dtype=float)
    if tdb.size == 0:
        raise ValueError("empty grid")
    t = 10.0 ** (tdb / 10.0)
    fns = {
        "exact": sir_coverage,
        "sinr": sinr_coverage,
        "upper_bound": sir_coverage_upper,
        "lower_bound": sir_coverage_lower,
        "a1": sir_coverage_a1,
        "a2": sir_coverage_a2,
        "closed_form": sir_coverage_closed_eps1,
    }
    if kind not in fns:
        raise ValueError(f"unknown curve kind {kind!r}")
    fn = fns[kind]
    vals = np.minimum.accumulate(np.clip(fn(t, cfg), 0.0, 1.0))
    prov = "exact" if kind == "sinr" else kind
    return CoverageCurve(tdb, vals, prov, fingerprint=cfg.fingerprint())


def rate_curve(rates_bps, cfg: NetworkConfig, mode: str = "mean_load") -> CoverageCurve:
    r = np.asarray(rates_bps, dtype=float)
    if r.size == 0:
        raise ValueError("empty grid")
    vals = np.minimum.accumulate(np.clip(rate_coverage(r, cfg, mode), 0.0, 1.0))
    return CoverageCurve(r, vals, "exact", axis="rate_bps", fingerprint=cfg.fingerprint())
