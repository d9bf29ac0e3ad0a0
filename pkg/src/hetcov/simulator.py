"""Monte Carlo simulation of the multi-tier uplink/downlink model.

Deployments live on a square torus.  Shadowing between UE m and AP b is
a deterministic function of ``(seed, b, m)``: the whole column of AP b is
regenerated from its own counter-keyed stream whenever it is needed, so
the ``UE x AP`` table never has to be stored.

Every real UE of a deployment is used as a typical-user sample.  For each
sample an independent uplink schedule is drawn (one uniformly chosen UE
per other AP), together with fresh fading on every link, which makes the
per-sample statistics unbiased Palm averages over the UE process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
from scipy.special import ndtr

from .curves import CoverageCurve
from .network_model import NetworkConfig, derive_constants

__all__ = [
    "WindowTooSmallError",
    "SamplingError",
    "Deployment",
    "Association",
    "ScheduledRealization",
    "SimulationResult",
    "default_window",
    "generate_deployment",
    "associate",
    "add_synthetic_users",
    "schedule_uplink",
    "measure_ul_sinr",
    "measure_joint",
    "run_simulation",
    "ablation_baselines",
    "wilson_half_width",
    "empirical_ccdf",
    "interferer_intensity_reference",
]

MIN_EXPECTED_APS = 50
DEFAULT_EXPECTED_APS = 500
# 1e5 samples then span 20 independent deployments
DEFAULT_SAMPLES_PER_DEPLOYMENT = 5000
_MAX_ATTEMPTS = 100_000
_BLOCK = 64
_BATCH = 512
_FILTER_APS = 64
_REJECT_EXP = 14.0
_REJECT_SIGMAS = 5.0

# stream tags for counter-keyed generators
_T_SHADOW, _T_SYN_POS, _T_SYN_SHADOW, _T_DL_FADE, _T_UL = 1, 2, 3, 4, 5


class WindowTooSmallError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng([int(k) for k in key])


def default_window(cfg: NetworkConfig, expected_aps: float = DEFAULT_EXPECTED_APS) -> float:
    """Side length (distance units) holding `expected_aps` of the sparsest tier."""
    lam = cfg.densities[cfg.densities > 0].min() * cfg.area_scale
    return math.sqrt(expected_aps / lam)


def _check_window(cfg: NetworkConfig, side: float) -> None:
    lam = cfg.densities[cfg.densities > 0].min() * cfg.area_scale
    if lam * side**2 < MIN_EXPECTED_APS:
        raise WindowTooSmallError(
            f"window side {side:g} holds {lam * side**2:.1f} expected APs of the sparsest tier "
            f"(need >= {MIN_EXPECTED_APS})"
        )


def _torus_d2(p: np.ndarray, q: np.ndarray, side: float) -> np.ndarray:
    dx = np.abs(p[..., 0] - q[..., 0])
    dy = np.abs(p[..., 1] - q[..., 1])
    dx = np.minimum(dx, side - dx)
    dy = np.minimum(dy, side - dy)
    return dx * dx + dy * dy


def _torus_dist(p: np.ndarray, q: np.ndarray, side: float) -> np.ndarray:
    return np.sqrt(_torus_d2(p, q, side))


@dataclass(frozen=True)
class Deployment:
    """One realisation of APs and UEs on a torus of side `side`."""

    side: float
    ap_xy: np.ndarray
    ap_tier: np.ndarray
    ue_xy: np.ndarray
    alpha: float
    sigma: float  # natural-log shadowing deviation
    seed: tuple
    syn_xy: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    syn_ap: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    syn_log_shadow: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def n_ap(self) -> int:
        return len(self.ap_tier)

    @property
    def n_ue(self) -> int:
        return len(self.ue_xy)

    @cached_property
    def ue_xy32(self) -> np.ndarray:
        return self.ue_xy.astype(np.float32)

    def tier_counts(self, n_tiers: int) -> np.ndarray:
        return np.bincount(self.ap_tier, minlength=n_tiers)

    def block_range(self, i: int) -> range:
        return range(i * _BLOCK, min((i + 1) * _BLOCK, self.n_ap))

    @property
    def n_blocks(self) -> int:
        return -(-self.n_ap // _BLOCK)

    def log_loss_block(self, i: int) -> np.ndarray:
        """``ln L`` from every real UE to the APs of block `i`, shape (APs, UEs).

        Shadowing of block i comes from its own keyed stream, so any block
        can be regenerated independently and UL/DL see the same values.
        """
        r = self.block_range(i)
        sh = _rng(*self.seed, _T_SHADOW, i).standard_normal((len(r), self.n_ue), dtype=np.float32)
        d2 = _torus_d2(self.ue_xy32[None], self.ap_xy[r.start:r.stop, None, :].astype(np.float32),
                       np.float32(self.side))
        with np.errstate(divide="ignore"):
            out = np.log(d2)
        out *= np.float32(0.5 * self.alpha)
        out += np.float32(self.sigma) * sh
        return out

    def syn_log_loss(self, b: int) -> np.ndarray:
        d2 = _torus_d2(self.syn_xy, self.ap_xy[b], self.side)
        return self.syn_log_shadow[:, b] + 0.5 * self.alpha * np.log(d2)

    def loss_column(self, b: int, with_synthetic: bool = False, block: np.ndarray | None = None) -> np.ndarray:
        """Path loss ``S d**alpha`` from every UE to AP `b`."""
        if block is None:
            block = self.log_loss_block(b // _BLOCK)
        col = block[b % _BLOCK].astype(float)
        if with_synthetic and len(self.syn_ap):
            col = np.concatenate([col, self.syn_log_loss(b)])
        return np.exp(col)


def generate_deployment(cfg: NetworkConfig, window_size: float | None = None, seed=0) -> Deployment:
    """Poisson APs per tier and Poisson UEs, uniform on the torus."""
    side = default_window(cfg) if window_size is None else float(window_size)
    _check_window(cfg, side)
    key = tuple(np.atleast_1d(seed).astype(np.int64).tolist())
    rng = _rng(*key, 0)
    area = side**2
    lam = cfg.densities * cfg.area_scale
    counts = rng.poisson(lam * area)
    tiers = np.repeat(np.arange(cfg.n_tiers), counts)
    ap_xy = rng.uniform(0, side, size=(len(tiers), 2))
    n_ue = rng.poisson(cfg.user_density * cfg.area_scale * area)
    ue_xy = rng.uniform(0, side, size=(n_ue, 2))
    sigma = cfg.shadow_sigma_db * math.log(10) / 10
    return Deployment(side, ap_xy, tiers, ue_xy, cfg.alpha, sigma, key)


@dataclass(frozen=True)
class Association:
    """Serving AP and serving path loss of each real UE for one weight vector."""

    serving: np.ndarray
    loss: np.ndarray
    weights: np.ndarray

    def loads(self, n_ap: int) -> np.ndarray:
        return np.bincount(self.serving, minlength=n_ap)


def associate(dep: Deployment, weights: Sequence[float] | Sequence[Sequence[float]]):
    """Weighted path-loss association ``argmax_b mu_tier(b) / L_b``.

    Accepts one weight vector (returns an `Association`) or a list of them
    (returns a list, computed in a single pass over the APs).  Ties go to
    the lowest AP index.
    """
    w = np.asarray(weights, dtype=float)
    single = w.ndim == 1
    w = np.atleast_2d(w)
    if dep.n_ap == 0:
        raise ValueError("deployment has no APs")
    n = dep.n_ue
    cols = np.arange(n)
    best = np.full((len(w), n), -np.inf)
    serv = np.zeros((len(w), n), dtype=np.int64)
    loss = np.zeros((len(w), n))
    for i in range(dep.n_blocks):
        r = dep.block_range(i)
        ll = dep.log_loss_block(i)
        for q in range(len(w)):
            metric = np.log(w[q, dep.ap_tier[r.start:r.stop]])[:, None] - ll
            am = np.argmax(metric, axis=0)
            val = metric[am, cols]
            upd = val > best[q]
            best[q, upd] = val[upd]
            serv[q, upd] = r.start + am[upd]
            loss[q, upd] = np.exp(ll[am[upd], cols[upd]])
    out = [Association(serv[q], loss[q], w[q]) for q in range(len(w))]
    return out[0] if single else out


def _reject_radius(cfg: NetworkConfig, tier: int, sigma: float) -> float:
    # beyond this radius a UE joins a tier-k AP with probability < exp(-14),
    # unless its shadowing is more than 5 sigma favourable
    dc = derive_constants(cfg)
    s_low = math.exp(-_REJECT_SIGMAS * sigma)
    return math.sqrt(_REJECT_EXP / (dc.g_ul[tier] * s_low**dc.delta))


def add_synthetic_users(dep: Deployment, assoc: Association, cfg: NetworkConfig) -> Deployment:
    """Give every AP with an empty UL cell one synthetic UE inside its cell.

    Candidates are uniform in a disc around the AP with fresh shadowing;
    the first whose weighted-best AP is the empty AP is kept.  A candidate
    is first screened against the nearest APs, which can only reject.

    Raises
    ------
    SamplingError
        After `_MAX_ATTEMPTS` rejected candidates for one AP.
    """
    loads = assoc.loads(dep.n_ap)
    empty = np.nonzero(loads == 0)[0]
    logw = np.log(assoc.weights)[dep.ap_tier]
    syn_xy = np.zeros((len(empty), 2))
    syn_sh = np.zeros((len(empty), dep.n_ap))
    for m, b in enumerate(empty):
        radius = min(_reject_radius(cfg, dep.ap_tier[b], dep.sigma), dep.side / 2)
        near = np.argsort(_torus_d2(dep.ap_xy, dep.ap_xy[b], dep.side))[: _FILTER_APS]
        near = near[near != b]
        found = False
        for batch in range(-(-_MAX_ATTEMPTS // _BATCH)):
            rng = _rng(*dep.seed, _T_SYN_POS, b, batch)
            r = radius * np.sqrt(rng.uniform(size=_BATCH))
            th = rng.uniform(0, 2 * math.pi, size=_BATCH)
            xy = np.mod(dep.ap_xy[b] + np.stack([r * np.cos(th), r * np.sin(th)], -1), dep.side)
            sh_own = dep.sigma * rng.standard_normal(_BATCH)
            sh_near = dep.sigma * rng.standard_normal((_BATCH, len(near)))
            own = logw[b] - sh_own - dep.alpha * np.log(r)
            d2 = _torus_d2(xy[:, None, :], dep.ap_xy[near][None], dep.side)
            m_near = logw[near] - sh_near - 0.5 * dep.alpha * np.log(d2)
            for c in np.nonzero(own >= m_near.max(axis=1, initial=-np.inf))[0]:
                sh = dep.sigma * _rng(*dep.seed, _T_SYN_SHADOW, b, batch, c).standard_normal(dep.n_ap)
                sh[b], sh[near] = sh_own[c], sh_near[c]
                metric = logw - sh - 0.5 * dep.alpha * np.log(_torus_d2(dep.ap_xy, xy[c], dep.side))
                if int(np.argmax(metric)) == b:
                    syn_xy[m], syn_sh[m], found = xy[c], sh, True
                    break
            if found:
                break
        if not found:
            raise SamplingError(f"no synthetic UE found for AP {b} after {_MAX_ATTEMPTS} attempts")
    return Deployment(dep.side, dep.ap_xy, dep.ap_tier, dep.ue_xy, dep.alpha, dep.sigma, dep.seed,
                      syn_xy, empty.astype(int), syn_sh)


# --------------------------------------------------------------------------
# uplink scheduling and measurement


@dataclass(frozen=True)
class ScheduledRealization:
    """Uplink schedule seen by one typical UE.

    ``interferers[b]`` is the UE index (synthetic UEs after the real ones)
    active on the typical resource block at AP b, or -1 for the tagged AP.
    """

    typical_ue: int
    tagged_ap: int
    interferers: np.ndarray
    tx_power: np.ndarray  # L**eps of each interferer, 0 at the tagged AP
    ul_loads: np.ndarray
    dl_loads: np.ndarray | None = None


@dataclass(frozen=True)
class _CellIndex:
    order: np.ndarray  # UE indices sorted by serving AP (synthetics appended)
    offset: np.ndarray
    count: np.ndarray
    serving_loss: np.ndarray  # per UE index incl. synthetics


def _cell_index(dep: Deployment, assoc: Association) -> _CellIndex:
    serv = np.concatenate([assoc.serving, dep.syn_ap])
    syn_loss = np.array([
        math.exp(dep.syn_log_shadow[m, b]) * _torus_dist(dep.syn_xy[m], dep.ap_xy[b], dep.side) ** dep.alpha
        for m, b in enumerate(dep.syn_ap)
    ]).reshape(-1)
    sl = np.concatenate([assoc.loss, syn_loss])
    order = np.argsort(serv, kind="stable")
    count = np.bincount(serv, minlength=dep.n_ap)
    offset = np.concatenate([[0], np.cumsum(count)[:-1]])
    if np.any(count == 0):
        raise ValueError("every AP needs an associated or synthetic UE")
    return _CellIndex(order, offset, count, sl)


def _draw_schedule(cells: _CellIndex, tagged: int, m: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(size=(m, len(cells.count)), dtype=np.float32)
    pick = cells.offset + np.minimum((u * cells.count).astype(np.int64), cells.count - 1)
    sched = cells.order[pick]
    sched[:, tagged] = -1
    return sched


def schedule_uplink(dep: Deployment, assoc: Association, typical_ue: int, seed=0,
                    dl_assoc: Association | None = None) -> ScheduledRealization:
    """Schedule for one typical UE (`dep` must already carry synthetic UEs)."""
    cells = _cell_index(dep, assoc)
    b = int(assoc.serving[typical_ue])
    sched = _draw_schedule(cells, b, 1, _rng(*np.atleast_1d(seed)))[0]
    power = np.where(sched >= 0, cells.serving_loss[np.maximum(sched, 0)], 0.0)
    return ScheduledRealization(
        typical_ue, b, sched, power, assoc.loads(dep.n_ap),
        None if dl_assoc is None else dl_assoc.loads(dep.n_ap),
    )


def measure_ul_sinr(real: ScheduledRealization, dep: Deployment, assoc: Association, cfg: NetworkConfig,
                    seed=0, snr: float | None = None) -> float:
    """UL SINR of the typical UE with fresh unit-mean exponential fading."""
    snr = cfg.snr if snr is None else snr
    eps = cfg.pcf
    rng = _rng(*np.atleast_1d(seed))
    col = dep.loss_column(real.tagged_ap, with_synthetic=True)
    act = real.interferers >= 0
    h = rng.exponential(size=dep.n_ap)
    interf = np.sum(h[act] * real.tx_power[act] ** eps / col[real.interferers[act]])
    h0 = rng.exponential()
    sig = h0 * assoc.loss[real.typical_ue] ** (eps - 1)
    noise = 0.0 if not np.isfinite(snr) else 1.0 / snr
    return float(sig / (interf + noise)) if interf + noise > 0 else math.inf


def _ul_sinr_block(dep, cells, assoc, b, ues, cfg, snr, rng, col, diag=None):
    """UL SINR of all typical UEs `ues` served by AP `b`.

    `col` is the loss column of `b` including synthetic UEs.  Also returns
    ``(I + N) / gain``, the SINR with the desired fading divided out.
    """
    eps = cfg.pcf
    m = len(ues)
    sched = _draw_schedule(cells, b, m, rng)
    act = sched >= 0
    idx = np.maximum(sched, 0)
    x = col[idx]
    h = rng.standard_exponential(size=sched.shape, dtype=np.float32)
    terms = h * (cells.serving_loss[idx] ** eps / x)
    terms[~act] = 0.0
    interf = terms.sum(axis=1)
    h0 = rng.exponential(size=m)
    gain = assoc.loss[ues] ** (eps - 1)
    noise = 0.0 if not np.isfinite(snr) else 1.0 / snr
    if diag is not None:
        diag.add(dep, cells, b, sched, x, act)
    ipn = (interf + noise) / gain
    with np.errstate(divide="ignore"):
        return h0 / ipn, ipn


class InterfererHistogram:
    """Empirical intensity of scheduled-interferer losses at the tagged AP.

    Only interferers within torus distance `radius` of the tagged AP are
    counted; losses are binned on a log10 grid per (tagged tier, interferer
    tier) and normalised per typical UE.
    """

    def __init__(self, n_tiers: int, radius: float, edges_log10=None):
        self.edges = np.arange(-8.0, 8.0001, 0.05) if edges_log10 is None else np.asarray(edges_log10)
        self.radius = radius
        nb = len(self.edges) - 1
        self.counts = np.zeros((n_tiers, n_tiers, nb))
        self.samples = np.zeros(n_tiers)

    def add(self, dep, cells, b, sched, x, act):
        k = dep.ap_tier[b]
        self.samples[k] += sched.shape[0]
        # interferer position, not AP position, decides the radius test
        idx = np.maximum(sched, 0)
        xy = np.concatenate([dep.ue_xy, dep.syn_xy])[idx]
        dist = _torus_dist(xy, dep.ap_xy[b], dep.side)
        use = act & (dist <= self.radius)
        lx = np.log10(x[use])
        tiers = np.broadcast_to(dep.ap_tier, sched.shape)[use]
        bins = np.searchsorted(self.edges, lx, side="right") - 1
        ok = (bins >= 0) & (bins < len(self.edges) - 1)
        np.add.at(self.counts[k], (tiers[ok], bins[ok]), 1.0)

    def density(self, k: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(bin edges in loss units, mean count per unit loss per sample)."""
        e = 10.0**self.edges
        return e, self.counts[k, j] / max(self.samples[k], 1) / np.diff(e)


def interferer_intensity_reference(x, k: int, j: int, cfg: NetworkConfig, radius: float | None = None):
    """Density of the thinned interferer intensity in the loss domain.

    ``delta a_j x**(delta-1) (1 - exp(-G_k x**delta))``, optionally times
    the fraction of the loss-`x` intensity whose points lie within
    `radius` of the tagged AP.
    """
    dc = derive_constants(cfg)
    x = np.asarray(x, dtype=float)
    d = dc.delta
    out = d * dc.a[j] * x ** (d - 1) * -np.expm1(-dc.g_ul[k] * x**d)
    if radius is not None:
        s = cfg.shadow_sigma_db * math.log(10) / 10
        if s == 0:
            out = out * (x <= radius**cfg.alpha)
        else:
            # P(ln S >= ln(x / R**alpha)) under the S**-delta tilt
            out = out * ndtr(-(np.log(x / radius**cfg.alpha) + d * s * s) / s)
    return out


# --------------------------------------------------------------------------
# downlink


def _dl_sinr(dep: Deployment, dl: Association, cfg: NetworkConfig, noise: float | None = None) -> np.ndarray:
    """DL SINR of every real UE; all APs transmit at full tier power."""
    p = cfg.tx_powers[dep.ap_tier]
    noise = cfg.dl_noise if noise is None else noise
    total = np.zeros(dep.n_ue)
    serv = np.zeros(dep.n_ue)
    cols = np.arange(dep.n_ue)
    for i in range(dep.n_blocks):
        r = dep.block_range(i)
        h = _rng(*dep.seed, _T_DL_FADE, i).standard_exponential((len(r), dep.n_ue), dtype=np.float32)
        rx = p[r.start:r.stop, None] * h * np.exp(-dep.log_loss_block(i))
        total += rx.sum(axis=0)
        mine = (dl.serving >= r.start) & (dl.serving < r.stop)
        serv[mine] = rx[dl.serving[mine] - r.start, cols[mine]]
    return serv / (total - serv + noise)


def measure_joint(dep: Deployment, ul: Association, dl: Association, ul_sinr: np.ndarray, ues: np.ndarray,
                  cfg: NetworkConfig, dl_sinr: np.ndarray | None = None):
    """UL and DL rates of the typical UEs `ues`.

    ``rate_ul = eta W / N_ul log2(1 + SINR_ul)`` at the UL serving AP and
    ``rate_dl = (1 - eta) W / N_dl log2(1 + SINR_dl)`` at the DL serving AP.
    """
    eta, bw = cfg.uplink_fraction, cfg.bandwidth_hz
    dl_sinr = _dl_sinr(dep, dl, cfg) if dl_sinr is None else dl_sinr
    n_ul = ul.loads(dep.n_ap)[ul.serving[ues]]
    n_dl = dl.loads(dep.n_ap)[dl.serving[ues]]
    r_ul = eta * bw / n_ul * np.log2(1 + ul_sinr)
    r_dl = (1 - eta) * bw / n_dl * np.log2(1 + dl_sinr[ues])
    return r_ul, r_dl


# --------------------------------------------------------------------------
# batch driver


def wilson_half_width(p, n: int, z: float = 1.96):
    """Half width of the Wilson score interval for a proportion `p` of `n`."""
    p = np.asarray(p, dtype=float)
    if n <= 0:
        return np.full(p.shape, np.nan)
    return z / (1 + z * z / n) * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))


def empirical_ccdf(samples, thresholds) -> np.ndarray:
    """Fraction of `samples` strictly above each threshold."""
    s = np.sort(np.asarray(samples, dtype=float))
    t = np.asarray(thresholds, dtype=float)
    return (len(s) - np.searchsorted(s, t, side="right")) / max(len(s), 1)


@dataclass
class SimulationResult:
    """Per-sample outputs of `run_simulation`, in deterministic order."""

    cfg: NetworkConfig
    seed: int
    window: float
    n_deployments: int
    ul_tier: np.ndarray
    dl_tier: np.ndarray
    ul_sinr: np.ndarray
    ul_ipn: np.ndarray
    dl_sinr: np.ndarray
    ul_rate: np.ndarray
    dl_rate: np.ndarray
    interferers: InterfererHistogram | None = None

    @property
    def n(self) -> int:
        return len(self.ul_sinr)

    def _curve(self, samples, grid, axis):
        lin = 10 ** (np.asarray(grid, float) / 10) if axis == "threshold_db" else np.asarray(grid, float)
        v = empirical_ccdf(samples, lin)
        return CoverageCurve(np.asarray(grid, float), v, "simulation", axis=axis,
                             fingerprint=self.cfg.fingerprint(), half_width=wilson_half_width(v, self.n))

    def sinr_curve(self, thresholds_db, link: Literal["ul", "dl"] = "ul",
                   estimator: Literal["empirical", "conditional"] = "empirical") -> CoverageCurve:
        """SINR CCDF on a dB grid.

        ``estimator="conditional"`` averages ``P(SINR > tau | I, L)`` over
        samples, i.e. integrates out the exponential fading of the desired
        UL link exactly.  It has the same mean as the empirical CCDF and a
        smaller variance.
        """
        if estimator == "empirical":
            return self._curve(self.ul_sinr if link == "ul" else self.dl_sinr, thresholds_db, "threshold_db")
        if link != "ul":
            raise ValueError("conditional estimator is available for the uplink only")
        tdb = np.asarray(thresholds_db, float)
        p = np.exp(-np.outer(10 ** (tdb / 10), self.ul_ipn))
        v = p.mean(axis=1)
        hw = 1.96 * p.std(axis=1) / math.sqrt(self.n)
        return CoverageCurve(tdb, v, "simulation", fingerprint=self.cfg.fingerprint(), half_width=hw)

    def rate_curve(self, rates_bps, link: Literal["ul", "dl"] = "ul") -> CoverageCurve:
        return self._curve(self.ul_rate if link == "ul" else self.dl_rate, rates_bps, "rate_bps")

    def joint_rate(self, rho_u, rho_d) -> np.ndarray:
        ru, rd = np.broadcast_arrays(np.asarray(rho_u, float), np.asarray(rho_d, float))
        return np.array([np.mean((self.ul_rate > a) & (self.dl_rate > b)) for a, b in zip(ru.ravel(), rd.ravel())]
                        ).reshape(ru.shape)

    def joint_sir(self, tau_u, tau_d) -> float:
        return float(np.mean((self.ul_sinr > tau_u) & (self.dl_sinr > tau_d)))

    def tier_fractions(self, link: Literal["ul", "dl"] = "ul") -> np.ndarray:
        t = self.ul_tier if link == "ul" else self.dl_tier
        return np.bincount(t, minlength=self.cfg.n_tiers) / max(len(t), 1)


def run_simulation(cfg: NetworkConfig, trials: int, seed: int = 0, window_size: float | None = None,
                   downlink: bool = True, diagnostics: bool = False, snr: float | None = None,
                   max_samples_per_deployment: int | None = DEFAULT_SAMPLES_PER_DEPLOYMENT) -> SimulationResult:
    """Draw deployments until `trials` typical-UE samples are collected.

    Deployment d uses the key ``(seed, d)``; within a deployment the first
    UEs (in generation order, hence uniformly random) are the samples, so
    the result is a deterministic function of ``(cfg, trials, seed, window)``.
    Capping the samples per deployment trades run time for variance: the
    spread between deployments dominates the error at 1e5 samples.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    side = default_window(cfg) if window_size is None else float(window_size)
    _check_window(cfg, side)
    snr = cfg.snr if snr is None else snr
    hist = InterfererHistogram(cfg.n_tiers, side / 2) if diagnostics else None
    cols = {k: [] for k in ("ul_tier", "dl_tier", "ul_sinr", "ul_ipn", "dl_sinr", "ul_rate", "dl_rate")}
    got, d = 0, 0
    while got < trials:
        dep = generate_deployment(cfg, side, (seed, d))
        d += 1
        if dep.n_ue == 0 or dep.n_ap == 0:
            continue
        if downlink:
            ul, dl = associate(dep, [cfg.ul_weights, cfg.dl_weights])
        else:
            ul, dl = associate(dep, cfg.ul_weights), None
        dep = add_synthetic_users(dep, ul, cfg)
        cells = _cell_index(dep, ul)
        take = min(dep.n_ue, trials - got)
        if max_samples_per_deployment:
            take = min(take, max_samples_per_deployment)
        ues = np.arange(take)
        sinr = np.empty(take)
        ipn = np.empty(take)
        rng = _rng(*dep.seed, _T_UL)
        tagged = np.unique(ul.serving[ues])
        for i in np.unique(tagged // _BLOCK):
            block = dep.log_loss_block(i)
            for b in tagged[tagged // _BLOCK == i]:
                mine = ues[ul.serving[ues] == b]
                col = dep.loss_column(b, with_synthetic=True, block=block)
                sinr[mine], ipn[mine] = _ul_sinr_block(dep, cells, ul, b, mine, cfg, snr, rng, col, hist)
        cols["ul_tier"].append(dep.ap_tier[ul.serving[ues]])
        cols["ul_sinr"].append(sinr)
        cols["ul_ipn"].append(ipn)
        if downlink:
            dls = _dl_sinr(dep, dl, cfg)
            r_ul, r_dl = measure_joint(dep, ul, dl, sinr, ues, cfg, dls)
            cols["dl_tier"].append(dep.ap_tier[dl.serving[ues]])
            cols["dl_sinr"].append(dls[ues])
        else:
            n_ul = ul.loads(dep.n_ap)[ul.serving[ues]]
            r_ul = cfg.uplink_fraction * cfg.bandwidth_hz / n_ul * np.log2(1 + sinr)
            r_dl = np.full(take, np.nan)
            cols["dl_tier"].append(np.full(take, -1))
            cols["dl_sinr"].append(np.full(take, np.nan))
        cols["ul_rate"].append(r_ul)
        cols["dl_rate"].append(r_dl)
        got += take
    arr = {k: np.concatenate(v) for k, v in cols.items()}
    return SimulationResult(cfg, seed, side, d, interferers=hist, **arr)


def ablation_baselines(mode: Literal["A1", "A2"], thresholds_db, cfg: NetworkConfig) -> CoverageCurve:
    """Analytic coverage under the simplified interference models.

    A1 keeps the thinned interferer intensity but draws interferer powers
    from the unconditional serving-loss law; A2 additionally drops the
    thinning, leaving a homogeneous PPP of interferers per tier.
    """
    from .uplink import coverage_curve

    return coverage_curve(thresholds_db, cfg, {"A1": "a1", "A2": "a2"}[mode])
