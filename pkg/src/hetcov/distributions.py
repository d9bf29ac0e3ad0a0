"""Path-loss and load distributions of the typical user.

All path losses are in the units fixed by the scenario (see
`hetcov.network_model`).  With ``delta = 2/alpha`` the serving path loss
of a user attached to tier k satisfies ``G_k L**delta ~ Exp(1)``, so most
expectations here are computed in that variable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy.special import gammaln

from .network_model import DerivedConstants, NetworkConfig, derive_constants
from .special_math import exp_sinh_rule

__all__ = [
    "serving_pl_pdf",
    "serving_pl_ccdf",
    "interferer_pl_pdf",
    "joint_pl_pdf",
    "joint_pl_diagonal_pdf",
    "joint_wedge",
    "joint_tier_masses",
    "joint_expectation",
    "JointNodes",
    "joint_nodes",
    "LoadPmf",
    "load_pmf",
    "mean_load",
]

Link = Literal["ul", "dl"]

_KT_SHAPE = 3.5
_PMF_MASS = 1.0 - 1e-6
_PMF_CAP = 10_000


def _g(dc: DerivedConstants, link: Link) -> np.ndarray:
    return dc.g_ul if link == "ul" else dc.g_dl


def _check_nonneg(l):
    la = np.asarray(l, dtype=float)
    if np.any(la < 0):
        raise ValueError("path loss must be non-negative")
    return la


def serving_pl_pdf(l, dc: DerivedConstants, tier: int | None = None, link: Link = "ul"):
    """Density of the serving path loss, optionally conditioned on the tier."""
    la = _check_nonneg(l)
    d = dc.delta
    g = _g(dc, link)
    with np.errstate(divide="ignore", invalid="ignore"):
        if tier is not None:
            out = d * g[tier] * la ** (d - 1) * np.exp(-g[tier] * la**d)
        else:
            ud = la[..., None] ** d
            out = d * la ** (d - 1) * np.sum(dc.a * np.exp(-g * ud), axis=-1)
    return out


def serving_pl_ccdf(l, dc: DerivedConstants, tier: int | None = None, link: Link = "ul"):
    la = _check_nonneg(l)
    d = dc.delta
    g = _g(dc, link)
    if tier is not None:
        return np.exp(-g[tier] * la**d)
    return np.sum(dc.a / g * np.exp(-g * la[..., None] ** d), axis=-1)


def interferer_pl_pdf(l, j: int, k: int, y: float, dc: DerivedConstants):
    """Serving path loss of a tier-`j` interferer seen at distance-loss `y`
    from a tier-`k` tagged AP.

    The interferer cannot prefer the tagged AP, so its loss is capped at
    ``(mu_j/mu_k) y``; the cap normalises to ``1 - exp(-G_k y**delta)``
    because ``G_j (mu_j/mu_k)**delta == G_k``.
    """
    if not y > 0:
        raise ValueError("y must be positive")
    la = np.asarray(l, dtype=float)
    d = dc.delta
    cap = dc.ul_weights[j] / dc.ul_weights[k] * y
    norm = -np.expm1(-dc.g_ul[k] * y**d)
    inside = (la >= 0) & (la <= cap)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = d * dc.g_ul[j] * np.abs(la) ** (d - 1) * np.exp(-dc.g_ul[j] * np.abs(la) ** d) / norm
    return np.where(inside, dens, 0.0)


# --------------------------------------------------------------------------
# joint UL/DL path loss


def joint_wedge(k: int, j: int, dc: DerivedConstants):
    """Ratio bounds ``(r_lo, r_hi)`` of ``y/x`` for UL tier k, DL tier j.

    Returns None when the pair cannot occur (including ``k == j``, whose
    mass lives on the diagonal).
    """
    if k == j:
        return None
    r_lo = dc.ul_weights[j] / dc.ul_weights[k]
    r_hi = dc.dl_weights[j] / dc.dl_weights[k]
    return (r_lo, r_hi) if r_lo < r_hi else None


def _wedge_exponent(r, k: int, j: int, dc: DerivedConstants):
    # D(r) = sum_i a_i max(nu'_i r, nu_i)**delta with nu rel. to k (UL), nu' rel. to j (DL)
    nu = dc.nu_ul(k)
    nup = dc.nu_dl(j)
    r = np.asarray(r, dtype=float)
    return np.sum(dc.a * np.maximum(nup * r[..., None], nu) ** dc.delta, axis=-1)


def _diagonal_exponent(k: int, dc: DerivedConstants) -> float:
    return float(np.sum(dc.a * np.maximum(dc.nu_dl(k), dc.nu_ul(k)) ** dc.delta))


def joint_pl_pdf(x, y, k: int, j: int, dc: DerivedConstants):
    """Continuous part of the joint density of (UL loss, DL loss, tiers).

    Non-zero only for ``k != j`` on the wedge
    ``mu_j/mu_k <= y/x <= mu'_j/mu'_k``.
    """
    xa = _check_nonneg(x)
    ya = _check_nonneg(y)
    wedge = joint_wedge(k, j, dc)
    if wedge is None:
        return np.zeros(np.broadcast(xa, ya).shape)
    d = dc.delta
    nu = dc.nu_ul(k)
    nup = dc.nu_dl(j)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = ya / xa
        expo = np.sum(dc.a * np.maximum(nup * ya[..., None], nu * xa[..., None]) ** d, axis=-1)
        dens = dc.a[j] * dc.a[k] * d * d * xa ** (d - 1) * ya ** (d - 1) * np.exp(-expo)
    inside = (xa > 0) & (r >= wedge[0]) & (r <= wedge[1])
    return np.where(inside, dens, 0.0)


def joint_pl_diagonal_pdf(x, k: int, dc: DerivedConstants):
    """Line density on ``y == x`` for users whose UL and DL AP coincide (tier k)."""
    xa = _check_nonneg(x)
    d = dc.delta
    e = _diagonal_exponent(k, dc)
    with np.errstate(divide="ignore", invalid="ignore"):
        return dc.a[k] * d * xa ** (d - 1) * np.exp(-e * xa**d)


@lru_cache(maxsize=8)
def _log_legendre(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return t, w


def _wedge_pieces(k: int, j: int, dc: DerivedConstants, wedge):
    r_lo, r_hi = wedge
    kinks = dc.nu_ul(k) / dc.nu_dl(j)
    cuts = np.unique(np.concatenate([[r_lo, r_hi], kinks[(kinks > r_lo) & (kinks < r_hi)]]))
    return list(zip(cuts[:-1], cuts[1:]))


def _wedge_rule(k: int, j: int, dc: DerivedConstants, n_r: int):
    """Nodes in log r and weights of the wedge measure, integrated over x.

    Returns ``(r, weight, D(r))`` with ``weight`` already including
    ``delta a_j a_k r**delta / D(r)**2`` (the extra ``r`` is the Jacobian of
    the log substitution).
    """
    wedge = joint_wedge(k, j, dc)
    if wedge is None:
        return None
    t, w = _log_legendre(n_r)
    rs, ws = [], []
    for lo, hi in _wedge_pieces(k, j, dc, wedge):
        a, b = np.log(lo), np.log(hi)
        lr = 0.5 * (b - a) * t + 0.5 * (a + b)
        rs.append(np.exp(lr))
        ws.append(0.5 * (b - a) * w)
    r = np.concatenate(rs)
    lw = np.concatenate(ws)
    dr = _wedge_exponent(r, k, j, dc)
    weight = dc.delta * dc.a[j] * dc.a[k] * r**dc.delta / dr**2 * lw
    return r, weight, dr


def joint_tier_masses(dc: DerivedConstants, n_r: int = 48) -> np.ndarray:
    """P(UL tier = k, DL tier = j) as a K x K matrix."""
    K = dc.n_tiers
    out = np.zeros((K, K))
    for k in range(K):
        out[k, k] = dc.a[k] / _diagonal_exponent(k, dc)
        for j in range(K):
            rule = _wedge_rule(k, j, dc, n_r)
            if rule is not None:
                out[k, j] = float(np.sum(rule[1]))
    return out


@dataclass(frozen=True)
class JointNodes:
    """Quadrature nodes of the joint law for one (UL tier, DL tier) pair.

    ``sum(weight * g(x, y))`` approximates ``E[1(tiers = (k, j)) g(L, L')]``.
    """

    k: int
    j: int
    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray


def joint_nodes(dc: DerivedConstants, level: int = 5, n_r: int = 32) -> list[JointNodes]:
    """Flattened quadrature of the joint path-loss law.

    Wedges are integrated in ``(w, r)`` with ``r = y/x`` and
    ``w = D(r) x**delta``, which turns each wedge into a rectangle carrying
    the Gamma(2) weight ``w exp(-w)``; diagonal masses become Exp(1)
    expectations.
    """
    wn, ww = exp_sinh_rule(level)
    d = dc.delta
    out = []
    for k in range(dc.n_tiers):
        if dc.a[k] == 0:
            continue
        e = _diagonal_exponent(k, dc)
        x = (wn / e) ** (1.0 / d)
        out.append(JointNodes(k, k, x, x, dc.a[k] / e * np.exp(-wn) * ww))
        for j in range(dc.n_tiers):
            rule = _wedge_rule(k, j, dc, n_r) if dc.a[j] > 0 else None
            if rule is None:
                continue
            r, rw, dr = rule
            x = (wn[None, :] / dr[:, None]) ** (1.0 / d)
            y = r[:, None] * x
            wt = rw[:, None] * (wn * np.exp(-wn) * ww)[None, :]
            out.append(JointNodes(k, j, x.ravel(), y.ravel(), wt.ravel()))
    return out


def joint_expectation(
    g: Callable[[int, int, np.ndarray, np.ndarray], np.ndarray],
    dc: DerivedConstants,
    level: int = 5,
    n_r: int = 32,
) -> float:
    """``sum_{k,j} E[1(UL tier k, DL tier j) g(k, j, L, L')]``.

    `g` is called with 1-D arrays ``x`` (UL loss) and ``y`` (DL loss).
    """
    return float(sum(np.sum(nd.weight * g(nd.k, nd.j, nd.x, nd.y)) for nd in joint_nodes(dc, level, n_r)))


# --------------------------------------------------------------------------
# load


@dataclass(frozen=True)
class LoadPmf:
    """Load (users sharing the serving AP, typical user included).

    ``pmf[i]`` is P(N = i + 1).
    """

    mean_area_ratio: float
    pmf: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, len(self.pmf) + 1)

    def mean(self) -> float:
        return float(np.sum(self.support * self.pmf))


def kt_pmf(c: float, n) -> np.ndarray:
    """Area-approximation load PMF at integer(s) ``n >= 1`` for ratio ``c``."""
    n = np.asarray(n, dtype=float)
    if c == 0:
        return np.where(n == 1, 1.0, 0.0)
    s = _KT_SHAPE
    logp = (
        s * np.log(s)
        - gammaln(n)
        + gammaln(n + s)
        - gammaln(s)
        + (n - 1) * np.log(c)
        - (n + s) * np.log(s + c)
    )
    return np.exp(logp)


def _area_ratio(cfg: NetworkConfig, k: int, link: Link) -> float:
    dc = derive_constants(cfg)
    a_k = (dc.assoc_prob_ul if link == "ul" else dc.assoc_prob_dl)[k]
    return cfg.user_density * a_k / cfg.tiers[k].density


def load_pmf(cfg: NetworkConfig, k: int, link: Link = "ul") -> LoadPmf:
    """Truncated load PMF of the tier-`k` serving AP on the given link."""
    c = _area_ratio(cfg, k, link)
    if c == 0:
        return LoadPmf(0.0, np.array([1.0]))
    # grow the evaluated range until the tail is negligible
    n_max = max(64, int(8 * (1 + 1.3 * c)))
    while True:
        p = kt_pmf(c, np.arange(1, n_max + 1))
        cum = np.cumsum(p)
        hit = np.nonzero(cum >= _PMF_MASS)[0]
        if hit.size or n_max >= _PMF_CAP:
            end = hit[0] + 1 if hit.size else n_max
            return LoadPmf(c, p[:end])
        n_max = min(2 * n_max, _PMF_CAP)


def mean_load(cfg: NetworkConfig, k: int, link: Link = "ul") -> float:
    """``1 + 1.28 lambda_u A_k / lambda_k`` with the link's association probability."""
    return 1.0 + 1.28 * _area_ratio(cfg, k, link)
