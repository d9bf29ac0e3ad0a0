"""Scenario description for a K-tier uplink/downlink HetNet.

Units
-----
Densities are per square kilometre.  Path loss is ``L = S * (d/u)**alpha``
where ``d`` is the distance and ``u = distance_unit_m`` the length unit in
which distances enter the path-loss law; ``reference_loss_db`` is the loss
at one such unit.  Powers and association weights are held in linear units
(mW, plain ratios); dB values are accepted only by the ``from_db``
constructors and the config-file loader.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "TierParams",
    "NetworkConfig",
    "DerivedConstants",
    "validate_config",
    "derive_constants",
    "lognormal_delta_moment",
    "db_to_linear",
    "linear_to_db",
    "two_tier_config",
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "dump_config",
]


class ConfigError(ValueError):
    """Invalid scenario description; the message lists every violation."""


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TierParams:
    """One AP tier: density [1/km^2], DL power [mW], UL and DL weights."""

    density: float
    tx_power: float = 1.0
    ul_weight: float = 1.0
    dl_weight: float = 1.0

    @classmethod
    def from_db(cls, density, tx_power_dbm=0.0, ul_weight_db=0.0, dl_weight_db=None):
        if dl_weight_db is None:
            dl_weight_db = tx_power_dbm
        return cls(
            density=float(density),
            tx_power=float(db_to_linear(tx_power_dbm)),
            ul_weight=float(db_to_linear(ul_weight_db)),
            dl_weight=float(db_to_linear(dl_weight_db)),
        )


@dataclass(frozen=True)
class NetworkConfig:
    tiers: tuple[TierParams, ...]
    alpha: float = 3.5
    user_density: float = 200.0
    shadow_sigma_db: float = 8.0
    pcf: float = 1.0
    open_loop_psd_dbm_hz: float = -80.0
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 10e6
    uplink_fraction: float = 0.5
    antenna_gain_db: float = 0.0
    reference_loss_db: float = -40.0
    distance_unit_m: float = 1000.0

    def __post_init__(self):
        tiers = tuple(self.tiers)
        # only weight ratios matter; keep the largest weight at 1
        ul = [t.ul_weight for t in tiers]
        dl = [t.dl_weight for t in tiers]
        if tiers and min(ul) > 0 and min(dl) > 0:
            mu, md = max(ul), max(dl)
            tiers = tuple(
                dataclasses.replace(t, ul_weight=t.ul_weight / mu, dl_weight=t.dl_weight / md)
                for t in tiers
            )
        object.__setattr__(self, "tiers", tiers)

    @property
    def n_tiers(self) -> int:
        return len(self.tiers)

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha

    @property
    def densities(self) -> np.ndarray:
        return np.array([t.density for t in self.tiers], dtype=float)

    @property
    def tx_powers(self) -> np.ndarray:
        return np.array([t.tx_power for t in self.tiers], dtype=float)

    @property
    def ul_weights(self) -> np.ndarray:
        return np.array([t.ul_weight for t in self.tiers], dtype=float)

    @property
    def dl_weights(self) -> np.ndarray:
        return np.array([t.dl_weight for t in self.tiers], dtype=float)

    @property
    def snr(self) -> float:
        """Uplink reference SNR ``P_u G L0 / N0`` (linear)."""
        return float(
            db_to_linear(
                self.open_loop_psd_dbm_hz + self.antenna_gain_db + self.reference_loss_db
                - self.noise_psd_dbm_hz
            )
        )

    @property
    def dl_noise(self) -> float:
        """Downlink noise power over the full band, referred to the AP side [mW]."""
        return float(
            db_to_linear(self.noise_psd_dbm_hz - self.antenna_gain_db - self.reference_loss_db)
            * self.bandwidth_hz
        )

    @property
    def area_scale(self) -> float:
        """Square kilometres per squared distance unit."""
        return (self.distance_unit_m / 1000.0) ** 2

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def with_weights(self, ul: Sequence[float] | None = None, dl: Sequence[float] | None = None):
        """Copy with new linear UL and/or DL weights (one per tier)."""
        tiers = list(self.tiers)
        if ul is not None:
            tiers = [dataclasses.replace(t, ul_weight=float(w)) for t, w in zip(tiers, ul)]
        if dl is not None:
            tiers = [dataclasses.replace(t, dl_weight=float(w)) for t, w in zip(tiers, dl)]
        return self.replace(tiers=tuple(tiers))

    def with_densities(self, densities: Sequence[float]) -> "NetworkConfig":
        tiers = tuple(dataclasses.replace(t, density=float(d)) for t, d in zip(self.tiers, densities))
        return self.replace(tiers=tiers)

    def fingerprint(self) -> str:
        blob = json.dumps(config_to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def two_tier_config(
    density_ratio: float = 6.0,
    ul_ratio_db: float = 0.0,
    dl_ratio_db: float | None = None,
    pcf: float = 1.0,
    base_density: float = 5.0,
    power_gap_db: float = -20.0,
    **kwargs,
) -> NetworkConfig:
    """Macro tier plus one small-cell tier with the usual defaults.

    Tier 1 transmits at 46 dBm and tier 2 `power_gap_db` lower.  The DL
    weight ratio defaults to the power ratio (max received power).
    """
    if dl_ratio_db is None:
        dl_ratio_db = power_gap_db
    tiers = (
        TierParams.from_db(base_density, 46.0, 0.0, 0.0),
        TierParams.from_db(base_density * density_ratio, 46.0 + power_gap_db, ul_ratio_db, dl_ratio_db),
    )
    return NetworkConfig(tiers=tiers, pcf=pcf, **kwargs)


def _violations(cfg: NetworkConfig) -> list[str]:
    out = []
    if len(cfg.tiers) < 1:
        out.append("at least one tier is required")
    for i, t in enumerate(cfg.tiers, 1):
        if not t.density >= 0:
            out.append(f"tier {i}: density must be non-negative (got {t.density})")
        if not t.ul_weight > 0:
            out.append(f"tier {i}: ul_weight must be positive (got {t.ul_weight})")
        if not t.dl_weight > 0:
            out.append(f"tier {i}: dl_weight must be positive (got {t.dl_weight})")
        if not t.tx_power > 0:
            out.append(f"tier {i}: tx_power must be positive (got {t.tx_power})")
    if cfg.tiers and not any(t.density > 0 for t in cfg.tiers):
        out.append("at least one tier needs a positive density")
    if not cfg.alpha > 2:
        out.append(f"alpha must exceed 2 (got {cfg.alpha})")
    if not 0.0 <= cfg.pcf <= 1.0:
        out.append(f"pcf outside [0,1] (got {cfg.pcf})")
    if not 0.0 < cfg.uplink_fraction < 1.0:
        out.append(f"uplink_fraction must lie in (0,1) (got {cfg.uplink_fraction})")
    if not cfg.user_density >= 0:
        out.append(f"user_density must be non-negative (got {cfg.user_density})")
    if not cfg.shadow_sigma_db >= 0:
        out.append(f"shadow_sigma_db must be non-negative (got {cfg.shadow_sigma_db})")
    if not cfg.bandwidth_hz > 0:
        out.append(f"bandwidth_hz must be positive (got {cfg.bandwidth_hz})")
    if not cfg.distance_unit_m > 0:
        out.append(f"distance_unit_m must be positive (got {cfg.distance_unit_m})")
    for name in ("open_loop_psd_dbm_hz", "noise_psd_dbm_hz", "antenna_gain_db", "reference_loss_db"):
        if not math.isfinite(getattr(cfg, name)):
            out.append(f"{name} must be finite")
    return out


def validate_config(cfg: NetworkConfig) -> None:
    """Raise `ConfigError` listing every violated invariant."""
    problems = _violations(cfg)
    if problems:
        raise ConfigError("; ".join(problems))


def lognormal_delta_moment(sigma_db: float, delta: float) -> float:
    """E[S**delta] for zero-median lognormal shadowing with `sigma_db` spread."""
    if sigma_db < 0:
        raise ValueError("sigma_db must be non-negative")
    s = delta * sigma_db * math.log(10.0) / 10.0
    return math.exp(0.5 * s * s)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DerivedConstants:
    """Per-tier association constants shared by all formulas.

    ``a[k] = pi lambda_k E[S^delta]``, ``g_ul[k] = sum_j a_j (mu_j/mu_k)^delta``
    and ``assoc_prob_ul[k] = a[k]/g_ul[k]``; the ``_dl`` variants use the
    downlink weights.
    """

    delta: float
    s_moment: float
    a: np.ndarray
    g_ul: np.ndarray
    g_dl: np.ndarray
    assoc_prob_ul: np.ndarray
    assoc_prob_dl: np.ndarray
    ul_weights: np.ndarray = field(repr=False)
    dl_weights: np.ndarray = field(repr=False)

    @property
    def n_tiers(self) -> int:
        return len(self.a)

    def nu_ul(self, k: int) -> np.ndarray:
        """UL weight ratios ``mu_j / mu_k`` relative to serving tier `k`."""
        return self.ul_weights / self.ul_weights[k]

    def nu_dl(self, j: int) -> np.ndarray:
        return self.dl_weights / self.dl_weights[j]


def _aggregate(a: np.ndarray, w: np.ndarray, delta: float) -> np.ndarray:
    return np.array([np.sum(a * (w / wk) ** delta) for wk in w])


def derive_constants(cfg: NetworkConfig) -> DerivedConstants:
    validate_config(cfg)
    delta = cfg.delta
    m = lognormal_delta_moment(cfg.shadow_sigma_db, delta)
    a = math.pi * cfg.densities * cfg.area_scale * m
    g_ul = _aggregate(a, cfg.ul_weights, delta)
    g_dl = _aggregate(a, cfg.dl_weights, delta)
    return DerivedConstants(
        delta=delta,
        s_moment=m,
        a=_readonly(a),
        g_ul=_readonly(g_ul),
        g_dl=_readonly(g_dl),
        assoc_prob_ul=_readonly(a / g_ul),
        assoc_prob_dl=_readonly(a / g_dl),
        ul_weights=_readonly(cfg.ul_weights),
        dl_weights=_readonly(cfg.dl_weights),
    )


# --------------------------------------------------------------------------
# config files

_TOP_KEYS = {
    "alpha": float,
    "user_density": float,
    "shadow_sigma_db": float,
    "pcf": float,
    "open_loop_psd_dbm_hz": float,
    "noise_psd_dbm_hz": float,
    "bandwidth_hz": float,
    "uplink_fraction": float,
    "antenna_gain_db": float,
    "reference_loss_db": float,
    "distance_unit_m": float,
}
_TIER_KEYS = {"density", "tx_power_dbm", "ul_weight_db", "dl_weight_db"}


def _key_lines(node, prefix=()) -> dict[tuple, int]:
    """Map key paths of a composed YAML node to 1-based line numbers."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            lines[path] = k.start_mark.line + 1
            lines.update(_key_lines(v, path))
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            lines[prefix + (i,)] = v.start_mark.line + 1
            lines.update(_key_lines(v, prefix + (i,)))
    return lines


def config_from_dict(data: dict, lines: dict | None = None) -> NetworkConfig:
    """Build a config from the documented file schema (dB at the boundary)."""
    lines = lines or {}

    def where(*path):
        ln = lines.get(tuple(path))
        return f"line {ln}: " if ln else ""

    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    problems = []
    for key in data:
        if key != "tiers" and key not in _TOP_KEYS:
            problems.append(f"{where(key)}unknown key '{key}'")
    tiers_raw = data.get("tiers")
    if not isinstance(tiers_raw, list) or not tiers_raw:
        problems.append(f"{where('tiers')}'tiers' must be a non-empty list")
        tiers_raw = []
    tiers = []
    for i, t in enumerate(tiers_raw):
        if not isinstance(t, dict):
            problems.append(f"{where('tiers', i)}tier {i + 1} must be a mapping")
            continue
        for key in t:
            if key not in _TIER_KEYS:
                problems.append(f"{where('tiers', i, key)}tier {i + 1}: unknown key '{key}'")
        if "density" not in t:
            problems.append(f"{where('tiers', i)}tier {i + 1}: missing 'density'")
            continue
        try:
            tiers.append(
                TierParams.from_db(
                    float(t["density"]),
                    float(t.get("tx_power_dbm", 0.0)),
                    float(t.get("ul_weight_db", 0.0)),
                    None if t.get("dl_weight_db") is None else float(t["dl_weight_db"]),
                )
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"{where('tiers', i)}tier {i + 1}: {exc}")
    kwargs = {}
    for key, conv in _TOP_KEYS.items():
        if key in data:
            try:
                kwargs[key] = conv(data[key])
            except (TypeError, ValueError):
                problems.append(f"{where(key)}'{key}' must be a number (got {data[key]!r})")
    if problems:
        raise ConfigError("; ".join(problems))
    cfg = NetworkConfig(tiers=tuple(tiers), **kwargs)
    try:
        validate_config(cfg)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | Path) -> NetworkConfig:
    """Read a YAML scenario file; errors carry line numbers where known."""
    text = Path(path).read_text()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{path}: {loc}{getattr(exc, 'problem', exc)}") from None
    if data is None:
        raise ConfigError(f"{path}: empty config")
    try:
        return config_from_dict(data, _key_lines(node))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_to_dict(cfg: NetworkConfig) -> dict[str, Any]:
    """Inverse of `config_from_dict` (dB fields for tier powers and weights)."""
    out: dict[str, Any] = {k: getattr(cfg, k) for k in _TOP_KEYS}
    out["tiers"] = [
        {
            "density": t.density,
            "tx_power_dbm": float(linear_to_db(t.tx_power)),
            "ul_weight_db": float(linear_to_db(t.ul_weight)),
            "dl_weight_db": float(linear_to_db(t.dl_weight)),
        }
        for t in cfg.tiers
    ]
    return out


def dump_config(cfg: NetworkConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))
