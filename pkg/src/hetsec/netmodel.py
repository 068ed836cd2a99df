"""Network geometry, configuration and channel sampling.

Scenario: uplink of a two-tier network. One macro node (HPN) at the origin
serves H macro users (HUEs). L pico nodes (LPNs) sit on a ring around the
macro node; each serves M pico users (LUEs) and hosts K device-to-device
pairs (DUEs) reusing the same N subcarriers. One eavesdropper location is
drawn per subcarrier.

All channel gains are linear power gains: path loss times an exponential
(squared Rayleigh) fade. Distances in metres, powers in watts, bandwidth in
hertz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigurationError

# geometry rejection sampling gives up after this many draws per point
_MAX_DRAWS = 10_000

# link classes using the steep "short-range" path-loss law: D2D direct,
# LUE->LPN, DUE->LPN and LUE->DUE-receiver links; everything touching the
# macro node, the HUEs or the eavesdroppers uses the "long-range" law.
SHORT_RANGE_LINKS = ("g_ll", "g_ld", "g_dl", "g_dd")


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    if watt <= 0.0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(watt) + 30.0


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters. Defaults reproduce the reference simulation setup."""

    hues: int = 2                       # H macro users
    lpns: int = 2                       # L pico nodes on the ring
    lues_per_lpn: int = 5               # M pico users per LPN
    dues_per_lpn: int = 5               # K D2D pairs per LPN
    subcarriers: int = 8                # N
    bandwidth_per_subcarrier: float = 200e3   # Hz
    noise_psd: float = 10.0 ** ((-174.0 - 30.0) / 10.0)  # W/Hz (-174 dBm/Hz)
    p_max_hue: float = dbm_to_watt(43.0) / 8  # 43 dBm macro budget split over N
    p_max_lue: float = dbm_to_watt(24.0)
    p_max_due: float = dbm_to_watt(15.0)
    c_min_hue: float = 0.0              # secrecy QoS per class, bits/s/Hz
    c_min_lue: float = 0.0
    c_min_due: float = 0.0
    i_max_hue: float = 1e-11            # leakage budget, macro cell (W x gain)
    i_max_lpn: float = 1e-11            # leakage budget per pico cell
    hpn_radius_m: float = 800.0
    lpn_radius_m: float = 200.0
    lpn_ring_m: float = 1000.0
    d2d_distance_m: float = 10.0
    min_dist_hpn_m: float = 50.0
    min_dist_lpn_m: float = 20.0
    pathloss_short: tuple[float, float] = (31.5, 40.0)  # intercept dB, slope dB/decade
    pathloss_long: tuple[float, float] = (31.5, 35.0)
    seed: int = 0
    fixed_power_fraction: float = 0.5   # fixed-power baseline: fraction of p_max
    record_wall_time: bool = False      # False keeps harness output byte-stable

    def __post_init__(self) -> None:
        counts = {
            "hues": self.hues,
            "lpns": self.lpns,
            "lues_per_lpn": self.lues_per_lpn,
            "dues_per_lpn": self.dues_per_lpn,
            "subcarriers": self.subcarriers,
        }
        for name, value in counts.items():
            if not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        positives = {
            "bandwidth_per_subcarrier": self.bandwidth_per_subcarrier,
            "noise_psd": self.noise_psd,
            "p_max_hue": self.p_max_hue,
            "p_max_lue": self.p_max_lue,
            "p_max_due": self.p_max_due,
            "i_max_hue": self.i_max_hue,
            "i_max_lpn": self.i_max_lpn,
            "hpn_radius_m": self.hpn_radius_m,
            "lpn_radius_m": self.lpn_radius_m,
            "lpn_ring_m": self.lpn_ring_m,
            "d2d_distance_m": self.d2d_distance_m,
        }
        for name, value in positives.items():
            if not value > 0.0:
                raise ConfigurationError(f"{name} must be positive, got {value!r}")
        for name in ("c_min_hue", "c_min_lue", "c_min_due", "min_dist_hpn_m",
                     "min_dist_lpn_m"):
            if getattr(self, name) < 0.0:
                raise ConfigurationError(f"{name} must be nonnegative")
        if self.min_dist_hpn_m >= self.hpn_radius_m:
            raise ConfigurationError("min_dist_hpn_m must be below hpn_radius_m")
        if self.min_dist_lpn_m >= self.lpn_radius_m:
            raise ConfigurationError("min_dist_lpn_m must be below lpn_radius_m")
        if not 0.0 <= self.fixed_power_fraction <= 1.0:
            raise ConfigurationError("fixed_power_fraction must lie in [0, 1]")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError("seed must be an unsigned integer")

    @property
    def noise_w(self) -> float:
        """Receiver noise power per subcarrier: bandwidth x noise PSD."""
        return self.bandwidth_per_subcarrier * self.noise_psd

    def c_min_of(self, klass: str) -> float:
        return {"hue": self.c_min_hue, "lue": self.c_min_lue, "due": self.c_min_due}[klass]

    def p_max_of(self, klass: str) -> float:
        return {"hue": self.p_max_hue, "lue": self.p_max_lue, "due": self.p_max_due}[klass]


def default_config(**overrides) -> NetworkConfig:
    """Reference-scale scenario (see class defaults)."""
    return replace(NetworkConfig(), **overrides) if overrides else NetworkConfig()


def desk_config(**overrides) -> NetworkConfig:
    """Small scenario for tests and CI: 2 HUEs, 2 LPNs x (2 LUEs + 2 DUEs), 4 subcarriers."""
    base = NetworkConfig(hues=2, lpns=2, lues_per_lpn=2, dues_per_lpn=2, subcarriers=4)
    return replace(base, **overrides) if overrides else base


# --------------------------------------------------------------------------
# config file I/O
# --------------------------------------------------------------------------

def load_config(path: str) -> NetworkConfig:
    """Read a NetworkConfig from a flat ``key = value`` text file.

    Keys match field names; '#' starts a comment; pair-valued fields
    (pathloss_short/pathloss_long) take two comma- or space-separated floats.
    Unknown keys raise ConfigurationError.
    """
    spec = {f.name: f for f in fields(NetworkConfig)}
    overrides: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in spec:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            overrides[key] = _parse_field(key, value, lineno, path)
    try:
        return replace(NetworkConfig(), **overrides)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def _parse_field(key: str, value: str, lineno: int, path: str):
    int_fields = {"hues", "lpns", "lues_per_lpn", "dues_per_lpn", "subcarriers", "seed"}
    pair_fields = {"pathloss_short", "pathloss_long"}
    bool_fields = {"record_wall_time"}
    try:
        if key in int_fields:
            return int(value)
        if key in bool_fields:
            lowered = value.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        if key in pair_fields:
            parts = [p for p in value.replace(",", " ").split() if p]
            if len(parts) != 2:
                raise ValueError("expected two numbers")
            return (float(parts[0]), float(parts[1]))
        return float(value)
    except ValueError as exc:
        raise ConfigurationError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc


def write_config(cfg: NetworkConfig, path: str) -> None:
    """Write a config in the same flat key = value format load_config reads."""
    lines = []
    for f in fields(NetworkConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = f"{value[0]}, {value[1]}"
        lines.append(f"{f.name} = {value}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# geometry
# --------------------------------------------------------------------------

@dataclass
class Topology:
    """Node positions in metres; HPN at the origin."""

    hpn: np.ndarray          # (2,)
    lpn: np.ndarray          # (L, 2)
    hue: np.ndarray          # (H, 2)
    lue: np.ndarray          # (L, M, 2)
    due_tx: np.ndarray       # (L, K, 2)
    due_rx: np.ndarray       # (L, K, 2)
    eve: np.ndarray          # (N, 2) one eavesdropper position per subcarrier


def _draw_in_annulus(rng: np.random.Generator, center: np.ndarray, radius: float,
                     min_dist: float, what: str) -> np.ndarray:
    """Uniform point in the disk around center, at least min_dist from it."""
    for _ in range(_MAX_DRAWS):
        # uniform in disk via sqrt radial transform
        r = radius * math.sqrt(rng.uniform())
        if r < min_dist:
            continue
        theta = rng.uniform(0.0, 2.0 * math.pi)
        return center + np.array([r * math.cos(theta), r * math.sin(theta)])
    raise ConfigurationError(f"could not place {what} after {_MAX_DRAWS} draws")


def generate_topology(cfg: NetworkConfig, rng: np.random.Generator) -> Topology:
    """Draw one network layout. Rejection sampling enforces minimum distances
    and keeps DUE receivers inside their pico cell disk."""
    hpn = np.zeros(2)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=cfg.lpns)
    lpn = cfg.lpn_ring_m * np.stack([np.cos(angles), np.sin(angles)], axis=1)

    hue = np.stack([
        _draw_in_annulus(rng, hpn, cfg.hpn_radius_m, cfg.min_dist_hpn_m, f"HUE {h}")
        for h in range(cfg.hues)
    ])

    lue = np.zeros((cfg.lpns, cfg.lues_per_lpn, 2))
    for l in range(cfg.lpns):
        for m in range(cfg.lues_per_lpn):
            lue[l, m] = _draw_in_annulus(rng, lpn[l], cfg.lpn_radius_m,
                                         cfg.min_dist_lpn_m, f"LUE ({l},{m})")

    due_tx = np.zeros((cfg.lpns, cfg.dues_per_lpn, 2))
    due_rx = np.zeros((cfg.lpns, cfg.dues_per_lpn, 2))
    for l in range(cfg.lpns):
        for k in range(cfg.dues_per_lpn):
            tx = _draw_in_annulus(rng, lpn[l], cfg.lpn_radius_m,
                                  cfg.min_dist_lpn_m, f"DUE tx ({l},{k})")
            rx = _place_due_rx(rng, tx, lpn[l], cfg, l, k)
            due_tx[l, k] = tx
            due_rx[l, k] = rx

    eve = np.stack([
        _draw_in_annulus(rng, hpn, cfg.hpn_radius_m, cfg.min_dist_hpn_m, f"eavesdropper {n}")
        for n in range(cfg.subcarriers)
    ])
    return Topology(hpn=hpn, lpn=lpn, hue=hue, due_tx=due_tx, due_rx=due_rx,
                    lue=lue, eve=eve)


def _place_due_rx(rng: np.random.Generator, tx: np.ndarray, lpn: np.ndarray,
                  cfg: NetworkConfig, l: int, k: int) -> np.ndarray:
    """Receiver at the fixed pair separation, uniform bearing; redrawn until it
    falls inside the pico disk and respects the minimum distance to the LPN."""
    for _ in range(_MAX_DRAWS):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        rx = tx + cfg.d2d_distance_m * np.array([math.cos(theta), math.sin(theta)])
        d = float(np.hypot(*(rx - lpn)))
        if d <= cfg.lpn_radius_m and d >= cfg.min_dist_lpn_m:
            return rx
    raise ConfigurationError(
        f"could not place DUE rx ({l},{k}) after {_MAX_DRAWS} draws "
        "(pair separation incompatible with the pico cell geometry)")


# --------------------------------------------------------------------------
# path loss and channel sampling
# --------------------------------------------------------------------------

def path_loss_db(distance_m, link_class: str,
                 pathloss_short: tuple[float, float] = (31.5, 40.0),
                 pathloss_long: tuple[float, float] = (31.5, 35.0)):
    """Distance-dependent loss in dB: intercept + slope*log10(d)."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    if link_class == "short":
        a, b = pathloss_short
    elif link_class == "long":
        a, b = pathloss_long
    else:
        raise ValueError(f"link_class must be 'short' or 'long', got {link_class!r}")
    return a + b * np.log10(d)


def path_loss_gain(distance_m, link_class: str,
                   pathloss_short: tuple[float, float] = (31.5, 40.0),
                   pathloss_long: tuple[float, float] = (31.5, 35.0)):
    """Linear power gain 10^(-PL/10) of the distance-dependent loss alone."""
    pl = path_loss_db(distance_m, link_class, pathloss_short, pathloss_long)
    return 10.0 ** (-pl / 10.0)


@dataclass
class ChannelSet:
    """Linear power gains for one fading snapshot.

    Index convention (uplink, transmitter -> receiver):
      g_hh[h, n]          HUE h -> HPN
      g_hl[h, n, l]       HUE h -> LPN l
      g_hd[h, n, l, k]    HUE h -> DUE receiver (l, k)
      g_he[h, n]          HUE h -> eavesdropper on subcarrier n
      g_lh[l, m, n]       LUE (l, m) -> HPN
      g_ll[l, m, n, j]    LUE (l, m) -> LPN j   (j == l is the serving link)
      g_ld[l, m, n, j, k] LUE (l, m) -> DUE receiver (j, k)
      g_le[l, m, n]       LUE (l, m) -> eavesdropper on n
      g_dh[l, k, n]       DUE tx (l, k) -> HPN
      g_dl[l, k, n, j]    DUE tx (l, k) -> LPN j
      g_dd[l, k, n, j, i] DUE tx (l, k) -> DUE receiver (j, i)
      g_de[l, k, n]       DUE tx (l, k) -> eavesdropper on n
    """

    g_hh: np.ndarray
    g_hl: np.ndarray
    g_hd: np.ndarray
    g_he: np.ndarray
    g_lh: np.ndarray
    g_ll: np.ndarray
    g_ld: np.ndarray
    g_le: np.ndarray
    g_dh: np.ndarray
    g_dl: np.ndarray
    g_dd: np.ndarray
    g_de: np.ndarray


def _pairwise_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances between every row of a (..., 2) and of b (..., 2)."""
    diff = a[..., None, :] - b[None, ...] if a.ndim == 2 and b.ndim == 2 else None
    if diff is None:
        raise ValueError("expected flat (n, 2) position arrays")
    return np.hypot(diff[..., 0], diff[..., 1])


def sample_channels(topo: Topology, cfg: NetworkConfig, rng: np.random.Generator,
                    unit_fading: bool = False) -> ChannelSet:
    """Draw one independent Rayleigh fading realization on every (link, subcarrier).

    Gains are path_loss_gain(distance) x |fade|^2 with fade ~ CN(0, 1), so the
    fade power is unit-mean exponential. unit_fading=True pins |fade|^2 = 1
    (test hook: gain equals the pure path loss).
    """
    H, L = cfg.hues, cfg.lpns
    M, K, N = cfg.lues_per_lpn, cfg.dues_per_lpn, cfg.subcarriers
    ps, pl = cfg.pathloss_short, cfg.pathloss_long

    lue_flat = topo.lue.reshape(L * M, 2)
    due_tx_flat = topo.due_tx.reshape(L * K, 2)
    due_rx_flat = topo.due_rx.reshape(L * K, 2)
    hpn_row = topo.hpn[None, :]

    def gain(dist: np.ndarray, klass: str) -> np.ndarray:
        return path_loss_gain(dist, klass, ps, pl)

    # distance tensors (fades add the subcarrier axis below)
    d_hh = _pairwise_dist(topo.hue, hpn_row)[:, 0]                  # (H,)
    d_hl = _pairwise_dist(topo.hue, topo.lpn)                       # (H, L)
    d_hd = _pairwise_dist(topo.hue, due_rx_flat).reshape(H, L, K)   # (H, L, K)
    d_he = _pairwise_dist(topo.hue, topo.eve)                       # (H, N)
    d_lh = _pairwise_dist(lue_flat, hpn_row)[:, 0].reshape(L, M)
    d_ll = _pairwise_dist(lue_flat, topo.lpn).reshape(L, M, L)
    d_ld = _pairwise_dist(lue_flat, due_rx_flat).reshape(L, M, L, K)
    d_le = _pairwise_dist(lue_flat, topo.eve).reshape(L, M, N)
    d_dh = _pairwise_dist(due_tx_flat, hpn_row)[:, 0].reshape(L, K)
    d_dl = _pairwise_dist(due_tx_flat, topo.lpn).reshape(L, K, L)
    d_dd = _pairwise_dist(due_tx_flat, due_rx_flat).reshape(L, K, L, K)
    d_de = _pairwise_dist(due_tx_flat, topo.eve).reshape(L, K, N)

    def fade(shape: tuple[int, ...]) -> np.ndarray:
        if unit_fading:
            return np.ones(shape)
        re = rng.standard_normal(shape)
        im = rng.standard_normal(shape)
        return 0.5 * (re * re + im * im)   # |CN(0,1)|^2, unit mean

    # sampling order is fixed; tests rely on reproducibility per seed
    g_hh = gain(d_hh, "long")[:, None] * fade((H, N))
    g_hl = gain(d_hl, "long")[:, None, :] * fade((H, N, L))
    g_hd = gain(d_hd, "long")[:, None, :, :] * fade((H, N, L, K))
    g_he = gain(d_he, "long") * fade((H, N))
    g_lh = gain(d_lh, "long")[:, :, None] * fade((L, M, N))
    g_ll = gain(d_ll, "short")[:, :, None, :] * fade((L, M, N, L))
    g_ld = gain(d_ld, "short")[:, :, None, :, :] * fade((L, M, N, L, K))
    g_le = gain(d_le, "long") * fade((L, M, N))
    g_dh = gain(d_dh, "long")[:, :, None] * fade((L, K, N))
    g_dl = gain(d_dl, "short")[:, :, None, :] * fade((L, K, N, L))
    g_dd = gain(d_dd, "short")[:, :, None, :, :] * fade((L, K, N, L, K))
    g_de = gain(d_de, "long") * fade((L, K, N))

    return ChannelSet(g_hh=g_hh, g_hl=g_hl, g_hd=g_hd, g_he=g_he,
                      g_lh=g_lh, g_ll=g_ll, g_ld=g_ld, g_le=g_le,
                      g_dh=g_dh, g_dl=g_dl, g_dd=g_dd, g_de=g_de)
