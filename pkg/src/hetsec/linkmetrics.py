"""Per-link SINRs, secrecy capacities and QoS checks.

Uplink on each subcarrier: the scheduled HUE transmits to the HPN, each LPN's
scheduled LUE transmits to its LPN, each LPN's scheduled DUE transmitter to
its paired receiver. Every receiver (HPN, LPNs, DUE receivers, eavesdroppers)
sees bandwidth x noise-PSD thermal noise plus co-channel interference from all
other scheduled transmitters, with these carve-outs baked into the model:

  - HUE uplink: interference from all LUEs and all DUEs (no other HUE is
    scheduled on the same subcarrier).
  - LUE uplink at LPN l: interference from HUEs, other cells' LUEs, all DUEs.
  - DUE link (l, k): interference from HUEs, all LUEs, other cells' DUEs.
  - At the eavesdropper the same exclusions apply to each user's own class;
    every other scheduled transmission acts as jamming.

Secrecy capacity per (user, subcarrier): B*(log2(1+sinr) - log2(1+sinr_eve)),
kept signed; reporting helpers also expose the clipped max(., 0) view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import ChannelSet, NetworkConfig

_LN2 = float(np.log(2.0))


@dataclass
class Allocation:
    """0/1 subcarrier assignments; exactly one user per (cell, class, subcarrier).

    a_hue[h, n], a_lue[l, m, n], a_due[l, k, n].
    """

    a_hue: np.ndarray
    a_lue: np.ndarray
    a_due: np.ndarray

    def validate(self) -> None:
        for name, a in (("a_hue", self.a_hue), ("a_lue", self.a_lue), ("a_due", self.a_due)):
            vals = np.unique(a)
            if not np.all(np.isin(vals, (0, 1))):
                raise ValueError(f"{name} entries must be 0 or 1")
        if not np.all(self.a_hue.sum(axis=0) == 1):
            raise ValueError("each subcarrier needs exactly one scheduled HUE")
        if not np.all(self.a_lue.sum(axis=1) == 1):
            raise ValueError("each (LPN, subcarrier) needs exactly one scheduled LUE")
        if not np.all(self.a_due.sum(axis=1) == 1):
            raise ValueError("each (LPN, subcarrier) needs exactly one scheduled DUE pair")


@dataclass
class PowerProfile:
    """Transmit powers in watts, same shapes as the allocation masks."""

    p_hue: np.ndarray
    p_lue: np.ndarray
    p_due: np.ndarray

    def validate(self, alloc: Allocation, cfg: NetworkConfig, tol: float = 1e-9) -> None:
        caps = ((self.p_hue, alloc.a_hue, cfg.p_max_hue, "p_hue"),
                (self.p_lue, alloc.a_lue, cfg.p_max_lue, "p_lue"),
                (self.p_due, alloc.a_due, cfg.p_max_due, "p_due"))
        for p, a, cap, name in caps:
            if np.any(p < -tol) or np.any(p > cap + tol):
                raise ValueError(f"{name} outside [0, p_max]")
            if np.any((a == 0) & (np.abs(p) > tol)):
                raise ValueError(f"{name} nonzero where allocation is zero")


def uniform_power(alloc: Allocation, cfg: NetworkConfig, fraction: float = 1.0) -> PowerProfile:
    """fraction x p_max on every scheduled (user, subcarrier), zero elsewhere."""
    return PowerProfile(
        p_hue=alloc.a_hue * (fraction * cfg.p_max_hue),
        p_lue=alloc.a_lue * (fraction * cfg.p_max_lue),
        p_due=alloc.a_due * (fraction * cfg.p_max_due),
    )


@dataclass
class SinrReport:
    """Linear SINRs toward the legitimate receivers and the eavesdroppers.

    Entries are zero wherever the matching allocation entry is zero.
    """

    rho_hue: np.ndarray       # (H, N)
    rho_lue: np.ndarray       # (L, M, N)
    rho_due: np.ndarray       # (L, K, N)
    rho_hue_eve: np.ndarray   # (H, N)
    rho_lue_eve: np.ndarray   # (L, M, N)
    rho_due_eve: np.ndarray   # (L, K, N)


def _masked_powers(alloc: Allocation, pw: PowerProfile):
    return alloc.a_hue * pw.p_hue, alloc.a_lue * pw.p_lue, alloc.a_due * pw.p_due


def legit_sinrs(ch: ChannelSet, alloc: Allocation, pw: PowerProfile,
                cfg: NetworkConfig):
    """SINRs toward HPN / serving LPN / DUE receiver. Returns (hue, lue, due) arrays."""
    qh, ql, qd = _masked_powers(alloc, pw)
    noise = cfg.noise_w

    # --- HUE -> HPN -------------------------------------------------------
    i_hpn = (np.einsum("lmn,lmn->n", ql, ch.g_lh)
             + np.einsum("lkn,lkn->n", qd, ch.g_dh))
    rho_hue = qh * ch.g_hh / (i_hpn[None, :] + noise)

    # Other-cell sums are built with an off-diagonal cell mask rather than
    # "all cells minus own cell": the subtraction cancels catastrophically
    # when the own-cell term dominates the total.
    L = ql.shape[0]
    off_diag = 1.0 - np.eye(L)

    # --- LUE -> serving LPN ----------------------------------------------
    own_ll = np.einsum("lmnl->lmn", ch.g_ll)
    i_from_h = np.einsum("hn,hnl->ln", qh, ch.g_hl)            # HUEs at LPN l
    lue_percell = np.einsum("jin,jinl->jln", ql, ch.g_ll)      # cell j's LUE at LPN l
    other_lue = np.einsum("jln,jl->ln", lue_percell, off_diag)
    i_from_d = np.einsum("jkn,jknl->ln", qd, ch.g_dl)          # all DUEs
    i_lpn = i_from_h + other_lue + i_from_d                    # (L, N)
    rho_lue = ql * own_ll / (i_lpn[:, None, :] + noise)

    # --- DUE tx -> DUE rx -------------------------------------------------
    own_dd = np.einsum("lknlk->lkn", ch.g_dd)
    i_from_h_d = np.einsum("hn,hnlk->lkn", qh, ch.g_hd)
    i_from_l_d = np.einsum("jmn,jmnlk->lkn", ql, ch.g_ld)
    due_percell = np.einsum("jin,jinlk->jlkn", qd, ch.g_dd)    # cell j's DUE at rx (l,k)
    other_due = np.einsum("jlkn,jl->lkn", due_percell, off_diag)
    i_due = i_from_h_d + i_from_l_d + other_due
    rho_due = qd * own_dd / (i_due + noise)

    return rho_hue, rho_lue, rho_due


def eve_sinrs(ch: ChannelSet, alloc: Allocation, pw: PowerProfile,
              cfg: NetworkConfig):
    """SINRs of each user's signal at the subcarrier eavesdropper."""
    qh, ql, qd = _masked_powers(alloc, pw)
    noise = cfg.noise_w

    L = ql.shape[0]
    off_diag = 1.0 - np.eye(L)
    at_eve_h = np.einsum("hn,hn->n", qh, ch.g_he)              # (N,) HUE power at eve
    at_eve_l_cell = np.einsum("lmn,lmn->ln", ql, ch.g_le)      # per-cell LUE share
    at_eve_d_cell = np.einsum("lkn,lkn->ln", qd, ch.g_de)
    at_eve_l = at_eve_l_cell.sum(axis=0)
    at_eve_d = at_eve_d_cell.sum(axis=0)
    other_l = np.einsum("jn,jl->ln", at_eve_l_cell, off_diag)  # cells != l
    other_d = np.einsum("jn,jl->ln", at_eve_d_cell, off_diag)

    # HUE signal: all LUE + all DUE transmissions jam the eavesdropper
    rho_hue_eve = qh * ch.g_he / (at_eve_l[None, :] + at_eve_d[None, :] + noise)

    # LUE (l, m): HUEs + other cells' LUEs + all DUEs
    i_lue_eve = at_eve_h[None, :] + other_l + at_eve_d[None, :]
    rho_lue_eve = ql * ch.g_le / (i_lue_eve[:, None, :] + noise)

    # DUE (l, k): HUEs + all LUEs + other cells' DUEs
    i_due_eve = at_eve_h[None, :] + at_eve_l[None, :] + other_d
    rho_due_eve = qd * ch.g_de / (i_due_eve[:, None, :] + noise)

    return rho_hue_eve, rho_lue_eve, rho_due_eve


def sinr_report(ch: ChannelSet, alloc: Allocation, pw: PowerProfile,
                cfg: NetworkConfig) -> SinrReport:
    rho_hue, rho_lue, rho_due = legit_sinrs(ch, alloc, pw, cfg)
    rho_hue_eve, rho_lue_eve, rho_due_eve = eve_sinrs(ch, alloc, pw, cfg)
    return SinrReport(rho_hue=rho_hue, rho_lue=rho_lue, rho_due=rho_due,
                      rho_hue_eve=rho_hue_eve, rho_lue_eve=rho_lue_eve,
                      rho_due_eve=rho_due_eve)


def secrecy_capacity(rho, rho_eve, bandwidth: float):
    """Signed secrecy rate in bits/s: B*(log2(1+rho) - log2(1+rho_eve))."""
    rho = np.asarray(rho, dtype=float)
    rho_eve = np.asarray(rho_eve, dtype=float)
    if np.any(rho < 0.0) or np.any(rho_eve < 0.0):
        raise ValueError("SINRs must be nonnegative")
    return bandwidth * (np.log1p(rho) - np.log1p(rho_eve)) / _LN2


@dataclass
class SecrecyReport:
    """Signed per-(user, subcarrier) secrecy rates in bits/s plus totals."""

    c_hue: np.ndarray         # (H, N)
    c_lue: np.ndarray         # (L, M, N)
    c_due: np.ndarray         # (L, K, N)

    @property
    def per_user_hue(self) -> np.ndarray:
        return self.c_hue.sum(axis=-1)

    @property
    def per_user_lue(self) -> np.ndarray:
        return self.c_lue.sum(axis=-1)

    @property
    def per_user_due(self) -> np.ndarray:
        return self.c_due.sum(axis=-1)

    @property
    def total(self) -> float:
        """Signed network total, bits/s."""
        return float(self.c_hue.sum() + self.c_lue.sum() + self.c_due.sum())

    @property
    def total_clipped(self) -> float:
        """Reporting view: negative (user, subcarrier) entries count as zero."""
        return float(np.maximum(self.c_hue, 0.0).sum()
                     + np.maximum(self.c_lue, 0.0).sum()
                     + np.maximum(self.c_due, 0.0).sum())


def network_secrecy(ch: ChannelSet, alloc: Allocation, pw: PowerProfile,
                    cfg: NetworkConfig) -> SecrecyReport:
    """Secrecy rates of every scheduled (user, subcarrier) under one snapshot."""
    rep = sinr_report(ch, alloc, pw, cfg)
    B = cfg.bandwidth_per_subcarrier
    return SecrecyReport(
        c_hue=secrecy_capacity(rep.rho_hue, rep.rho_hue_eve, B),
        c_lue=secrecy_capacity(rep.rho_lue, rep.rho_lue_eve, B),
        c_due=secrecy_capacity(rep.rho_due, rep.rho_due_eve, B),
    )


def qos_feasible(report: SecrecyReport, cfg: NetworkConfig):
    """Per-user QoS test: summed signed secrecy >= class threshold.

    Thresholds are in bits/s/Hz referenced to one subcarrier bandwidth, so a
    user passes iff sum_n secrecy_bps >= c_min * bandwidth_per_subcarrier.
    Returns boolean arrays (hue (H,), lue (L, M), due (L, K)).
    """
    B = cfg.bandwidth_per_subcarrier
    ok_hue = report.per_user_hue >= cfg.c_min_hue * B - 1e-9
    ok_lue = report.per_user_lue >= cfg.c_min_lue * B - 1e-9
    ok_due = report.per_user_due >= cfg.c_min_due * B - 1e-9
    return ok_hue, ok_lue, ok_due
