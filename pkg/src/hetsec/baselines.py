"""Reference transmission schemes sharing one evaluation path.

Five schemes produce (allocation, power) pairs for a channel snapshot: the
optimized scheme (heuristic assignment + per-subcarrier power solver), an
exhaustive-search upper bound, a greedy interference-avoidance reassignment
at full power, an orthogonal class partition at full power, and fixed-power
transmission. Every scheme is scored through the same link-metric evaluation
so totals are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .linkmetrics import (Allocation, PowerProfile, SecrecyReport,
                          network_secrecy, qos_feasible, uniform_power)
from .netmodel import ChannelSet, NetworkConfig
from .solver import (SolverOptions, outer_solve, power_profile_from_solutions,
                     solve_network)
from .suballoc import allocate_exhaustive, allocate_heuristic


@dataclass
class BaselineResult:
    """One scheme's outcome on one snapshot, in a shared reporting shape."""

    scheme: str
    allocation: Allocation
    powers: PowerProfile
    report: SecrecyReport
    qos_flags: tuple
    feasible: bool
    outer_iters: int = 0

    @property
    def total_secrecy_bps(self) -> float:
        return self.report.total_clipped

    @property
    def class_totals_bps(self) -> tuple:
        """Clipped secrecy split (HUE, LUE, DUE); sums to the total."""
        return (float(np.maximum(self.report.c_hue, 0.0).sum()),
                float(np.maximum(self.report.c_lue, 0.0).sum()),
                float(np.maximum(self.report.c_due, 0.0).sum()))


def evaluate_profile(ch: ChannelSet, alloc: Allocation, pw: PowerProfile,
                     cfg: NetworkConfig, scheme: str,
                     outer_iters: int = 0) -> BaselineResult:
    """Score an (allocation, power) pair; the one path every scheme uses."""
    pw.validate(alloc, cfg)
    report = network_secrecy(ch, alloc, pw, cfg)
    flags = qos_feasible(report, cfg)
    feasible = bool(all(np.all(f) for f in flags))
    return BaselineResult(scheme=scheme, allocation=alloc, powers=pw,
                          report=report, qos_flags=flags, feasible=feasible,
                          outer_iters=outer_iters)


def proposed(ch: ChannelSet, cfg: NetworkConfig,
             options: SolverOptions | None = None,
             trace: list | None = None) -> BaselineResult:
    """Heuristic subcarrier assignment + optimized per-subcarrier powers."""
    alloc = allocate_heuristic(ch, cfg)
    ns = solve_network(ch, alloc, cfg, options=options, trace=trace)
    pw = PowerProfile(*power_profile_from_solutions(ns.solutions, alloc, cfg))
    return evaluate_profile(ch, alloc, pw, cfg, "proposed",
                            outer_iters=ns.outer_iters)


def upper_bound(ch: ChannelSet, cfg: NetworkConfig,
                options: SolverOptions | None = None,
                cap: int = 20_000) -> BaselineResult:
    """Exhaustive assignment search with the full power solver per schedule."""
    alloc = allocate_exhaustive(
        ch, cfg, lambda sp: outer_solve(sp, options=options), cap=cap)
    ns = solve_network(ch, alloc, cfg, options=options)
    pw = PowerProfile(*power_profile_from_solutions(ns.solutions, alloc, cfg))
    return evaluate_profile(ch, alloc, pw, cfg, "upper_bound",
                            outer_iters=ns.outer_iters)


def _inflicted_interference(ch: ChannelSet, cfg: NetworkConfig) -> list:
    """Per-group (users, N) interference each user would inflict at p_max.

    Counts power landing on receivers other than the user's own: for HUEs the
    pico receivers, for LUEs/DUEs the macro receiver plus other pico cells,
    for DUEs also the serving pico cell (a D2D link's receiver is its peer).
    """
    out = [cfg.p_max_hue * ch.g_hl.sum(axis=2)]                 # HUE -> LPNs
    for l in range(cfg.lpns):
        others = [j for j in range(cfg.lpns) if j != l]
        lue = ch.g_lh[l] + ch.g_ll[l, :, :, others].sum(axis=0)
        out.append(cfg.p_max_lue * lue)
        due = ch.g_dh[l] + ch.g_dl[l].sum(axis=2)               # all LPNs
        out.append(cfg.p_max_due * due)
    return out


def interference_avoidance(ch: ChannelSet, cfg: NetworkConfig) -> BaselineResult:
    """Move loud users off their subcarriers, then transmit at full power.

    Starting from the heuristic assignment, each scheduling group flags users
    whose inflicted interference on their assigned subcarrier exceeds the
    group median, and sends each flagged user to the subcarrier where it
    inflicts least (single pass, groups then subcarriers in ascending order,
    ties to the lowest index). A move is a swap with the target's occupant so
    the one-user-per-subcarrier shape is preserved.
    """
    alloc = allocate_heuristic(ch, cfg)
    inflicted = _inflicted_interference(ch, cfg)
    picks = [alloc.a_hue.argmax(axis=0)]
    for l in range(cfg.lpns):
        picks.append(alloc.a_lue[l].argmax(axis=0))
        picks.append(alloc.a_due[l].argmax(axis=0))

    N = cfg.subcarriers
    for g, (I, pk) in enumerate(zip(inflicted, picks)):
        assigned = I[pk, np.arange(N)]
        thresh = float(np.median(assigned))
        for n in range(N):
            u = pk[n]
            if not I[u, n] > thresh:
                continue
            target = int(I[u].argmin())
            if target == n:
                continue
            pk[n], pk[target] = pk[target], u   # swap with the occupant

    cols = np.arange(N)
    a_hue = np.zeros_like(alloc.a_hue)
    a_hue[picks[0], cols] = 1
    a_lue = np.zeros_like(alloc.a_lue)
    a_due = np.zeros_like(alloc.a_due)
    for l in range(cfg.lpns):
        a_lue[l, picks[1 + 2 * l], cols] = 1
        a_due[l, picks[2 + 2 * l], cols] = 1
    moved = Allocation(a_hue=a_hue, a_lue=a_lue, a_due=a_due)
    moved.validate()
    pw = uniform_power(moved, cfg, fraction=1.0)
    return evaluate_profile(ch, moved, pw, cfg, "interference_avoidance")


def orthogonal_blocks(cfg: NetworkConfig) -> tuple:
    """Split subcarriers into contiguous HUE/LUE/DUE blocks by class size.

    Largest-remainder apportionment with weights (H, L*M, L*K); remainder
    ties favor the D2D class, then LUEs. With fewer subcarriers than classes
    the smallest-quota classes get an empty block. Returns three index
    arrays covering range(N) disjointly, HUE block first.
    """
    if cfg.subcarriers < 2:
        raise ConfigurationError("orthogonal partition needs >= 2 subcarriers")
    w = np.array([cfg.hues, cfg.lpns * cfg.lues_per_lpn,
                  cfg.lpns * cfg.dues_per_lpn], dtype=float)
    quota = cfg.subcarriers * w / w.sum()
    sizes = np.floor(quota).astype(int)
    frac = quota - sizes
    order = sorted(range(3), key=lambda c: (-frac[c], (2, 1, 0)[c]))
    for c in order[: cfg.subcarriers - int(sizes.sum())]:
        sizes[c] += 1
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return tuple(np.arange(edges[c], edges[c + 1]) for c in range(3))


def orthogonal_allocation(ch: ChannelSet, cfg: NetworkConfig) -> BaselineResult:
    """Dedicated subcarrier blocks per user class, full power inside them.

    Within a class block, users are assigned round-robin; each class
    transmits only inside its own block, so cross-class interference is zero
    by construction. Same-class users of different cells still share their
    block. The scheduling masks stay defined on every subcarrier (shape
    invariant); power carries the block structure.
    """
    blocks = orthogonal_blocks(cfg)
    N = cfg.subcarriers
    cols = np.arange(N)
    a_hue = np.zeros((cfg.hues, N), dtype=int)
    a_hue[cols % cfg.hues, cols] = 1
    a_lue = np.zeros((cfg.lpns, cfg.lues_per_lpn, N), dtype=int)
    a_due = np.zeros((cfg.lpns, cfg.dues_per_lpn, N), dtype=int)
    for l in range(cfg.lpns):
        a_lue[l, cols % cfg.lues_per_lpn, cols] = 1
        a_due[l, cols % cfg.dues_per_lpn, cols] = 1
    alloc = Allocation(a_hue=a_hue, a_lue=a_lue, a_due=a_due)
    alloc.validate()

    base = uniform_power(alloc, cfg, fraction=1.0)
    mask = np.zeros((3, N))
    for c in range(3):
        mask[c, blocks[c]] = 1.0
    pw = PowerProfile(p_hue=base.p_hue * mask[0], p_lue=base.p_lue * mask[1],
                      p_due=base.p_due * mask[2])
    return evaluate_profile(ch, alloc, pw, cfg, "orthogonal")


def fixed_power(ch: ChannelSet, cfg: NetworkConfig) -> BaselineResult:
    """Heuristic assignment with every user at a fixed fraction of p_max."""
    alloc = allocate_heuristic(ch, cfg)
    pw = uniform_power(alloc, cfg, fraction=cfg.fixed_power_fraction)
    return evaluate_profile(ch, alloc, pw, cfg, "fixed_power")
