"""Subcarrier assignment: per-cell water-filling heuristic and exhaustive search.

The heuristic treats every (cell, user class) group independently: the macro
cell schedules its HUEs, each pico cell schedules its LUEs and its D2D pairs.
Within a group it maximizes the sum uplink capacity toward the group's own
receiver subject to a leakage budget toward the other tier, via a single
multiplier on the budget and per-subcarrier water-filling. The exhaustive
search enumerates every admissible schedule and keeps the one whose solved
secrecy total is largest; the per-subcarrier structure of both objective and
constraints lets it enumerate subcarrier by subcarrier.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import SearchSpaceError
from .linkmetrics import Allocation
from .netmodel import ChannelSet, NetworkConfig

_LAM_FLOOR = 1e-12      # below this the budget multiplier counts as zero


@dataclass
class CellProblem:
    """One (cell, user class) scheduling group.

    gains[u, n]: direct gain of user u toward the group's serving receiver on
    subcarrier n. leak_gains[u, n]: gain toward the other tier's receiver(s),
    the quantity the interference budget caps. p_max is the per-user transmit
    cap (watts), noise the per-subcarrier receiver noise (watts).
    """

    tag: str
    gains: np.ndarray
    leak_gains: np.ndarray
    i_max: float
    noise: float
    p_max: float

    def __post_init__(self) -> None:
        self.gains = np.asarray(self.gains, dtype=float)
        self.leak_gains = np.asarray(self.leak_gains, dtype=float)
        if self.gains.shape != self.leak_gains.shape or self.gains.ndim != 2:
            raise ValueError("gains and leak_gains must share a (users, N) shape")
        if np.any(self.gains < 0.0) or np.any(self.leak_gains < 0.0):
            raise ValueError("gains must be nonnegative")
        if not self.i_max > 0.0:
            raise ValueError("interference budget must be positive")
        if not self.noise > 0.0 or not self.p_max > 0.0:
            raise ValueError("noise and p_max must be positive")


@dataclass
class CellAssignment:
    """Schedule of one group: picks[n] = chosen user, powers[n] its power."""

    tag: str
    picks: np.ndarray
    powers: np.ndarray
    lam: float
    leakage: float
    converged: bool
    iters: int


def build_cell_problems(ch: ChannelSet, cfg: NetworkConfig) -> list[CellProblem]:
    """The 1 + 2L groups of a snapshot: macro HUEs, each cell's LUEs and DUEs.

    Leakage is measured toward the other tier: HUEs against the summed gain
    into all pico receivers, pico-cell users against their gain into the
    macro receiver.
    """
    probs = [CellProblem(tag="hpn/hue", gains=ch.g_hh,
                         leak_gains=ch.g_hl.sum(axis=2),
                         i_max=cfg.i_max_hue, noise=cfg.noise_w,
                         p_max=cfg.p_max_hue)]
    for l in range(cfg.lpns):
        probs.append(CellProblem(
            tag=f"lpn{l}/lue", gains=ch.g_ll[l, :, :, l],
            leak_gains=ch.g_lh[l], i_max=cfg.i_max_lpn,
            noise=cfg.noise_w, p_max=cfg.p_max_lue))
        own = np.arange(cfg.dues_per_lpn)
        probs.append(CellProblem(
            tag=f"lpn{l}/due", gains=ch.g_dd[l, own, :, l, own],
            leak_gains=ch.g_dh[l], i_max=cfg.i_max_lpn,
            noise=cfg.noise_w, p_max=cfg.p_max_due))
    return probs


def waterfill_powers(prob: CellProblem, lam: float) -> np.ndarray:
    """Per-(user, subcarrier) water-filling power at budget multiplier lam.

    p = clip(1/lam - noise/gain, 0, p_max); a multiplier at or below the
    floor means an unbinding budget, i.e. an infinite water level.
    """
    level = math.inf if lam <= _LAM_FLOOR else 1.0 / lam
    with np.errstate(divide="ignore"):
        floor = np.where(prob.gains > 0.0, prob.noise / prob.gains, math.inf)
    return np.clip(level - floor, 0.0, prob.p_max)


def schedule_at(prob: CellProblem, lam: float):
    """Greedy per-subcarrier pick at a fixed multiplier.

    Each subcarrier goes to the user with the best water-filling utility
    log(1 + p*g/noise); ties break toward the lowest user index. Returns
    (picks, powers of the picks, total leakage of the schedule).
    """
    p = waterfill_powers(prob, lam)
    util = np.log1p(p * prob.gains / prob.noise)
    picks = util.argmax(axis=0)
    cols = np.arange(prob.gains.shape[1])
    powers = p[picks, cols]
    leakage = float((powers * prob.leak_gains[picks, cols]).sum())
    return picks, powers, leakage


def solve_cell(prob: CellProblem, xi0: float = 0.1, max_iter: int = 200,
               tol: float = 1e-6) -> CellAssignment:
    """Search the budget multiplier of one group.

    The budget residual lives in watts x gain, many orders below the
    multiplier scale, so the multiplier moves multiplicatively on the
    normalized residual r = leakage/budget - 1 with a diminishing step:
    lam <- lam * exp(xi0/sqrt(i) * clip(r, -5, 5)). Slack budgets shortcut
    to lam = 0 (the unconstrained schedule is then optimal); the iteration
    stops when the multiplier stops moving.
    """
    picks, powers, leakage = schedule_at(prob, 0.0)
    if leakage <= prob.i_max:
        return CellAssignment(tag=prob.tag, picks=picks, powers=powers, lam=0.0,
                              leakage=leakage, converged=True, iters=0)

    lam = 1.0
    best = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        picks, powers, leakage = schedule_at(prob, lam)
        if leakage <= prob.i_max and (best is None or leakage > best[3]):
            best = (picks, powers, lam, leakage)   # tightest compliant schedule
        r = leakage / prob.i_max - 1.0
        step = lam * (math.exp((xi0 / math.sqrt(it)) * min(max(r, -5.0), 5.0)) - 1.0)
        lam = max(lam + step, 0.0)
        if lam <= _LAM_FLOOR:
            lam = 0.0
        if abs(step) < tol:
            converged = True
            break
    if best is None:
        picks, powers, leakage = schedule_at(prob, lam)
        best = (picks, powers, lam, leakage)
    return CellAssignment(tag=prob.tag, picks=best[0], powers=best[1], lam=best[2],
                          leakage=best[3], converged=converged, iters=it)


def allocate_heuristic(ch: ChannelSet, cfg: NetworkConfig,
                       report: list | None = None) -> Allocation:
    """Per-cell scheduling of all three user classes.

    Runs the multiplier search independently per group and assembles the 0/1
    assignment masks. When `report` is a list, the per-group CellAssignment
    records (multiplier, leakage, convergence flag) are appended to it.
    """
    cells = [solve_cell(p) for p in build_cell_problems(ch, cfg)]
    if report is not None:
        report.extend(cells)

    N = cfg.subcarriers
    cols = np.arange(N)
    a_hue = np.zeros((cfg.hues, N), dtype=int)
    a_hue[cells[0].picks, cols] = 1
    a_lue = np.zeros((cfg.lpns, cfg.lues_per_lpn, N), dtype=int)
    a_due = np.zeros((cfg.lpns, cfg.dues_per_lpn, N), dtype=int)
    for l in range(cfg.lpns):
        a_lue[l, cells[1 + 2 * l].picks, cols] = 1
        a_due[l, cells[2 + 2 * l].picks, cols] = 1
    alloc = Allocation(a_hue=a_hue, a_lue=a_lue, a_due=a_due)
    alloc.validate()
    return alloc


def _broadcast_allocation(cfg: NetworkConfig, h: int, lues: tuple, dues: tuple) -> Allocation:
    """Allocation scheduling the same user tuple on every subcarrier."""
    N = cfg.subcarriers
    a_hue = np.zeros((cfg.hues, N), dtype=int)
    a_hue[h, :] = 1
    a_lue = np.zeros((cfg.lpns, cfg.lues_per_lpn, N), dtype=int)
    a_due = np.zeros((cfg.lpns, cfg.dues_per_lpn, N), dtype=int)
    for l in range(cfg.lpns):
        a_lue[l, lues[l], :] = 1
        a_due[l, dues[l], :] = 1
    return Allocation(a_hue=a_hue, a_lue=a_lue, a_due=a_due)


def count_schedules(cfg: NetworkConfig) -> int:
    """Schedule solves an exhaustive pass needs: N * H * (M*K)^L."""
    per_sub = cfg.hues * (cfg.lues_per_lpn * cfg.dues_per_lpn) ** cfg.lpns
    return cfg.subcarriers * per_sub


def allocate_exhaustive(ch: ChannelSet, cfg: NetworkConfig, power_solver,
                        cap: int = 20_000,
                        solutions: list | None = None) -> Allocation:
    """Optimal assignment by enumeration, one subcarrier at a time.

    Both the secrecy objective and every constraint decompose across
    subcarriers, so composing per-subcarrier argmaxes equals global
    enumeration at N * H * (M*K)^L schedule solves instead of the full
    product. `power_solver` maps a subcarrier problem to its solved state;
    the per-subcarrier winner maximizes (all floors met, clipped secrecy
    sum) lexicographically. Refuses instances above `cap` solves. When
    `solutions` is a list, the winning per-subcarrier solutions are
    appended in subcarrier order.
    """
    from .spectral import build_subcarrier_problem   # local import: no cycle

    total = count_schedules(cfg)
    if total > cap:
        raise SearchSpaceError(
            f"exhaustive search needs {total} schedule solves, cap is {cap}")

    member_tuples = list(itertools.product(
        range(cfg.hues),
        itertools.product(range(cfg.lues_per_lpn), repeat=cfg.lpns),
        itertools.product(range(cfg.dues_per_lpn), repeat=cfg.lpns)))

    N = cfg.subcarriers
    best = [None] * N          # (score, combo index, solution) per subcarrier
    for ci, (h, lues, dues) in enumerate(member_tuples):
        alloc = _broadcast_allocation(cfg, h, lues, dues)
        for n in range(N):
            sol = power_solver(build_subcarrier_problem(ch, alloc, cfg, n))
            score = (bool(sol.feasible),
                     float(np.maximum(sol.secrecy, 0.0).sum()))
            if best[n] is None or score > best[n][0]:
                best[n] = (score, ci, sol)

    a_hue = np.zeros((cfg.hues, N), dtype=int)
    a_lue = np.zeros((cfg.lpns, cfg.lues_per_lpn, N), dtype=int)
    a_due = np.zeros((cfg.lpns, cfg.dues_per_lpn, N), dtype=int)
    for n in range(N):
        h, lues, dues = member_tuples[best[n][1]]
        a_hue[h, n] = 1
        for l in range(cfg.lpns):
            a_lue[l, lues[l], n] = 1
            a_due[l, dues[l], n] = 1
        if solutions is not None:
            solutions.append(best[n][2])
    alloc = Allocation(a_hue=a_hue, a_lue=a_lue, a_due=a_due)
    alloc.validate()
    return alloc
