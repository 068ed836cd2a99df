"""Per-subcarrier secrecy-rate solver: dual subgradient outer loop around a
proximal-gradient inner loop, followed by a direct power polish.

The convexified problem optimizes legitimate rates C and wiretap rates C_e
(nats) under per-user secrecy floors C - C_e >= c_min and the spectral power
caps from `spectral.cap_constraint_matrices`. Multipliers: lambda for the
secrecy floors, beta for the legitimate power caps, mu for the wiretap caps.

The dual trajectory pushes rates toward the cap surface; it does not by
itself distinguish interior optima. Every outer iterate is therefore scored
through the exact physics (recover power, recompute both channels) and the
best genuinely feasible candidate wins; a deterministic per-user grid polish
sharpens it afterwards. Reported solutions are always consistent with one
recovered power vector: C_e is recomputed from that power on the wiretap
channel, whatever the optimizer's surrogate C_e was.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InfeasibleRateError
from .linkmetrics import Allocation
from .netmodel import ChannelSet, NetworkConfig
from .spectral import (
    ConstraintMatrices,
    NormalizedSystem,
    SubcarrierProblem,
    build_subcarrier_problem,
    cap_constraint_matrices,
    eve_log_sigma,
    eve_sigma_gradient,
    normalize_system,
    perron_pairs_batch,
    power_from_rates,
    rates_from_power,
    sinr_from_power,
)

_LN2 = float(np.log(2.0))


@dataclass
class SolverOptions:
    """Tuning knobs for the dual solver; defaults target fast movement decay."""

    xi0_lambda: float = 0.5       # initial step, secrecy-floor multipliers
    xi0_beta: float = 0.5         # initial step, legitimate cap multipliers
    xi0_mu: float = 0.2           # initial step, wiretap cap multipliers
    decay: float = 0.3            # geometric step decay per outer iteration
    tau: float = 1.0              # inner gradient step (backtracked by halving)
    max_outer: int = 200
    delta: float = 1e-3           # outer stop: multiplier movement
    max_inner: int = 500
    eta: float = 1e-6             # inner stop: iterate movement
    init_multiplier: float = 1.0
    rate_cap: float = 60.0        # nats; ceiling on the projection boxes
    residual_clip: float = 10.0   # clip dual residuals before stepping
    polish_points: int = 25       # log-spaced grid points per user
    polish_sweeps: int = 2        # grid-ascent sweeps per refinement stage
    polish_pair_limit: int = 4    # joint two-user sweeps only up to this J
    polish_starts: int = 3        # distinct candidates polished at the end


@dataclass
class RateState:
    """Decision variables of the convexified problem (both in nats)."""

    C: np.ndarray
    C_e: np.ndarray

    def copy(self) -> "RateState":
        return RateState(self.C.copy(), self.C_e.copy())


@dataclass
class DualState:
    """Multipliers with their current steps and the loop control constants."""

    lam: np.ndarray
    beta: np.ndarray
    mu: np.ndarray
    xi_lambda: float
    xi_beta: float
    xi_mu: float
    tau: float
    outer_iter: int = 0
    I_max: int = 200
    S_max: int = 500
    delta: float = 1e-3
    eta: float = 1e-6
    rate_cap: np.ndarray | float = 60.0      # per-user box for C, nats
    eve_rate_cap: np.ndarray | float = 60.0  # per-user box for C_e, nats

    @classmethod
    def from_options(cls, size: int, opts: SolverOptions,
                     rate_cap=None, eve_rate_cap=None) -> "DualState":
        m = opts.init_multiplier
        if rate_cap is None:
            rate_cap = opts.rate_cap
        if eve_rate_cap is None:
            eve_rate_cap = opts.rate_cap
        return cls(lam=np.full(size, m), beta=np.full(size, m), mu=np.full(size, m),
                   xi_lambda=opts.xi0_lambda, xi_beta=opts.xi0_beta,
                   xi_mu=opts.xi0_mu, tau=opts.tau, outer_iter=0,
                   I_max=opts.max_outer, S_max=opts.max_inner,
                   delta=opts.delta, eta=opts.eta, rate_cap=rate_cap,
                   eve_rate_cap=eve_rate_cap)


@dataclass
class SubcarrierSolution:
    """Solved allocation for the scheduled users of one subcarrier."""

    subcarrier: int
    users: list
    rates: RateState              # C and the recomputed C_e, nats
    power: np.ndarray             # (J,) watts
    secrecy: np.ndarray           # (J,) C - C_e, nats (signed)
    converged: bool               # dual movement met delta AND floors hold
    dual_converged: bool
    feasible: bool                # all secrecy floors met
    outer_iters: int
    inner_iters: int
    qos_violation: np.ndarray     # (J,) max(0, c_min - secrecy), nats
    dual_values: list = field(default_factory=list)
    movement: list = field(default_factory=list)


@dataclass
class NetworkSolution:
    """All subcarrier solutions plus network totals (bits/s)."""

    solutions: list
    total_secrecy_bps: float          # sum of clipped per-user secrecy
    total_secrecy_raw_bps: float      # signed sum
    feasible: bool
    outer_iters: int                  # worst subcarrier
    inner_iters: int                  # total across subcarriers


# --------------------------------------------------------------------------
# dual building blocks
# --------------------------------------------------------------------------

def _pf_eval(stack: np.ndarray, rates: np.ndarray, cache: dict | None, key: str):
    """rho, x, y of stack[j] @ diag(e^rates) for all j, warm-started."""
    mats = np.maximum(stack, 0.0) * np.exp(rates)[None, None, :]
    x0 = y0 = None
    if cache is not None:
        x0 = cache.get(key + ":x")
        y0 = cache.get(key + ":y")
    rho, x, y = perron_pairs_batch(mats, max_iter=20_000, x0=x0, y0=y0,
                                   slack=np.inf)
    if cache is not None:
        cache[key + ":x"] = x
        cache[key + ":y"] = y
    return rho, x, y


def _log_rho(rho: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(rho, 1e-300))


def lagrangian(rs: RateState, ds: DualState, cm: ConstraintMatrices,
               c_min: np.ndarray) -> float:
    """Dual objective integrand: linear secrecy objective plus weighted
    floor slacks minus weighted log spectral radii of both cap families."""
    rho_l, _, _ = _pf_eval(cm.cap_spectral, rs.C, None, "")
    value = float(np.sum(rs.C) - np.sum(rs.C_e))
    value += float(ds.lam @ (rs.C - rs.C_e - c_min))
    value -= float(ds.beta @ _log_rho(rho_l))
    value -= float(ds.mu @ eve_log_sigma(cm, rs.C_e))
    return value


def grad_f(rs: RateState, ds: DualState, cm: ConstraintMatrices,
           cache: dict | None = None):
    """Gradient of the smooth dual part f = -sum_j beta_j log rho_j(C)
    - sum_j mu_j log sigma_j(C_e). Each legitimate log-radius differentiates
    to the elementwise product of its right and left eigenvectors (y @ x = 1);
    the wiretap side uses the closed-form pencil gradient."""
    _, xl, yl = _pf_eval(cm.cap_spectral, rs.C, cache, "legit")
    dC = -np.einsum("j,ji->i", ds.beta, xl * yl)
    dC_e = -ds.mu @ eve_sigma_gradient(cm, rs.C_e)
    return dC, dC_e


def prox_g(rs: RateState, lam: np.ndarray) -> np.ndarray:
    """Componentwise map (1 + lambda) * (C - C_e - 1).

    This is the update the iteration applies verbatim; it collapses the level
    of C and keeps only the difference, so absolute rate levels are steered
    entirely by the multipliers (see the inner loop).
    """
    return (1.0 + lam) * (rs.C - rs.C_e - 1.0)


def inner_solve(ds: DualState, cm: ConstraintMatrices, rs0: RateState,
                cache: dict | None = None):
    """Iterate the proximal map at fixed multipliers.

    Updates (step tau backtracked by halving until the move is finite and no
    larger than the previous accepted move):
        C^{s+1}   = prox_g(C^s - tau * df/dC, C_e^s)
        C_e^{s+1} = prox_g(C^s, C_e^s - tau * df/dC_e)
    followed by projection onto [0, rate_cap]. The linear part of the map is
    nilpotent in (C - C_e), so convergence is a handful of steps away from
    pathological gradients. The projection boxes can trap the map in a short
    cycle instead; iterating a cycle adds nothing, so the loop also stops
    once the movement has not improved for several steps. Returns
    (state, iterations, converged).
    """
    C = rs0.C.copy()
    C_e = rs0.C_e.copy()
    cap = ds.rate_cap
    ecap = ds.eve_rate_cap
    prev_move = np.inf
    best_move = np.inf
    since_best = 0
    for s in range(1, ds.S_max + 1):
        dC, dC_e = grad_f(RateState(C, C_e), ds, cm, cache)
        tau = ds.tau
        for _ in range(30):
            c_new = prox_g(RateState(C - tau * dC, C_e), ds.lam)
            e_new = prox_g(RateState(C, C_e - tau * dC_e), ds.lam)
            c_new = np.clip(c_new, 0.0, cap)
            e_new = np.clip(e_new, 0.0, ecap)
            move = float(np.max(np.abs(c_new - C)) + np.max(np.abs(e_new - C_e)))
            if np.isfinite(move) and move <= prev_move + 1e-12:
                break
            tau *= 0.5
        C, C_e = c_new, e_new
        prev_move = move
        if move <= ds.eta:
            return RateState(C, C_e), s, True
        if move < 0.9 * best_move:
            best_move = move
            since_best = 0
        else:
            since_best += 1
            if since_best >= 8:
                return RateState(C, C_e), s, False
    return RateState(C, C_e), ds.S_max, False


# --------------------------------------------------------------------------
# candidate scoring on the exact physics
# --------------------------------------------------------------------------

def _score_powers(sys: NormalizedSystem, P: np.ndarray, c_min: np.ndarray,
                  p_total_scale: float):
    """Score a stack of power vectors (M, J) in one physics evaluation.

    Returns the four lexicographic key arrays, each of shape (M,): feasible
    flag, negated floor-violation sum, clipped secrecy sum, negated total
    power over scale. Bigger is better, compared left to right.
    """
    S = P / (P @ sys.coupling.T + sys.noise_norm)
    Se = P / (P @ sys.eve_coupling.T + sys.eve_noise_norm)
    diff = np.log1p(S) - np.log1p(Se)
    viol = np.maximum(0.0, c_min - diff)
    feas = (viol.max(axis=1) <= 1e-9).astype(float)
    return (feas, -viol.sum(axis=1), np.maximum(diff, 0.0).sum(axis=1),
            -P.sum(axis=1) / p_total_scale)


def _row_score(keys, m: int):
    return (float(keys[0][m]), float(keys[1][m]),
            float(keys[2][m]), float(keys[3][m]))


def _best_row(keys) -> int:
    """Index of the lexicographically best row of `_score_powers` keys."""
    feas, nviol, clipped, npow = keys
    return int(np.lexsort((npow, clipped, nviol, feas))[-1])


def _score_power(sys: NormalizedSystem, p: np.ndarray, c_min: np.ndarray,
                 p_total_scale: float):
    """Rank a power vector: secrecy floors first, then clipped secrecy sum,
    then (on ties) lower total power. Returns (score_tuple, c, c_e)."""
    c, c_e = rates_from_power(sys, p)
    score = _row_score(_score_powers(sys, p[None], c_min, p_total_scale), 0)
    return score, c, c_e


def _try_rates_candidate(sys: NormalizedSystem, rates: np.ndarray,
                         p_max: np.ndarray):
    """Map a rate vector to an in-box power vector, if the rates admit one."""
    try:
        p = power_from_rates(sys, np.maximum(rates, 0.0))
    except (InfeasibleRateError, ConvergenceError):
        return None
    if np.any(p > p_max * (1.0 + 1e-9)):
        p = np.minimum(p, p_max)
    return p


def _polish_grid(p_max_j: float, points: int) -> np.ndarray:
    grid = p_max_j * np.concatenate(
        ([0.0], 10.0 ** np.linspace(-6.0, 0.0, points), np.linspace(0.125, 1.0, 8)))
    return np.unique(grid)


def _local_grid(center: float, p_max_j: float, factor: float) -> np.ndarray:
    """Multiplicative grid around `center`, clamped to [0, p_max_j]."""
    if center <= p_max_j * 1e-12:
        return np.array([0.0, p_max_j * 1e-6, p_max_j * 1e-3])
    g = np.minimum(center * np.geomspace(1.0 / factor, factor, 13), p_max_j)
    return np.unique(np.concatenate(([0.0, center], g)))


def _coordinate_polish(sys: NormalizedSystem, p0: np.ndarray, p_max: np.ndarray,
                       c_min: np.ndarray, opts: SolverOptions):
    """Grid ascent on the exact objective; deterministic.

    Cyclic per-user sweeps, plus joint two-user sweeps when the user count
    is small enough for the product grids to stay cheap, run first on a
    global grid and then on shrinking multiplicative grids around the
    incumbent. The joint sweeps are what gets past ridges that block
    one-coordinate moves in interference-coupled objectives.
    """
    scale = float(p_max.sum())
    J = p0.shape[0]
    p = p0.copy()
    best = _row_score(_score_powers(sys, p[None], c_min, scale), 0)
    pairs = J <= opts.polish_pair_limit
    for factor in (0.0, 2.0, 1.3, 1.08):
        if factor:
            grids = [_local_grid(p[j], p_max[j], factor) for j in range(J)]
        else:
            grids = [_polish_grid(p_max[j], opts.polish_points) for j in range(J)]
        for _ in range(max(1, opts.polish_sweeps)):
            improved = False
            for j in range(J):
                Q = np.repeat(p[None], grids[j].shape[0], axis=0)
                Q[:, j] = grids[j]
                keys = _score_powers(sys, Q, c_min, scale)
                m = _best_row(keys)
                score = _row_score(keys, m)
                if score > best:
                    best, p, improved = score, Q[m].copy(), True
            if pairs:
                for i in range(J - 1):
                    for j in range(i + 1, J):
                        gi, gj = grids[i], grids[j]
                        Q = np.repeat(p[None], gi.shape[0] * gj.shape[0], axis=0)
                        Q[:, i] = np.repeat(gi, gj.shape[0])
                        Q[:, j] = np.tile(gj, gi.shape[0])
                        keys = _score_powers(sys, Q, c_min, scale)
                        m = _best_row(keys)
                        score = _row_score(keys, m)
                        if score > best:
                            best, p, improved = score, Q[m].copy(), True
            if not improved:
                break
    return p, best


# --------------------------------------------------------------------------
# outer loop
# --------------------------------------------------------------------------

def outer_solve(sp: SubcarrierProblem, options: SolverOptions | None = None,
                trace: list | None = None) -> SubcarrierSolution:
    """Dual subgradient loop for one subcarrier.

    Each outer iteration runs the inner proximal loop at the current
    multipliers, then applies the projected updates
        lambda <- [lambda - xi_l (C - C_e - c_min)]+
        beta   <- [beta   - xi_b log rho(cap)]+
        mu     <- [mu     - xi_m log rho(eve cap)]+
    with geometrically decaying steps, stopping when total multiplier
    movement falls below delta. Iterates are scored through recovered powers;
    the final answer is the polished best candidate, re-evaluated on both
    channels so C_e always matches the actual wiretap physics.

    When `trace` is a list, one row per outer iteration is appended:
    (iter, subcarrier, objective_nats, |lambda|, |beta|, |mu|, max log rho).
    """
    opts = options or SolverOptions()
    sys = normalize_system(sp)
    cm = cap_constraint_matrices(sys, sp.p_max)
    J = sp.size
    c_min = sp.c_min

    # single-user ceilings: no achievable rate exceeds log(1 + p_max/noise),
    # and capping the boxes there keeps the iterates physically meaningful
    cap_c = np.minimum(opts.rate_cap, np.log1p(sp.p_max / sys.noise_norm) + 1.0)
    cap_e = np.minimum(opts.rate_cap, np.log1p(sp.p_max / sys.eve_noise_norm) + 1.0)
    ds = DualState.from_options(J, opts, rate_cap=cap_c, eve_rate_cap=cap_e)
    scale = float(sp.p_max.sum())

    p_half = 0.5 * sp.p_max
    C0 = np.clip(np.log1p(sinr_from_power(sys, p_half)), 0.0, cap_c)
    E0 = np.clip(np.log1p(sinr_from_power(sys, p_half, eve=True)), 0.0, cap_e)
    rs = RateState(C0, E0)

    pool = [p_half.copy()]

    cache: dict = {}
    dual_values: list = []
    movements: list = []
    inner_total = 0
    dual_converged = False
    outer_iters = 0

    for i in range(1, opts.max_outer + 1):
        outer_iters = i
        ds.outer_iter = i
        step = opts.decay ** (i - 1)
        ds.xi_lambda = opts.xi0_lambda * step
        ds.xi_beta = opts.xi0_beta * step
        ds.xi_mu = opts.xi0_mu * step

        rs, inner_iters, _ = inner_solve(ds, cm, rs, cache)
        inner_total += inner_iters

        rho_l, _, _ = _pf_eval(cm.cap_spectral, rs.C, cache, "legit")
        log_l = _log_rho(rho_l)
        log_e = eve_log_sigma(cm, rs.C_e)

        value = float(np.sum(rs.C) - np.sum(rs.C_e))
        value += float(ds.lam @ (rs.C - rs.C_e - c_min))
        value -= float(ds.beta @ log_l) + float(ds.mu @ log_e)
        dual_values.append(value)

        if trace is not None:
            trace.append((i, sp.subcarrier, float(np.sum(rs.C - rs.C_e)),
                          float(np.linalg.norm(ds.lam)),
                          float(np.linalg.norm(ds.beta)),
                          float(np.linalg.norm(ds.mu)), float(log_l.max())))

        cand = _try_rates_candidate(sys, rs.C, sp.p_max)
        if cand is not None:
            pool.append(cand)

        clip = opts.residual_clip
        r_lam = np.clip(rs.C - rs.C_e - c_min, -clip, clip)
        r_beta = np.clip(log_l, -clip, clip)
        r_mu = np.clip(log_e, -clip, clip)
        lam_new = np.maximum(0.0, ds.lam - ds.xi_lambda * r_lam)
        beta_new = np.maximum(0.0, ds.beta - ds.xi_beta * r_beta)
        mu_new = np.maximum(0.0, ds.mu - ds.xi_mu * r_mu)

        move = max(float(np.max(np.abs(lam_new - ds.lam))),
                   float(np.max(np.abs(beta_new - ds.beta))),
                   float(np.max(np.abs(mu_new - ds.mu))))
        movements.append(move)
        ds.lam, ds.beta, ds.mu = lam_new, beta_new, mu_new
        if move <= opts.delta:
            dual_converged = True
            break

    pool.append(sp.p_max.copy())
    pool.append(np.zeros(J))
    starts = np.unique(np.asarray(pool, dtype=float), axis=0)
    keys = _score_powers(sys, starts, c_min, scale)
    order = np.lexsort((keys[3], keys[2], keys[1], keys[0]))[::-1]

    p, best_score = None, None
    for m in order[: max(1, opts.polish_starts)]:
        q, score = _coordinate_polish(sys, starts[m], sp.p_max, c_min, opts)
        if best_score is None or score > best_score:
            best_score, p = score, q
    _, c_fin, e_fin = _score_power(sys, p, c_min, scale)
    secrecy = c_fin - e_fin
    qos_violation = np.maximum(0.0, c_min - secrecy)
    feasible = bool(qos_violation.max(initial=0.0) <= 1e-9)

    return SubcarrierSolution(
        subcarrier=sp.subcarrier, users=list(sp.users),
        rates=RateState(c_fin, e_fin), power=p, secrecy=secrecy,
        converged=dual_converged and feasible, dual_converged=dual_converged,
        feasible=feasible, outer_iters=outer_iters, inner_iters=inner_total,
        qos_violation=qos_violation, dual_values=dual_values,
        movement=movements)


def solve_network(ch: ChannelSet, alloc: Allocation, cfg: NetworkConfig,
                  options: SolverOptions | None = None,
                  trace: list | None = None) -> NetworkSolution:
    """Solve every subcarrier independently and total the secrecy rates.

    The per-subcarrier problems share no state (cost scales with
    N * J^2 * (H + L*M + L*K) for problem construction plus the per-subcarrier
    iterations). Totals convert nats to bits/s via bandwidth / ln 2.
    """
    alloc.validate()
    solutions = []
    for n in range(cfg.subcarriers):
        sp = build_subcarrier_problem(ch, alloc, cfg, n)
        solutions.append(outer_solve(sp, options, trace))
    to_bps = cfg.bandwidth_per_subcarrier / _LN2
    raw = sum(float(s.secrecy.sum()) for s in solutions) * to_bps
    clipped = sum(float(np.maximum(s.secrecy, 0.0).sum()) for s in solutions) * to_bps
    return NetworkSolution(
        solutions=solutions,
        total_secrecy_bps=clipped,
        total_secrecy_raw_bps=raw,
        feasible=all(s.feasible for s in solutions),
        outer_iters=max((s.outer_iters for s in solutions), default=0),
        inner_iters=sum(s.inner_iters for s in solutions))


def power_profile_from_solutions(solutions: list, alloc: Allocation,
                                 cfg: NetworkConfig):
    """Scatter per-subcarrier solved powers into network power arrays.

    Returns (p_hue (H, N), p_lue (L, M, N), p_due (L, K, N)); unscheduled
    entries stay zero, matching the allocation's zero-power convention.
    """
    p_hue = np.zeros((cfg.hues, cfg.subcarriers))
    p_lue = np.zeros((cfg.lpns, cfg.lues_per_lpn, cfg.subcarriers))
    p_due = np.zeros((cfg.lpns, cfg.dues_per_lpn, cfg.subcarriers))
    for sol in solutions:
        n = sol.subcarrier
        for j, user in enumerate(sol.users):
            if user[0] == "hue":
                p_hue[user[1], n] = sol.power[j]
            elif user[0] == "lue":
                p_lue[user[1], user[2], n] = sol.power[j]
            else:
                p_due[user[1], user[2], n] = sol.power[j]
    return p_hue, p_lue, p_due
