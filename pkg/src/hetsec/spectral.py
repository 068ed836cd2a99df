"""Per-subcarrier matrix form of the power-allocation problem.

On one subcarrier the J = 1 + 2L scheduled transmitters (HUE, then one LUE
per pico cell, then one DUE pair per pico cell) couple through a J x J gain
matrix G, with G[i, j] the gain from transmitter j to user i's receiver and
eve_gains[j] the gain from transmitter j to the subcarrier eavesdropper.

Receiver-normalized form: coupling[i, j] = G[i, j]/G[i, i] off the diagonal
and noise_norm[i] = noise/G[i, i], so the SINR vector is exactly
S = p / (coupling @ p + noise_norm). The eavesdropper sees all transmitters
at one antenna: eve_coupling[i, j] = eve_gains[j]/eve_gains[i].

Power caps become spectral constraints. With cap[j] = coupling +
(1/p_max[j]) * outer(noise_norm, e_j) and cap_spectral[j] =
(I + cap[j])^{-1} cap[j], a rate vector C (nats) is achievable within the
caps iff the spectral radius of cap_spectral[j] @ diag(e^C) is <= 1 for
every j; log of that radius is convex in C, which is what the solver
exploits.

The eavesdropper side cannot use the same inverse: all signals arrive at one
wiretap antenna, which makes every column of (I + eve_cap[j]) proportional
to 1/eve_gains — the matrix is exactly rank one and singular for J >= 2.
The constraint survives as the lone finite generalized eigenvalue of the
pencil (eve_cap[j] @ diag(e^{C_e}), I + eve_cap[j]), which reduces (by
Sherman-Morrison on the rank-one structure) to the closed form
    sigma_j(C_e) = eve_sigma_num[j] / (eve_sigma_weights[j] @ exp(-C_e)),
with sigma_j <= 1 exactly when the power realizing C_e keeps p_j within its
cap. log sigma_j is evaluated by eve_log_sigma / eve_sigma_gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateChannelError, InfeasibleRateError
from .linkmetrics import Allocation
from .netmodel import ChannelSet, NetworkConfig

_LN2 = float(np.log(2.0))


@dataclass
class SubcarrierProblem:
    """Gains and limits of the scheduled users on one subcarrier."""

    subcarrier: int
    users: list[tuple]            # ("hue", h) | ("lue", l, m) | ("due", l, k)
    gains: np.ndarray             # (J, J) G[i, j]: tx j -> user i's receiver
    eve_gains: np.ndarray         # (J,)
    p_max: np.ndarray             # (J,) watts
    c_min: np.ndarray             # (J,) per-subcarrier secrecy floor, nats
    noise: float                  # watts

    @property
    def size(self) -> int:
        return len(self.users)


@dataclass
class NormalizedSystem:
    """Receiver-normalized interference form; S = p / (coupling @ p + noise_norm)."""

    coupling: np.ndarray          # (J, J), zero diagonal
    noise_norm: np.ndarray        # (J,)
    eve_coupling: np.ndarray      # (J, J), zero diagonal
    eve_noise_norm: np.ndarray    # (J,)


@dataclass
class ConstraintMatrices:
    """Power caps in spectral form, legitimate and eavesdropper channels.

    The eavesdropper caps have no matrix inverse form — (I + eve_cap[j]) is
    rank one, see the module docstring — so they are carried as the closed
    form sigma_j(C_e) = eve_sigma_num[j] / (eve_sigma_weights[j] @ exp(-C_e)).
    """

    cap: np.ndarray               # (J, J, J): cap[j] for user j's budget
    cap_spectral: np.ndarray      # (J, J, J): (I + cap[j])^{-1} cap[j]
    eve_cap: np.ndarray           # (J, J, J)
    eve_sigma_num: np.ndarray     # (J,)
    eve_sigma_weights: np.ndarray  # (J, J)


@dataclass
class PfEigenpair:
    """Dominant eigenvalue with right/left positive eigenvectors.

    Normalization: sum(x) = 1 and y @ x = 1.
    """

    rho: float
    x: np.ndarray
    y: np.ndarray


def build_subcarrier_problem(ch: ChannelSet, alloc: Allocation, cfg: NetworkConfig,
                             n: int) -> SubcarrierProblem:
    """Collect the scheduled users of subcarrier n into the J x J matrix form.

    User order: HUE, then each cell's LUE by cell index, then each cell's DUE.
    """
    alloc.validate()
    h = int(np.argmax(alloc.a_hue[:, n]))
    lue_pick = [int(np.argmax(alloc.a_lue[l, :, n])) for l in range(cfg.lpns)]
    due_pick = [int(np.argmax(alloc.a_due[l, :, n])) for l in range(cfg.lpns)]

    users: list[tuple] = [("hue", h)]
    users += [("lue", l, lue_pick[l]) for l in range(cfg.lpns)]
    users += [("due", l, due_pick[l]) for l in range(cfg.lpns)]
    J = len(users)

    def tx_gain_to(receiver_row, user) -> float:
        """Gain of transmitter `user` into the given receiver row selector."""
        kind = user[0]
        if kind == "hue":
            return receiver_row[0](user[1])
        if kind == "lue":
            return receiver_row[1](user[1], user[2])
        return receiver_row[2](user[1], user[2])

    rows = []
    for i, ui in enumerate(users):
        if ui[0] == "hue":
            sel = (lambda hh: ch.g_hh[hh, n],
                   lambda l, m: ch.g_lh[l, m, n],
                   lambda l, k: ch.g_dh[l, k, n])
        elif ui[0] == "lue":
            cell = ui[1]
            sel = (lambda hh, c=cell: ch.g_hl[hh, n, c],
                   lambda l, m, c=cell: ch.g_ll[l, m, n, c],
                   lambda l, k, c=cell: ch.g_dl[l, k, n, c])
        else:
            cell, pair = ui[1], ui[2]
            sel = (lambda hh, c=cell, p=pair: ch.g_hd[hh, n, c, p],
                   lambda l, m, c=cell, p=pair: ch.g_ld[l, m, n, c, p],
                   lambda l, k, c=cell, p=pair: ch.g_dd[l, k, n, c, p])
        rows.append([tx_gain_to(sel, uj) for uj in users])
    gains = np.array(rows, dtype=float)

    def eve_gain(user) -> float:
        kind = user[0]
        if kind == "hue":
            return ch.g_he[user[1], n]
        if kind == "lue":
            return ch.g_le[user[1], user[2], n]
        return ch.g_de[user[1], user[2], n]

    eve_gains = np.array([eve_gain(u) for u in users], dtype=float)
    p_max = np.array([cfg.p_max_of(u[0]) for u in users], dtype=float)
    c_min = np.array([cfg.c_min_of(u[0]) for u in users], dtype=float) * _LN2

    return SubcarrierProblem(subcarrier=n, users=users, gains=gains,
                             eve_gains=eve_gains, p_max=p_max, c_min=c_min,
                             noise=cfg.noise_w)


def normalize_system(prob: SubcarrierProblem) -> NormalizedSystem:
    """Receiver-normalize the gain matrix; requires positive direct and
    eavesdropper gains."""
    G = prob.gains
    diag = np.diag(G).copy()
    if np.any(diag <= 0.0):
        raise DegenerateChannelError("zero direct gain on a scheduled link")
    if np.any(prob.eve_gains <= 0.0):
        raise DegenerateChannelError("zero eavesdropper gain on a scheduled link")
    if np.any(G < 0.0):
        raise DegenerateChannelError("negative channel gain")
    coupling = G / diag[:, None]
    np.fill_diagonal(coupling, 0.0)
    noise_norm = prob.noise / diag
    eve_coupling = prob.eve_gains[None, :] / prob.eve_gains[:, None]
    np.fill_diagonal(eve_coupling, 0.0)
    eve_noise_norm = prob.noise / prob.eve_gains
    return NormalizedSystem(coupling=coupling, noise_norm=noise_norm,
                            eve_coupling=eve_coupling, eve_noise_norm=eve_noise_norm)


def sinr_from_power(sys: NormalizedSystem, p: np.ndarray, eve: bool = False) -> np.ndarray:
    """S = p / (coupling @ p + noise) on the chosen channel."""
    if eve:
        return p / (sys.eve_coupling @ p + sys.eve_noise_norm)
    return p / (sys.coupling @ p + sys.noise_norm)


def rates_from_power(sys: NormalizedSystem, p: np.ndarray):
    """Achievable rate vectors (nats) of both channels at power p."""
    c = np.log1p(sinr_from_power(sys, p))
    c_eve = np.log1p(sinr_from_power(sys, p, eve=True))
    return c, c_eve


def cap_constraint_matrices(sys: NormalizedSystem, p_max: np.ndarray) -> ConstraintMatrices:
    """Per-user power caps as spectral constraint matrices (both channels).

    The legitimate-side inverses are verified by a residual check; the
    eavesdropper side stores the rank-one pencil coefficients instead (see
    the module docstring).
    """
    p_max = np.asarray(p_max, dtype=float)
    if np.any(p_max <= 0.0):
        raise ValueError("power caps must be positive")
    J = sys.coupling.shape[0]
    eye = np.eye(J)
    cap = np.empty((J, J, J))
    cap_spectral = np.empty((J, J, J))
    eve_cap = np.empty((J, J, J))
    for j in range(J):
        e_j = np.zeros(J)
        e_j[j] = 1.0
        cap[j] = sys.coupling + np.outer(sys.noise_norm, e_j) / p_max[j]
        cap_spectral[j] = np.linalg.solve(eye + cap[j], cap[j])
        resid = np.max(np.abs((eye + cap[j]) @ cap_spectral[j] - cap[j]))
        if resid > 1e-10 * max(1.0, float(np.max(cap[j]))):
            raise ConvergenceError("cap matrix inversion residual too large")
        eve_cap[j] = sys.eve_coupling + np.outer(sys.eve_noise_norm, e_j) / p_max[j]
    kappa = sys.eve_noise_norm / p_max
    eve_sigma_num = (J - 1.0) + kappa
    eve_sigma_weights = np.ones((J, J)) + np.diag(kappa)
    return ConstraintMatrices(cap=cap, cap_spectral=cap_spectral,
                              eve_cap=eve_cap, eve_sigma_num=eve_sigma_num,
                              eve_sigma_weights=eve_sigma_weights)


def eve_log_sigma(cm: ConstraintMatrices, eve_rates: np.ndarray) -> np.ndarray:
    """log of the eavesdropper cap pencil eigenvalues at wiretap rates C_e.

    sigma_j <= 1 exactly when the power vector realizing C_e on the wiretap
    channel respects user j's cap.
    """
    s = cm.eve_sigma_weights @ np.exp(-np.asarray(eve_rates, dtype=float))
    return np.log(cm.eve_sigma_num) - np.log(s)


def eve_sigma_gradient(cm: ConstraintMatrices, eve_rates: np.ndarray) -> np.ndarray:
    """Rows d log sigma_j / d C_e; each row is positive and sums to 1,
    mirroring the x*y eigenvector-product gradient of the legitimate side."""
    w = cm.eve_sigma_weights * np.exp(-np.asarray(eve_rates, dtype=float))[None, :]
    return w / w.sum(axis=1, keepdims=True)


# --------------------------------------------------------------------------
# dominant eigenpairs of nonnegative matrices
# --------------------------------------------------------------------------

def _strongly_connected_components(adj: np.ndarray) -> list[list[int]]:
    """Tarjan's algorithm (iterative) on a boolean adjacency matrix."""
    n = adj.shape[0]
    succ = [np.flatnonzero(adj[i]).tolist() for i in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        call = [(root, 0)]
        while call:
            v, pi = call.pop()
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            descended = False
            while pi < len(succ[v]):
                w = succ[v][pi]
                pi += 1
                if index[w] == -1:
                    call.append((v, pi))
                    call.append((w, 0))
                    descended = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if descended:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
            if call:
                parent = call[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def _irreducible_rho(block: np.ndarray, tol: float, max_iter: int) -> float:
    """Spectral radius of one irreducible nonnegative block.

    An irreducible block has a unique positive dominant eigenvector, so the
    unperturbed Collatz-Wielandt enclosure inside _batch_power_iteration can
    close on it, and the strict slack=0 there propagates nonconvergence as
    ConvergenceError. The recursion is bounded: _batch_power_iteration falls
    back to block decomposition only for reducible matrices.
    """
    n = block.shape[0]
    if n == 1:
        return float(block[0, 0])
    rho, _ = _batch_power_iteration(block[None], tol, max_iter, slack=0.0)
    return float(rho[0])


def _exact_rho(A: np.ndarray, tol: float, max_iter: int) -> float:
    """Spectral radius of a nonnegative matrix, reduced to irreducible blocks.

    The radius of the whole matrix is the largest block radius, so zero gains
    (reducible structure, including nilpotent corners where the radius is
    exactly 0) cost no accuracy.
    """
    if A.size == 0:
        return 0.0
    comps = _strongly_connected_components(A > 0.0)
    rho = 0.0
    for comp in comps:
        idx = np.asarray(comp)
        rho = max(rho, _irreducible_rho(A[np.ix_(idx, idx)], tol, max_iter))
    return max(rho, 0.0)


def _balance_stack(mats: np.ndarray, sweeps: int = 12) -> np.ndarray:
    """Diagonal similarity scales that flatten each matrix's magnitude spread.

    Returns d > 0 per matrix such that diag(1/d) @ A @ diag(d) has row and
    column infinity-norms roughly equal (parallel Osborne sweeps). Similarity
    leaves eigenvalues untouched; it only moves the iteration into coordinates
    where a uniform entrywise perturbation is small against every entry that
    matters. Channel gain matrices need this: near-far geometry spreads
    entries over ten or more orders of magnitude.

    All rows update together, so the classical full step sqrt(r/c) can
    oscillate instead of settling - on a pure two-cycle it swaps the
    imbalance every sweep and an even sweep count undoes itself. The
    half-step (fourth root) damps that: it balances a two-cycle exactly in
    one sweep and converges where the full parallel step ping-pongs.
    """
    B, J, _ = mats.shape
    d = np.ones((B, J))
    for _ in range(sweeps):
        work = mats * (d[:, None, :] / d[:, :, None])
        r = work.max(axis=2)
        c = work.max(axis=1)
        ok = (r > 0.0) & (c > 0.0)
        g = (np.where(ok, r, 1.0) / np.where(ok, c, 1.0)) ** 0.25
        d = d * np.where(ok, g, 1.0)
        dmax = d.max(axis=1, keepdims=True)
        d = np.maximum(d / dmax, 1e-140)
    return d


def _batch_power_iteration(mats: np.ndarray, tol: float, max_iter: int,
                           x0: np.ndarray | None = None, slack: float = 0.0):
    """Dominant eigenvalue/vector of a stack of nonnegative matrices.

    Each matrix is first balanced by a diagonal similarity (see
    _balance_stack); a tiny uniform perturbation then makes it strictly
    positive, so the dominant eigenvector is unique and positive. The
    candidate vector comes from repeated squaring of the perturbed matrix,
    renormalized to unit peak entry each round: squaring doubles the
    effective power-step count per round, the subdominant ratio decays like
    |l2/l1|**(2**k), and even near-ties separate in a few dozen rounds where
    plain or shifted power steps would need ~1/gap iterations. The
    perturbation is applied once, before the squaring, so the candidate
    converges to the perturbed matrix's own dominant vector - the fallback
    certificate below is sensitive to its smallest components. Nonnegative
    products have no cancellation, so the squared stack stays
    forward-stable.

    The eigenvalue never comes from the squared product. Each round the
    candidate x is certified through Collatz-Wielandt ratios
    min_i (Ax)_i/x_i <= rho <= max_i (Ax)_i/x_i, valid for any positive x:
    first against the unperturbed balanced matrix - zero perturbation bias,
    how every positive input returns - and also against the perturbed one.
    Per matrix the tightest enclosure of each kind is kept. A reducible
    matrix can close only the perturbed enclosure (its true dominant vector
    has zero components, pinning some unperturbed ratio away from rho), and
    that certificate is about the wrong matrix: the perturbation opens
    cycles through the zero pattern whose gain can exceed the true radius
    outright. So any matrix whose unperturbed enclosure did not close is
    re-derived exactly from its strongly connected blocks (_exact_rho) under
    a bounded budget, and only if that also fails does the perturbed record
    stand in - a best effort on a genuinely unresolvable spectrum, paired
    with the positive vector it was certified at.

    Squaring alone bottoms out near 1e-5 on imprimitive structures: once the
    stack is numerically rank one it is a fixed point of square-and-
    normalize, freezing whatever error the perturbation-scale vector
    components still carry; worse, near-tied spectra amplify the
    perturbation by the inverse gap, so the perturbed matrix's own vector
    can sit far from the true one. A short shift-invert polish against the
    unperturbed matrix finishes the job: solving (A - sigma I) z = x at the
    enclosure midpoint multiplies the dominant component by
    |l2 - sigma| / |rho - sigma| per solve, machine precision in a few
    batched solves whenever the subdominant eigenvalue is genuinely
    elsewhere, with no perturbation floor. Only the Collatz-Wielandt probe of
    the result is ever accepted, so a useless solve (near-tied spectra,
    where no method can help) just fails to improve the record.

    Balancing equalizes row and column peaks but cannot compress the spread
    inside a row, and when structural entries sit ten or more orders below
    the peak the flat perturbation swamps them and the candidate converges
    to the wrong vector. Matrices still open after the polish get up to two
    restarts that rebalance by the best candidate itself: with the true
    eigenvector as the similarity the balanced matrix has constant row sums,
    so each pass moves the frame toward one where the flat epsilon is
    harmless against every entry that matters.

    `max_iter` is the effective power-step budget: it is spent as roughly
    log2(max_iter) squaring rounds plus margin, so raising it widens the
    reachable gap range at trivial cost. If the rounds and the polish end
    with a matrix still open, its tightest enclosure is accepted when the
    relative width is at most `slack` (the midpoint errs by at most half the
    width), otherwise ConvergenceError. slack=0 demands full tolerance;
    slack=inf always returns the best effort.
    """
    mats = np.asarray(mats, dtype=float)
    B, J, _ = mats.shape
    eye = np.eye(J)

    best_rel = np.full(B, np.inf)     # enclosure on the unperturbed matrix
    best_val = np.zeros(B)
    best_xo = np.full((B, J), 1.0 / J)
    pert_rel = np.full(B, np.inf)     # fallback: perturbed-matrix enclosure
    pert_val = np.zeros(B)
    pert_xo = np.full((B, J), 1.0 / J)
    d = _balance_stack(mats)
    base = pert = None

    def probe(x):
        nonlocal best_rel, best_val, best_xo, pert_rel, pert_val, pert_xo
        xo = d * x
        xo = xo / xo.sum(axis=1, keepdims=True)
        for against in (0, 1):
            y = np.einsum("bij,bj->bi", base if against == 0 else pert, x)
            r = y / np.maximum(x, 1e-300)
            lo = r.min(axis=1)
            hi = r.max(axis=1)
            rel = (hi - lo) / np.maximum(1.0, hi)
            if against == 0:
                upd = rel < best_rel
                best_rel = np.where(upd, rel, best_rel)
                best_val = np.where(upd, 0.5 * (lo + hi), best_val)
                best_xo = np.where(upd[:, None], xo, best_xo)
            else:
                upd = rel < pert_rel
                pert_rel = np.where(upd, rel, pert_rel)
                pert_val = np.where(upd, 0.5 * (lo + hi), pert_val)
                pert_xo = np.where(upd[:, None], xo, pert_xo)
        return bool(np.all((best_rel <= tol) | (pert_rel <= tol)))

    # Osborne balancing equalizes row/column norms but cannot compress the
    # spread inside a row, and a flat perturbation swamps structural entries
    # sitting far below the peak. The outer restarts fix that adaptively:
    # the best eigenvector estimate so far becomes the next similarity (at
    # the true vector the balanced matrix has constant row sums), so each
    # pass flattens the frame the flat epsilon lives in.
    rounds = max(16, int(np.ceil(np.log2(max(max_iter, 4)))) + 42)
    closed = False
    for restart in range(3):
        base = mats * (d[:, None, :] / d[:, :, None])
        peak = base.reshape(B, -1).max(axis=1)
        pert = base + (1e-12 * peak)[:, None, None]
        bnorm = base / np.where(peak > 0.0, peak, 1.0)[:, None, None]
        if restart == 0 and x0 is not None:
            u = np.maximum(np.asarray(x0, dtype=float), 0.0) / d
            u = np.maximum(u, 1e-300)
            u = u / u.sum(axis=1, keepdims=True)
        else:
            u = np.full((B, J), 1.0 / J)

        W = bnorm + 1e-12
        x = u
        for _ in range(rounds):
            x = np.einsum("bij,bj->bi", W, u)
            x = np.maximum(x, 1e-300)
            x = x / x.sum(axis=1, keepdims=True)
            if probe(x):
                closed = True
                break
            W = np.einsum("bij,bjk->bik", W, W)
            wpeak = W.reshape(B, -1).max(axis=1)
            W = W / np.where(wpeak > 0.0, wpeak, 1.0)[:, None, None]

        # a row still needs work if it fails what final acceptance will
        # demand: an unperturbed certificate at tol, or - when slack admits
        # a best-effort answer - a perturbed one at the stricter of slack
        # and tol. Under slack=0 only tier-1 counts, so a tight perturbed
        # certificate (which carries the perturbation bias) does not stop
        # the upgrade attempt.
        goal = min(slack, tol)
        if not bool(np.all((best_rel <= tol) | (pert_rel <= goal))):
            # shift-invert against the *unperturbed* matrix: the perturbed
            # one's eigenvector is off by the perturbation amplified by the
            # inverse spectral gap, a floor no amount of solving it escapes.
            # One solve from the (often excellent) perturbed midpoint usually
            # upgrades the row to an unperturbed certificate; rows that
            # cannot be upgraded (reducible structure) fail their probes
            # harmlessly.
            for _ in range(12):
                settled = (best_rel <= tol) | (pert_rel <= goal)
                sigma = np.where(best_rel <= pert_rel, best_val, pert_val)
                shifted = base - sigma[:, None, None] * eye
                shifted[settled] = eye   # keep solved rows inert, nonsingular
                try:
                    z = np.linalg.solve(shifted, x[..., None])[..., 0]
                except np.linalg.LinAlgError:
                    shifted[~settled] -= (1e-12 * np.abs(sigma) + 1e-30)[
                        ~settled, None, None] * eye
                    try:
                        z = np.linalg.solve(shifted, x[..., None])[..., 0]
                    except np.linalg.LinAlgError:
                        break
                z = np.abs(z)
                tot = z.sum(axis=1)
                good = np.isfinite(tot) & (tot > 0.0) & ~settled
                if not np.any(good):
                    break
                x = np.where(good[:, None],
                             z / np.where(tot > 0.0, tot, 1.0)[:, None], x)
                if probe(x):
                    closed = True
                if bool(np.all((best_rel <= tol) | (pert_rel <= goal))):
                    break
        if closed:
            break
        pick = np.where((best_rel <= pert_rel)[:, None], best_xo, pert_xo)
        d = np.maximum(pick, 1e-18 * pick.max(axis=1, keepdims=True))
        d = d / d.max(axis=1, keepdims=True)

    use0 = best_rel <= tol
    val = np.where(use0, best_val, pert_val)
    xo = np.where(use0[:, None], best_xo, pert_xo)
    rel = np.where(use0, best_rel, pert_rel)
    effort = np.zeros(B, dtype=bool)   # rows acceptable only against slack
    for b in np.flatnonzero(~use0):
        # only reducible structures need the block route: on an irreducible
        # matrix the perturbation bias is ~1e-12 of the peak entry, while on
        # a reducible one it can exceed the true radius outright
        if len(_strongly_connected_components(mats[b] > 0.0)) > 1:
            try:
                val[b] = _exact_rho(mats[b], tol, min(max_iter, 5000))
                rel[b] = 0.0
                continue
            except ConvergenceError:
                pass
        effort[b] = True
        if best_rel[b] < pert_rel[b]:
            val[b] = best_val[b]
            xo[b] = best_xo[b]
            rel[b] = best_rel[b]
    # an unperturbed or block-exact certificate passes at tol; anything else
    # is best effort and answers to slack alone
    ok = np.where(effort, rel <= slack, rel <= np.maximum(tol, slack))
    if bool(np.all(ok)):
        return np.maximum(val, 0.0), xo
    raise ConvergenceError("power iteration did not converge")


def perron_eigenpair(mat: np.ndarray, tol: float = 1e-12,
                     max_iter: int = 200_000) -> PfEigenpair:
    """Dominant eigenpair of one nonnegative square matrix.

    The eigenvalue comes from per-block power iteration on the irreducible
    diagonal blocks (exact for reducible matrices). The vectors come from the
    rank-one-perturbed iteration, so they are elementwise positive and the
    y @ x = 1 normalization is always well defined; right vector x has sum 1.
    """
    A = np.asarray(mat, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(A < 0.0):
        raise ValueError("matrix must be nonnegative")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix must be finite")
    rho = _exact_rho(A, tol, max_iter)
    # vectors are best-effort: rho above is already certified, and these
    # exist to provide positive, overlap-normalizable directions
    _, x = _batch_power_iteration(A[None], tol, max_iter, slack=np.inf)
    _, yT = _batch_power_iteration(np.transpose(A[None], (0, 2, 1)), tol, max_iter,
                                   slack=np.inf)
    x1 = x[0]
    y1 = yT[0]
    denom = float(y1 @ x1)
    if denom <= 0.0:
        raise ConvergenceError("left/right eigenvectors do not overlap")
    return PfEigenpair(rho=rho, x=x1, y=y1 / denom)


def perron_pairs_batch(mats: np.ndarray, tol: float = 1e-11, max_iter: int = 200_000,
                       x0: np.ndarray | None = None, y0: np.ndarray | None = None,
                       slack: float = 1e-6):
    """Batched eigenpairs for a (B, J, J) stack: (rho (B,), x (B, J), y (B, J))
    with sum(x) = 1 and y @ x = 1 per matrix. Warm starts speed up the solver's
    repeated calls on slowly-moving matrices.

    Entries below zero are treated as zero: the matrix inverse inside
    cap_spectral does not preserve sign exactly, and the dominant-eigenpair
    machinery is defined on the nonnegative part. `slack` bounds the accepted
    enclosure width when the spectrum is too clustered to separate within the
    budget (see _batch_power_iteration).
    """
    mats = np.maximum(np.asarray(mats, dtype=float), 0.0)
    rho, x = _batch_power_iteration(mats, tol, max_iter, x0, slack=slack)
    _, y = _batch_power_iteration(np.transpose(mats, (0, 2, 1)), tol, max_iter, y0,
                                  slack=slack)
    denom = np.einsum("bj,bj->b", y, x)
    denom = np.where(denom <= 0.0, 1.0, denom)
    return rho, x, y / denom[:, None]


def log_spectral_radius(mats: np.ndarray, rates: np.ndarray,
                        floor: float = 1e-300) -> np.ndarray:
    """log rho(cap_spectral[j] @ diag(e^rates)) for a stack of matrices.

    Negative entries in the stack (sign dust from the inverse inside
    cap_spectral) are clipped to zero before the radius is taken. Far outside
    the feasible region the scaled matrices can have near-tied top
    eigenvalues; a relative eigenvalue error up to 1e-6 is accepted there,
    far below any feasibility margin this value is compared against.
    """
    scaled = np.maximum(mats, 0.0) * np.exp(rates)[None, None, :]
    rho, _ = _batch_power_iteration(scaled, 1e-11, 200_000, slack=1e-6)
    return np.log(np.maximum(rho, floor))


# --------------------------------------------------------------------------
# rate -> power recovery
# --------------------------------------------------------------------------

def power_from_rates(sys: NormalizedSystem, rates: np.ndarray,
                     check_tol: float = 1e-9) -> np.ndarray:
    """Solve for the power vector whose SINRs realize the given rates (nats).

    Inverts S = p/(coupling @ p + noise): with D = diag(e^C - 1),
    (I - D @ coupling) p = D @ noise. Raises InfeasibleRateError when the
    rates admit no nonnegative solution (spectral radius of D @ coupling >= 1
    or a negative component), ConvergenceError if the recovered powers fail to
    reproduce the rates.
    """
    rates = np.asarray(rates, dtype=float)
    J = rates.shape[0]
    d = np.expm1(rates)
    if np.any(d < 0.0):
        raise InfeasibleRateError("rates must be nonnegative")
    DF = d[:, None] * sys.coupling
    radius, _ = _batch_power_iteration(DF[None], 1e-11, 200_000)
    if float(radius[0]) >= 1.0 - 1e-12:
        raise InfeasibleRateError("rate vector not supportable by any finite power")
    p = np.linalg.solve(np.eye(J) - DF, d * sys.noise_norm)
    if np.any(p < -1e-12):
        raise InfeasibleRateError("rate vector requires a negative power")
    p = np.maximum(p, 0.0)
    back = np.log1p(sinr_from_power(sys, p))
    if np.max(np.abs(back - rates)) > check_tol:
        raise ConvergenceError("power recovery failed to reproduce the rates")
    return p
