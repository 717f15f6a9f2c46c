"""Max-min fair RSMA power allocation by successive convex approximation.

The non-convex max-min problem is lifted with an epigraph variable t and
slack variables xi (SINR lower bounds) and beta (interference-plus-noise
upper bounds).  The bilinear coupling xi * beta <= signal is replaced, at
each iterate, by a first-order expansion of signal / beta around the
current point, which leaves a convex program with exponential-cone (log)
constraints.  That program is built once per network in cvxpy with the
expansion point as parameters and re-solved with Clarabel.

Internally all gains are divided by the noise power, so the noise is 1 and
beta is expressed in units of the noise power (beta >= 1).
"""

import logging
import time
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .rsma import Network, RsmaAllocation, common_rates, private_rates, rate

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
_OK = {cp.OPTIMAL, cp.OPTIMAL_INACCURATE}


class ScaError(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


@dataclass
class ScaState:
    """Linearization point; beta in units of the noise power."""

    n: int
    private_power: np.ndarray  # (U,)
    common_power: np.ndarray  # (R, L)
    beta_c: np.ndarray  # (U,)
    beta_p: np.ndarray  # (U,)
    t_trace: list = field(default_factory=list)


@dataclass
class TraceRow:
    iteration: int
    t: float
    status: str
    solve_time: float


@dataclass
class ScaResult:
    allocation: RsmaAllocation  # certified (true-SINR feasible)
    rates: np.ndarray  # (U,) certified total rates, bits/s
    min_rate: float  # certified objective
    surrogate_t: float  # last subproblem optimum
    trace: list  # TraceRow per subproblem solve, plus the initial point as row 0
    converged: bool
    state: ScaState

    @property
    def t_trace(self):
        return [row.t for row in self.trace]


# -- first-order expansions of signal / beta -----------------------------------


def taylor_private(p, beta, p0, beta0, g):
    """Expansion of p*g/beta around (p0, beta0), evaluated at (p, beta)."""
    return (p0 * g / beta0 + g / beta0 * (p - p0)
            - p0 * g / beta0**2 * (beta - beta0))


def taylor_private_coeffs(p0, beta0, g):
    """(value, d/dp, d/dbeta) of p*g/beta at the expansion point."""
    return p0 * g / beta0, g / beta0, -p0 * g / beta0**2


def taylor_common(P_row, beta, P0_row, beta0, g_col):
    """Expansion of (sum_l P[l] g[l]) / beta around (P0, beta0)."""
    s0 = np.dot(P0_row, g_col)
    return (s0 / beta0 + np.dot(g_col / beta0, P_row - P0_row)
            - s0 / beta0**2 * (beta - beta0))


def taylor_common_coeffs(P0_row, beta0, g_col):
    s0 = np.dot(P0_row, g_col)
    return s0 / beta0, g_col / beta0, -s0 / beta0**2


# -- initial point --------------------------------------------------------------


def beta_bounds(net: Network, private_power):
    """Right-hand sides of the beta constraints: (common, private)."""
    x = net.cross_gain()
    bc = x @ private_power + net.noise_power
    np.fill_diagonal(x, 0.0)
    bp = x @ private_power + net.noise_power
    return bc, bp


def initialize(net: Network, total_power, rsma=True) -> ScaState:
    """Uniform split: half the budget to common streams, half to private.

    Without RSMA the whole budget goes to the private streams.  ``net`` must
    be noise-normalized.
    """
    n_ue, n_cl, n_rb = net.num_ues, net.num_clusters, net.num_rbs
    if rsma:
        P0 = np.full((n_rb, n_cl), 0.5 * total_power / (n_rb * n_cl))
        p0 = np.full(n_ue, 0.5 * total_power / n_ue)
    else:
        P0 = np.zeros((n_rb, n_cl))
        p0 = np.full(n_ue, total_power / n_ue)
    bc, bp = beta_bounds(net, p0)
    return ScaState(0, p0, P0, bc, bp)


def waterfill_shares(private_rate, rb_of, caps):
    """Split each RB's common rate to maximize the RB's minimum total rate."""
    shares = np.zeros_like(private_rate)
    for r, cap in enumerate(caps):
        idx = np.flatnonzero(rb_of == r)
        if idx.size == 0 or not np.isfinite(cap) or cap <= 0:
            continue
        base = np.sort(private_rate[idx])
        # level T with sum(max(T - base, 0)) == cap
        for k in range(1, idx.size + 1):
            cand = (cap + base[:k].sum()) / k
            if k == idx.size or cand <= base[k]:
                level = cand
                break
        shares[idx] = np.maximum(level - private_rate[idx], 0.0)
    return shares


def _point_value(alloc, net, rsma):
    rp = private_rates(alloc, net)
    if not rsma:
        return float(rp.min())
    caps = np.array([common_rates(alloc, net)[net.rb_of == r].min(initial=np.inf)
                     for r in range(net.num_rbs)])
    shares = waterfill_shares(rp, net.rb_of, caps)
    return float((rp + shares).min())


# -- convex subproblem ----------------------------------------------------------


TANGENT = "tangent"
CONCAVE = "concave"


class _StreamBound:
    """Parameters of xi <= k0 + k1 * h(w) - a * b for one family of streams.

    The variables are rescaled around the expansion point (S0, beta0):
    b = beta / beta0 and w = S / m with m = max(S0, 1), so both are O(1)
    near the point whatever the link budget.  a = S0 / beta0 is the SINR
    at the point.
    """

    def __init__(self, n, name):
        self.inv_beta0 = cp.Parameter(n, nonneg=True, name=f"{name}_inv_beta0")
        self.inv_m = cp.Parameter(n, nonneg=True, name=f"{name}_inv_m")
        self.k0 = cp.Parameter(n, nonneg=True, name=f"{name}_k0")
        self.k1 = cp.Parameter(n, nonneg=True, name=f"{name}_k1")
        self.a = cp.Parameter(n, nonneg=True, name=f"{name}_a")

    def constraint(self, xi, b, signal, concave):
        w = cp.multiply(self.inv_m, signal)
        h = cp.sqrt(w) if concave else w
        return xi <= self.k0 + cp.multiply(self.k1, h) - cp.multiply(self.a, b)

    def set(self, s0, beta0, concave):
        m = np.maximum(s0, 1.0)
        a = s0 / beta0
        self.inv_beta0.value = 1.0 / beta0
        self.inv_m.value = 1.0 / m
        self.a.value = a
        if concave:
            self.k0.value = np.zeros_like(a)
            self.k1.value = 2.0 * np.sqrt(s0 * m) / beta0
        else:
            self.k0.value = a
            self.k1.value = m / beta0


class ConvexSubproblem:
    """The SCA subproblem for one network; the expansion point is a parameter.

    ``net`` must be noise-normalized.  With ``rsma=False`` the common powers
    and shares are absent (fixed at zero).

    ``linearization`` picks the bound on xi <= S / beta (S the affine signal
    power): ``"tangent"`` is the plain first-order plane in (S, beta), which
    can overshoot S / beta away from the point; ``"concave"`` writes S as
    (sqrt S)^2 and takes the tangent of the jointly convex z^2 / beta
    instead, giving 2 sqrt(S0 S) / beta0 - S0 beta / beta0^2.  Both agree
    with S / beta in value and gradient at the point; the concave one
    never exceeds it, so every iterate stays feasible for the next.

    beta is carried as b = beta / beta0 (see ``_StreamBound``); solutions
    report it back in noise units.
    """

    def __init__(self, net: Network, total_power, rsma=True, linearization=CONCAVE):
        if linearization not in (TANGENT, CONCAVE):
            raise ValueError(f"unknown linearization {linearization!r}")
        self.net = net
        self.rsma = rsma
        self.linearization = linearization
        self.total_power = total_power
        concave = linearization == CONCAVE
        n_ue, n_cl, n_rb = net.num_ues, net.num_clusters, net.num_rbs
        bw = net.bandwidth
        g = net.gains
        serving = net.serving_gain()
        x_all = net.cross_gain()
        x_other = x_all.copy()
        np.fill_diagonal(x_other, 0.0)

        self.t = cp.Variable(name="t")
        self.p = cp.Variable(n_ue, nonneg=True, name="p_private")
        self.xi_p = cp.Variable(n_ue, name="xi_private")
        self.b_p = cp.Variable(n_ue, name="beta_private_scaled")
        self.bound_p = _StreamBound(n_ue, "private")

        groups = {}
        groups["beta_private"] = [
            self.b_p >= cp.multiply(self.bound_p.inv_beta0, x_other @ self.p + 1.0)]
        groups["sinr_private"] = [
            self.bound_p.constraint(self.xi_p, self.b_p, cp.multiply(serving, self.p), concave)]
        private_part = bw / LN2 * cp.log(1.0 + self.xi_p)
        power = cp.sum(self.p)

        if rsma:
            self.C = cp.Variable(n_ue, nonneg=True, name="common_share")
            self.P = cp.Variable((n_rb, n_cl), nonneg=True, name="p_common")
            self.xi_c = cp.Variable(n_ue, name="xi_common")
            self.b_c = cp.Variable(n_ue, name="beta_common_scaled")
            self.bound_c = _StreamBound(n_ue, "common")

            select = np.zeros((n_ue, n_rb))
            select[np.arange(n_ue), net.rb_of] = 1.0
            same_rb = (net.rb_of[:, None] == net.rb_of[None, :]).astype(float)
            # S_u = sum_l P[r_u, l] g[l, u]
            signal = cp.sum(cp.multiply(g.T, select @ self.P), axis=1)

            groups["rate"] = [self.C + private_part >= self.t]
            groups["beta_common"] = [
                self.b_c >= cp.multiply(self.bound_c.inv_beta0, x_all @ self.p + 1.0)]
            groups["sinr_common"] = [self.bound_c.constraint(self.xi_c, self.b_c, signal, concave)]
            # one row per (r, j in U_r): sum of shares on r <= rate of j
            groups["common_cap"] = [same_rb @ self.C <= bw / LN2 * cp.log(1.0 + self.xi_c)]
            power = power + cp.sum(self.P)
        else:
            groups["rate"] = [private_part >= self.t]

        groups["budget"] = [power <= total_power]
        self.groups = groups
        self._g = g
        self._serving = serving
        self._point = None
        constraints = [c for group in groups.values() for c in group]
        self.problem = cp.Problem(cp.Maximize(self.t), constraints)

    def constraint_counts(self):
        return {name: sum(c.size for c in group) for name, group in self.groups.items()}

    def _coeffs(self, s0, beta0):
        # value, slope on h(S), slope on beta, for the bound around (s0, beta0)
        db = -s0 / beta0**2
        if self.linearization == CONCAVE:
            return np.zeros_like(s0), 2.0 * np.sqrt(s0) / beta0, db
        return -db * beta0, 1.0 / beta0, db

    def set_point(self, state: ScaState):
        if np.any(state.beta_p < 1.0) or (self.rsma and np.any(state.beta_c < 1.0)):
            raise ValueError("linearization point has beta below the noise floor")
        concave = self.linearization == CONCAVE
        s0p = state.private_power * self._serving
        self.bound_p.set(s0p, state.beta_p, concave)
        s0c = None
        if self.rsma:
            s0c = self.common_signal(state.common_power)
            self.bound_c.set(s0c, state.beta_c, concave)
        self._point = (s0p, state.beta_p.copy(), s0c, None if s0c is None else state.beta_c.copy())

    def common_signal(self, P):
        return np.einsum("ul,lu->u", P[self.net.rb_of], self._g)

    def sinr_bound(self, signal, beta, s0, beta0):
        """Numeric value of the right-hand side used for xi (either form)."""
        const, slope, db = self._coeffs(np.asarray(s0, float), np.asarray(beta0, float))
        h = np.sqrt(signal) if self.linearization == CONCAVE else signal
        return const + slope * h + db * beta

    def polish(self, sol: "SubproblemSolution") -> "SubproblemSolution":
        """Project a solver point onto the exact feasible set of this subproblem.

        Interior-point output can miss constraints by a few 1e-8.  Powers are
        clipped and scaled into the budget, beta is raised to its bound, xi
        is capped by its bound, the shares are scaled under each RB's cap and
        t is recomputed, so the returned point is feasible to rounding.
        """
        net = self.net
        bw = net.bandwidth
        s0p, b0p, s0c, b0c = self._point
        p, P = _clean_powers(sol.private_power, sol.common_power, self.total_power)
        bc, bp = beta_bounds(net, p)
        beta_p = np.maximum(sol.beta_p, bp)
        xi_p = np.minimum(sol.xi_p, self.sinr_bound(p * self._serving, beta_p, s0p, b0p))
        rp = bw / LN2 * np.log1p(np.maximum(xi_p, -1.0 + 1e-15))
        if not self.rsma:
            return SubproblemSolution(float(rp.min()), p, np.zeros_like(P), np.zeros_like(p),
                                      np.zeros_like(p), xi_p, np.zeros_like(p), beta_p)
        beta_c = np.maximum(sol.beta_c, bc)
        xi_c = np.minimum(sol.xi_c, self.sinr_bound(self.common_signal(P), beta_c, s0c, b0c))
        rc = bw / LN2 * np.log1p(np.maximum(xi_c, -1.0 + 1e-15))
        C = np.maximum(sol.common_share, 0.0)
        for r in range(net.num_rbs):
            idx = np.flatnonzero(net.rb_of == r)
            if idx.size == 0:
                continue
            cap, total = max(rc[idx].min(), 0.0), C[idx].sum()
            if total > cap:
                C[idx] *= cap / total
        return SubproblemSolution(float((C + rp).min()), p, P, C, xi_c, xi_p, beta_c, beta_p)


@dataclass
class SubproblemSolution:
    t: float
    private_power: np.ndarray
    common_power: np.ndarray
    common_share: np.ndarray
    xi_c: np.ndarray
    xi_p: np.ndarray
    beta_c: np.ndarray
    beta_p: np.ndarray


def build_subproblem(state: ScaState, net: Network, total_power, rsma=True,
                     linearization=CONCAVE) -> ConvexSubproblem:
    sp = ConvexSubproblem(net, total_power, rsma, linearization)
    sp.set_point(state)
    return sp


# Gap tolerances sit a decade inside the 1e-6 target, so an "optimal" status
# certifies it; feasibility is restored exactly by polishing.  On breakdown or
# an inaccurate finish the solve is retried with more regularization and
# iterations.  Every key is spelled out because the solver object is reused
# between solves and keeps the last settings.
SOLVER_SETTINGS = (
    dict(tol_gap_abs=1e-7, tol_gap_rel=1e-7, tol_feas=1e-8, static_regularization_constant=1e-8,
         max_iter=200),
    dict(tol_gap_abs=1e-7, tol_gap_rel=1e-7, tol_feas=1e-8, static_regularization_constant=1e-7,
         max_iter=400),
)


def solve_subproblem(sp: ConvexSubproblem, settings=SOLVER_SETTINGS):
    """Solve the subproblem at its current point; returns (solution or None, status).

    ``settings`` is a sequence of Clarabel option dicts tried in turn until
    one finishes optimal; an inaccurate finish from the last one is kept.
    A returned solution has been polished onto the exact feasible set.
    """
    status, best = "solver_error", None
    for opts in settings:
        try:
            with warnings.catch_warnings():
                # an inaccurate solve is reported through the status instead
                warnings.simplefilter("ignore", UserWarning)
                sp.problem.solve(solver=cp.CLARABEL, **opts)
        except cp.SolverError as exc:
            log.debug("subproblem solver error: %s", exc)
            status = "solver_error"
            continue
        status = sp.problem.status
        if status == cp.OPTIMAL:
            best = status
            break
        if status in _OK:
            best = status
    if best is None:
        return None, status
    if status not in _OK:
        # the last attempt broke down after an earlier inaccurate finish
        return None, status
    n_ue, n_cl, n_rb = sp.net.num_ues, sp.net.num_clusters, sp.net.num_rbs
    beta0_p, beta0_c = sp._point[1], sp._point[3]
    if sp.rsma:
        common = (sp.P.value, sp.C.value, sp.xi_c.value, beta0_c * sp.b_c.value)
    else:
        common = (np.zeros((n_rb, n_cl)), np.zeros(n_ue), np.zeros(n_ue), np.zeros(n_ue))
    raw = SubproblemSolution(
        t=float(sp.t.value), private_power=sp.p.value, common_power=common[0],
        common_share=common[1], xi_c=common[2], xi_p=sp.xi_p.value,
        beta_c=common[3], beta_p=beta0_p * sp.b_p.value,
    )
    return sp.polish(raw), best


# -- outer loop -----------------------------------------------------------------


def _clean_powers(p, P, total_power, floor=0.0):
    # a zero power would freeze the concave bound (its slope is sqrt(S0))
    p = np.maximum(p, floor)
    P = np.maximum(P, floor)
    total = p.sum() + P.sum()
    if total > total_power:
        p = p * (total_power / total)
        P = P * (total_power / total)
    return p, P


def certify(alloc: RsmaAllocation, net: Network):
    """Scale common shares down per RB wherever the true common rate cannot carry them.

    Returns the feasible allocation and its true total rates.
    """
    rc = common_rates(alloc, net)
    shares = np.maximum(alloc.common_share, 0.0).copy()
    for r in range(net.num_rbs):
        idx = np.flatnonzero(net.rb_of == r)
        if idx.size == 0:
            continue
        cap = rc[idx].min()
        total = shares[idx].sum()
        if total > cap:
            shares[idx] *= cap / total if total > 0 else 0.0
    out = RsmaAllocation(alloc.common_power.copy(), alloc.private_power.copy(), shares)
    return out, shares + private_rates(out, net)


def run_sca(net: Network, total_power, max_iters=20, tol=1e-3, rsma=True,
            linearization=CONCAVE, power_floor=1e-12) -> ScaResult:
    """Iterate solve/update until the relative change in t is at most ``tol``.

    ``net`` is in physical units; the returned allocation is too.  Row 0 of
    the trace is the max-min value of the initial point.  ``power_floor``
    (relative to ``total_power``) keeps expansion points strictly positive.
    """
    norm = net.normalized()
    state = initialize(norm, total_power, rsma)
    init_alloc = RsmaAllocation(state.common_power, state.private_power, np.zeros(net.num_ues))
    t_prev = _point_value(init_alloc, norm, rsma)
    trace = [TraceRow(0, t_prev, "initial", 0.0)]
    state.t_trace.append(t_prev)

    sp = ConvexSubproblem(norm, total_power, rsma, linearization)
    floor = power_floor * total_power
    converged = False
    sol = None
    for n in range(1, max_iters + 1):
        sp.set_point(state)
        tic = time.perf_counter()
        sol, status = solve_subproblem(sp)
        elapsed = time.perf_counter() - tic
        if sol is None:
            trace.append(TraceRow(n, float("nan"), str(status), elapsed))
            raise ScaError(f"subproblem {n} failed with status {status}", trace)
        trace.append(TraceRow(n, sol.t, str(status), elapsed))
        state.t_trace.append(sol.t)

        p, P = _clean_powers(sol.private_power, sol.common_power, total_power, floor)
        if not rsma:
            P = np.zeros_like(P)
        bc, bp = beta_bounds(norm, p)
        state = ScaState(
            n, p, P,
            np.maximum(sol.beta_c, bc) if rsma else bc,
            np.maximum(sol.beta_p, bp),
            state.t_trace,
        )
        if abs(sol.t - t_prev) <= tol * max(abs(t_prev), 1e-300):
            converged = True
            break
        t_prev = sol.t

    raw = RsmaAllocation(state.common_power, state.private_power,
                         np.maximum(sol.common_share, 0.0))
    alloc, rates = certify(raw, norm)
    return ScaResult(alloc, rates, float(rates.min()), sol.t, trace, converged, state)


def run_no_rsma(net: Network, total_power, max_iters=20, tol=1e-3,
                linearization=CONCAVE) -> ScaResult:
    """Private streams only: no common power, no common shares."""
    return run_sca(net, total_power, max_iters, tol, rsma=False, linearization=linearization)


def single_user_capacity(g, total_power, noise_power, bandwidth=1.0):
    return float(rate(total_power * g / noise_power, bandwidth))
