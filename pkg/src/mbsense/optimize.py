"""Per-subchannel threshold optimization for multiband detection.

Two convex programs over the admissible threshold box
[gamma_min, gamma_max]^K (alpha, beta in (0, 1/2] keep both probability
curves convex there):

  throughput form    minimize  sum_k r_k Pf_k(gamma_k)
                     s.t.      sum_{i in S_j} c_i Pm_i(gamma_i) <= eps_j   (group j)

  interference form  minimize  sum_k c_k Pm_k(gamma_k)
                     s.t.      R(gamma) = sum_k r_k (1 - Pf_k(gamma_k)) >= delta

Maximizing aggregate opportunistic throughput under interference caps is
exactly the first form with the constant sum_k r_k dropped, so solve_p2
reports R(gamma) as its objective.

The primary solver is a log-barrier interior-point method: Newton steps
with Armijo backtracking (factor 0.5), barrier weight divided by 10 per
stage from the objective scale down until the duality-gap estimate falls
below 1e-9 relative, then an active-set Newton polish that solves the
KKT equalities to machine accuracy (pure barrier iterates cannot certify
tight stationarity when a multiplier is large, because the slack
budget - g(gamma) is lost to cancellation). Independent verification
paths: a Lagrangian dual-bisection oracle (single coupling constraint),
dense-grid refinement (multi-group, K <= 4), a derivative-free
coordinate-descent check, and a uniform-threshold baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .detection import (
    InfeasibleSubchannelError,
    NoiseModel,
    SubchannelParams,
    threshold_bounds,
    _h0_stats,
    _h1_stats,
)
from .gaussian import qfunc

__all__ = [
    "PrimaryUserGroup",
    "ProblemSpec",
    "SolverOptions",
    "KKTMultipliers",
    "Solution",
    "FeasibilityReport",
    "check_feasibility",
    "solve_p2",
    "solve_p3",
    "solve_uniform_baseline",
    "oracle_solve",
    "coordinate_descent_solve",
    "kkt_residual",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PrimaryUserGroup:
    """Subchannel indices protecting one primary user, with its aggregate
    interference budget epsilon (weighted miss probabilities)."""

    members: tuple[int, ...]
    epsilon: float

    def __post_init__(self):
        members = tuple(int(i) for i in self.members)
        if len(members) == 0:
            raise ValueError("group members must be nonempty")
        if len(set(members)) != len(members):
            raise ValueError("group members must be unique")
        if any(i < 0 for i in members):
            raise ValueError("group members must be nonnegative indices")
        object.__setattr__(self, "members", members)
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps < 0.0:
            raise ValueError("epsilon must be finite and >= 0")
        object.__setattr__(self, "epsilon", eps)


@dataclass(frozen=True)
class ProblemSpec:
    """Joint optimization instance: K subchannels, noise model, J >= 1
    primary-user groups (throughput form), and the aggregate throughput
    floor delta (interference form)."""

    subchannels: tuple[SubchannelParams, ...]
    noise: NoiseModel
    groups: tuple[PrimaryUserGroup, ...]
    delta: float = 0.0

    def __post_init__(self):
        subs = tuple(self.subchannels)
        if len(subs) == 0:
            raise ValueError("at least one subchannel is required")
        if not all(isinstance(s, SubchannelParams) for s in subs):
            raise ValueError("subchannels must be SubchannelParams")
        object.__setattr__(self, "subchannels", subs)
        groups = tuple(self.groups)
        if len(groups) == 0:
            raise ValueError("at least one group is required")
        k = len(subs)
        for j, grp in enumerate(groups):
            if any(i >= k for i in grp.members):
                raise ValueError(f"group {j} references subchannel index out of range")
        object.__setattr__(self, "groups", groups)
        delta = float(self.delta)
        if not np.isfinite(delta) or delta < 0.0:
            raise ValueError("delta must be finite and >= 0")
        object.__setattr__(self, "delta", delta)

    @property
    def num_subchannels(self) -> int:
        return len(self.subchannels)


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-9          # duality-gap stop, relative to objective scale
    newton_tol: float = 1e-9       # inner gradient norm, relative to gradient scale
    max_newton_iter: int = 200     # per barrier stage
    feas_tol: float = 1e-8         # allowed constraint violation
    kkt_tol: float = 1e-6          # residual needed to report status "optimal"


@dataclass(frozen=True)
class KKTMultipliers:
    """Lagrange multipliers: one per aggregate constraint, plus lower/upper
    box multipliers per subchannel."""

    aggregate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class Solution:
    """Solver output.

    objective is R(gamma) (throughput form) or the weighted aggregate miss
    probability (interference form). slacks holds budget minus constraint
    value per aggregate constraint. For infeasible instances the array
    fields are None and message explains the first violated condition.
    """

    status: str
    problem: str
    gamma: np.ndarray | None
    pf: np.ndarray | None
    pm: np.ndarray | None
    objective: float
    throughput: float
    weighted_false_alarm: float
    slacks: np.ndarray | None
    kkt_residual: float
    multipliers: KKTMultipliers | None
    iterations: int = 0
    message: str = ""


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    problem: str
    reason: str = ""
    subchannel: int | None = None
    group: int | None = None
    margins: np.ndarray | None = None


# ---------------------------------------------------------------------------
# internal model: vectorized curves and the generic constrained form


class _Model:
    """Vectorized Pf/Pm values and derivatives for all K subchannels."""

    def __init__(self, spec: ProblemSpec):
        subs = spec.subchannels
        self.gains = np.array([s.gain_power for s in subs])
        self.rates = np.array([s.rate for s in subs])
        self.costs = np.array([s.cost for s in subs])
        self.alphas = np.array([s.alpha for s in subs])
        self.betas = np.array([s.beta for s in subs])
        self.mean0, self.std0 = _h0_stats(spec.noise)
        self.mean1, self.std1 = _h1_stats(self.gains, spec.noise)

    def pf(self, gamma: np.ndarray) -> np.ndarray:
        return qfunc((gamma - self.mean0) / self.std0)

    def pm(self, gamma: np.ndarray) -> np.ndarray:
        return 1.0 - qfunc((gamma - self.mean1) / self.std1)

    def pf_d(self, gamma: np.ndarray):
        u = (gamma - self.mean0) / self.std0
        phi = _INV_SQRT_2PI * np.exp(-0.5 * u * u)
        return -phi / self.std0, u * phi / (self.std0 * self.std0)

    def pm_d(self, gamma: np.ndarray):
        w = (gamma - self.mean1) / self.std1
        phi = _INV_SQRT_2PI * np.exp(-0.5 * w * w)
        return phi / self.std1, -w * phi / (self.std1 * self.std1)


@dataclass
class _Term:
    """Weighted sum of pf or pm curves over an index subset."""

    idx: np.ndarray      # subchannel indices
    coef: np.ndarray     # nonnegative weights, aligned with idx
    kind: str            # "pf" or "pm"

    def value(self, model: _Model, gamma: np.ndarray) -> float:
        cur = model.pf(gamma) if self.kind == "pf" else model.pm(gamma)
        return float(self.coef @ cur[self.idx])

    def grad(self, model: _Model, gamma: np.ndarray) -> np.ndarray:
        d1 = (model.pf_d(gamma) if self.kind == "pf" else model.pm_d(gamma))[0]
        out = np.zeros_like(gamma)
        out[self.idx] = self.coef * d1[self.idx]
        return out

    def hess_diag(self, model: _Model, gamma: np.ndarray) -> np.ndarray:
        d2 = (model.pf_d(gamma) if self.kind == "pf" else model.pm_d(gamma))[1]
        out = np.zeros_like(gamma)
        out[self.idx] = self.coef * d2[self.idx]
        return out


@dataclass
class _Program:
    """minimize objective.value(gamma) s.t. cons[j].value <= budgets[j], box."""

    objective: _Term
    cons: list[_Term]
    budgets: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    loose_corner: np.ndarray   # componentwise minimizer of every constraint
    best_corner: np.ndarray    # componentwise minimizer of the objective


def _bounds(spec: ProblemSpec):
    lo = np.empty(spec.num_subchannels)
    hi = np.empty(spec.num_subchannels)
    for k, sub in enumerate(spec.subchannels):
        b = threshold_bounds(sub, spec.noise, index=k)
        lo[k], hi[k] = b.gamma_min, b.gamma_max
    return lo, hi


def _build_program(spec: ProblemSpec, model: _Model, problem: str) -> _Program:
    lo, hi = _bounds(spec)
    k = spec.num_subchannels
    if problem == "p2":
        objective = _Term(np.arange(k), model.rates.copy(), "pf")
        cons, budgets = [], []
        for grp in spec.groups:
            idx = np.array(grp.members, dtype=int)
            cons.append(_Term(idx, model.costs[idx], "pm"))
            budgets.append(grp.epsilon)
        return _Program(objective, cons, np.array(budgets), lo, hi,
                        loose_corner=lo, best_corner=hi)
    if problem == "p3":
        objective = _Term(np.arange(k), model.costs.copy(), "pm")
        cons = [_Term(np.arange(k), model.rates.copy(), "pf")]
        budgets = np.array([float(model.rates.sum() - spec.delta)])
        return _Program(objective, cons, budgets, lo, hi,
                        loose_corner=hi, best_corner=lo)
    raise ValueError("problem must be 'p2' or 'p3'")


def _feas_margin_tol(budget: float, feas_tol: float) -> float:
    return feas_tol * max(1.0, abs(budget))


# ---------------------------------------------------------------------------
# feasibility


def check_feasibility(spec: ProblemSpec, problem: str = "p2") -> FeasibilityReport:
    """Exact feasibility test.

    The throughput form is feasible iff every group budget is met with all
    thresholds at gamma_min (miss probabilities are increasing); the
    interference form is feasible iff the throughput floor is met at
    gamma_max (false alarms are decreasing). An empty per-subchannel box
    is reported with the offending index.
    """
    if problem not in ("p2", "p3"):
        raise ValueError("problem must be 'p2' or 'p3'")
    model = _Model(spec)
    try:
        prog = _build_program(spec, model, problem)
    except InfeasibleSubchannelError as err:
        return FeasibilityReport(False, problem, reason=str(err), subchannel=err.index)
    margins = np.array([b - c.value(model, prog.loose_corner)
                        for c, b in zip(prog.cons, prog.budgets)])
    for j, margin in enumerate(margins):
        if margin < -_feas_margin_tol(prog.budgets[j], 1e-9):
            if problem == "p2":
                reason = (f"group {j}: weighted miss probability at the lower "
                          f"threshold corner exceeds the budget "
                          f"({prog.budgets[j] - margin:.6g} > {prog.budgets[j]:.6g})")
                return FeasibilityReport(False, problem, reason=reason, group=j, margins=margins)
            rates_total = float(model.rates.sum())
            reason = (f"throughput at the upper threshold corner is "
                      f"{rates_total - (prog.budgets[0] - margin):.6g} < delta {spec.delta:.6g}")
            return FeasibilityReport(False, problem, reason=reason, margins=margins)
    return FeasibilityReport(True, problem, margins=margins)


# ---------------------------------------------------------------------------
# KKT assembly


def _stationarity(model, prog, gamma, aggregate):
    resid = prog.objective.grad(model, gamma)
    for lam, con in zip(aggregate, prog.cons):
        if lam != 0.0:
            resid += lam * con.grad(model, gamma)
    return resid


def _box_multipliers_from_stationarity(prog, gamma, resid, span_tol=1e-7):
    span = np.maximum(prog.hi - prog.lo, 1e-300)
    at_lo = (gamma - prog.lo) <= span_tol * span
    at_hi = (prog.hi - gamma) <= span_tol * span
    lower = np.where(at_lo & ~at_hi, np.maximum(resid, 0.0), 0.0)
    upper = np.where(at_hi, np.maximum(-resid, 0.0), 0.0)
    # zero-width coordinates: both bounds active, either sign absorbable
    both = at_lo & at_hi
    lower = np.where(both, np.maximum(resid, 0.0), lower)
    upper = np.where(both, np.maximum(-resid, 0.0), upper)
    return lower, upper


def kkt_residual(spec: ProblemSpec, gamma, multipliers: KKTMultipliers,
                 problem: str = "p2") -> float:
    """Max norm over stationarity, primal/dual feasibility and
    complementary slackness for the given point and multipliers."""
    model = _Model(spec)
    prog = _build_program(spec, model, problem)
    g = np.asarray(gamma, dtype=float)
    lam = np.asarray(multipliers.aggregate, dtype=float)
    lower = np.asarray(multipliers.lower, dtype=float)
    upper = np.asarray(multipliers.upper, dtype=float)
    resid = _stationarity(model, prog, g, lam) - lower + upper
    values = np.array([c.value(model, g) for c in prog.cons])
    slacks = prog.budgets - values
    parts = [
        float(np.max(np.abs(resid))),
        float(np.max(np.maximum(-slacks, 0.0), initial=0.0)),
        float(np.max(np.maximum(prog.lo - g, 0.0))),
        float(np.max(np.maximum(g - prog.hi, 0.0))),
        float(np.max(np.maximum(-lam, 0.0), initial=0.0)),
        float(np.max(np.maximum(-lower, 0.0))),
        float(np.max(np.maximum(-upper, 0.0))),
        float(np.max(np.abs(lam * slacks), initial=0.0)),
        float(np.max(np.abs(lower * (g - prog.lo)))),
        float(np.max(np.abs(upper * (prog.hi - g)))),
    ]
    return max(parts)


# ---------------------------------------------------------------------------
# solution assembly


def _finish(spec, model, prog, problem, gamma, multipliers, status, iterations,
            message="") -> Solution:
    pf = model.pf(gamma)
    pm = model.pm(gamma)
    throughput = float(model.rates @ (1.0 - pf))
    wfa = float(model.rates @ pf)
    objective = throughput if problem == "p2" else float(model.costs @ pm)
    values = np.array([c.value(model, gamma) for c in prog.cons])
    slacks = prog.budgets - values
    kkt = kkt_residual(spec, gamma, multipliers, problem)
    # an optimal status certifies feasibility within 1e-8 and KKT within 1e-6
    violated = any(s < -_feas_margin_tol(b, 1e-8)
                   for s, b in zip(slacks, prog.budgets))
    if status == "optimal" and (violated or kkt > 1e-6):
        status = "max-iterations"
        message = message or "stopped before reaching the requested tolerances"
    return Solution(status=status, problem=problem, gamma=gamma, pf=pf, pm=pm,
                    objective=objective, throughput=throughput,
                    weighted_false_alarm=wfa, slacks=slacks, kkt_residual=kkt,
                    multipliers=multipliers, iterations=iterations, message=message)


def _infeasible(problem: str, reason: str) -> Solution:
    return Solution(status="infeasible", problem=problem, gamma=None, pf=None,
                    pm=None, objective=math.nan, throughput=math.nan,
                    weighted_false_alarm=math.nan, slacks=None,
                    kkt_residual=math.nan, multipliers=None, message=reason)


def _corner_multipliers(model, prog, gamma):
    """Valid multipliers for a corner solution.

    Slack constraints get lambda = 0 (complementary slackness). A binding
    constraint gets the smallest lambda compatible with nonnegative box
    multipliers: stationarity needs obj_grad + lambda*con_grad >= 0 at a
    lower bound and <= 0 at an upper bound, which turns into per-
    coordinate lower/upper requirements on lambda."""
    obj_grad = prog.objective.grad(model, gamma)
    span = np.maximum(prog.hi - prog.lo, 1e-300)
    at_lo = (gamma - prog.lo) <= 1e-9 * span
    at_hi = (prog.hi - gamma) <= 1e-9 * span
    both = at_lo & at_hi
    lam = np.zeros(len(prog.cons))
    for j, con in enumerate(prog.cons):
        slack = prog.budgets[j] - con.value(model, gamma)
        if slack > _feas_margin_tol(prog.budgets[j], 1e-9):
            continue
        cg = con.grad(model, gamma)
        lo_req = 0.0
        for k in np.flatnonzero((cg != 0.0) & ~both):
            ratio = -obj_grad[k] / cg[k]
            needs_lower = at_lo[k] == (cg[k] > 0.0)
            if needs_lower:
                lo_req = max(lo_req, ratio)
        lam[j] = lo_req
    resid = _stationarity(model, prog, gamma, lam)
    lower, upper = _box_multipliers_from_stationarity(prog, gamma, resid)
    return KKTMultipliers(lam, lower, upper)


# ---------------------------------------------------------------------------
# barrier solver


def _phase1(model, prog):
    """Largest t with gamma(t) = loose + t*(best - loose) feasible, and a
    strictly feasible start at half that distance."""
    direction = prog.best_corner - prog.loose_corner
    t_max = 1.0
    for con, budget in zip(prog.cons, prog.budgets):
        if con.value(model, prog.best_corner) <= budget:
            continue
        a, b = 0.0, 1.0
        for _ in range(90):
            mid = 0.5 * (a + b)
            if con.value(model, prog.loose_corner + mid * direction) <= budget:
                a = mid
            else:
                b = mid
        t_max = min(t_max, a)
    return t_max, prog.loose_corner + 0.5 * t_max * direction


def _barrier_phi(model, prog, free, gamma, mu):
    slacks = prog.budgets - np.array([c.value(model, gamma) for c in prog.cons])
    if np.any(slacks <= 0.0):
        return math.inf, slacks
    dlo = gamma[free] - prog.lo[free]
    dhi = prog.hi[free] - gamma[free]
    if np.any(dlo <= 0.0) or np.any(dhi <= 0.0):
        return math.inf, slacks
    val = prog.objective.value(model, gamma)
    val -= mu * (np.log(dlo).sum() + np.log(dhi).sum() + np.log(slacks).sum())
    return val, slacks


def _newton_stage(model, prog, free, gamma, mu, opts, grad_scale):
    """Minimize the barrier composite at fixed mu. Returns (gamma, iters,
    converged)."""
    n_free = int(np.count_nonzero(free))
    gtol = opts.newton_tol * grad_scale
    span = np.maximum(prog.hi - prog.lo, 1e-300)
    for it in range(opts.max_newton_iter):
        slacks = prog.budgets - np.array([c.value(model, gamma) for c in prog.cons])
        lam = mu / slacks
        obj_grad = prog.objective.grad(model, gamma)
        obj_hess = prog.objective.hess_diag(model, gamma)
        grad_full = obj_grad.copy()
        hess_diag = obj_hess.copy()
        con_grads = []
        for j, con in enumerate(prog.cons):
            cg = con.grad(model, gamma)
            con_grads.append(cg)
            grad_full += lam[j] * cg
            hess_diag += lam[j] * con.hess_diag(model, gamma)
        dlo = gamma - prog.lo
        dhi = prog.hi - gamma
        grad_full += np.where(free, -mu / np.where(free, dlo, 1.0)
                              + mu / np.where(free, dhi, 1.0), 0.0)
        hess_diag += np.where(free, mu / np.where(free, dlo, 1.0) ** 2
                              + mu / np.where(free, dhi, 1.0) ** 2, 0.0)
        grad = grad_full[free]
        if float(np.max(np.abs(grad), initial=0.0)) <= gtol:
            return gamma, it, True
        hess = np.diag(hess_diag[free])
        for j, cg in enumerate(con_grads):
            v = cg[free]
            hess += np.outer(v, v) * (lam[j] / slacks[j])
        step = None
        ridge = 0.0
        for _ in range(6):
            try:
                step = np.linalg.solve(hess + ridge * np.eye(n_free), -grad)
                if np.all(np.isfinite(step)):
                    break
            except np.linalg.LinAlgError:
                pass
            ridge = max(ridge * 10.0, 1e-10 * float(np.max(hess_diag[free])))
        if step is None or not np.all(np.isfinite(step)):
            return gamma, it + 1, False
        delta = np.zeros_like(gamma)
        delta[free] = step
        # stay strictly inside the box
        t = 1.0
        with np.errstate(divide="ignore"):
            pos = delta > 0
            neg = delta < 0
            if np.any(pos):
                t = min(t, 0.995 * float(np.min(dhi[pos] / delta[pos])))
            if np.any(neg):
                t = min(t, 0.995 * float(np.min(dlo[neg] / -delta[neg])))
        phi0, _ = _barrier_phi(model, prog, free, gamma, mu)
        slope = float(grad @ step)
        moved = False
        for _ in range(60):
            cand = gamma + t * delta
            phi1, _ = _barrier_phi(model, prog, free, cand, mu)
            if phi1 <= phi0 + 0.25 * t * slope:
                gamma = cand
                moved = True
                break
            t *= 0.5
        if not moved or float(np.max(np.abs(t * delta))) <= 1e-15 * float(np.max(span)):
            # numerical floor for this stage; the polish step takes over
            return gamma, it + 1, True
    return gamma, opts.max_newton_iter, False


def _solve_barrier(model, prog, gamma0, opts):
    span = prog.hi - prog.lo
    free = span > 1e-12 * np.maximum(1.0, np.abs(prog.hi))
    gamma = np.where(free, gamma0, prog.lo)
    n_terms = 2 * int(np.count_nonzero(free)) + len(prog.cons)
    grad_scale = max(1.0, float(np.max(np.abs(prog.objective.grad(model, gamma)))))
    # start the ladder at the objective scale; a fixed mu0 = 1 leaves the
    # early stages objective-dominated when the weights are large
    mu = max(1.0, abs(prog.objective.value(model, gamma)))
    total_iters = 0
    converged_all = True
    while True:
        gamma, iters, converged = _newton_stage(model, prog, free, gamma, mu, opts, grad_scale)
        total_iters += iters
        converged_all = converged_all and converged
        obj_scale = max(1.0, abs(prog.objective.value(model, gamma)))
        if n_terms * mu < opts.gap_tol * obj_scale:
            break
        mu /= 10.0
    slacks = prog.budgets - np.array([c.value(model, gamma) for c in prog.cons])
    lam = mu / slacks
    return gamma, lam, mu, total_iters, converged_all


# ---------------------------------------------------------------------------
# active-set Newton polish


def _polish(model, prog, gamma_b, lam_b, act_box_tol=1e-5):
    """Solve the KKT equalities for the active set suggested by the barrier
    point. Returns (gamma, aggregate multipliers) or None if the active
    set cannot be validated."""
    span = np.maximum(prog.hi - prog.lo, 1e-300)
    free_width = span > 1e-12 * np.maximum(1.0, np.abs(prog.hi))
    at_lo0 = (gamma_b - prog.lo) <= act_box_tol * span
    at_hi0 = (prog.hi - gamma_b) <= act_box_tol * span
    at_lo, at_hi = at_lo0.copy(), at_hi0.copy()
    # a constraint counts as active when its barrier multiplier is
    # nonnegligible or its slack has collapsed; a binding budget on a
    # nearly flat objective carries a tiny true multiplier, so the
    # multiplier test alone misses it
    lam_scale = max(1.0, float(np.max(lam_b, initial=0.0)))
    slack_b = prog.budgets - np.array([c.value(model, gamma_b) for c in prog.cons])
    active_cons = [j for j in range(len(prog.cons))
                   if lam_b[j] > 1e-8 * lam_scale
                   or slack_b[j] <= _feas_margin_tol(prog.budgets[j], 1e-5)]

    # coordinates with no objective weight and no active-constraint weight
    # are flat: freeze them here, tie-break later
    flat = np.zeros_like(at_lo)
    obj_w = np.zeros_like(gamma_b)
    obj_w[prog.objective.idx] = prog.objective.coef
    touched = np.zeros_like(at_lo)
    for j in active_cons:
        w = np.zeros_like(gamma_b)
        w[prog.cons[j].idx] = prog.cons[j].coef
        touched |= w > 0.0
    flat = (obj_w == 0.0) & ~touched

    for _ in range(8):
        fixed = at_lo | at_hi | ~free_width | flat
        free = ~fixed
        gamma = np.where(at_hi & free_width, prog.hi, np.where(at_lo | ~free_width, prog.lo, gamma_b))
        gamma[free] = gamma_b[free]
        lam = np.array([lam_b[j] for j in active_cons])
        n_f, n_a = int(np.count_nonzero(free)), len(active_cons)
        ok = True
        for _ in range(60):
            grad = prog.objective.grad(model, gamma)
            hess = prog.objective.hess_diag(model, gamma)
            cons_grads = []
            for idx_a, j in enumerate(active_cons):
                cg = prog.cons[j].grad(model, gamma)
                cons_grads.append(cg)
                grad += lam[idx_a] * cg
                hess += lam[idx_a] * prog.cons[j].hess_diag(model, gamma)
            f1 = grad[free]
            f2 = np.array([prog.cons[j].value(model, gamma) - prog.budgets[j]
                           for j in active_cons])
            res = max(float(np.max(np.abs(f1), initial=0.0)),
                      float(np.max(np.abs(f2), initial=0.0)))
            if res <= 1e-11 * max(1.0, float(np.max(np.abs(grad)))):
                break
            jac = np.zeros((n_f + n_a, n_f + n_a))
            jac[:n_f, :n_f] = np.diag(hess[free])
            for idx_a in range(n_a):
                v = cons_grads[idx_a][free]
                jac[:n_f, n_f + idx_a] = v
                jac[n_f + idx_a, :n_f] = v
            rhs = -np.concatenate([f1, f2])
            try:
                step = np.linalg.solve(jac, rhs)
            except np.linalg.LinAlgError:
                ok = False
                break
            if not np.all(np.isfinite(step)):
                ok = False
                break
            new_gamma = gamma.copy()
            new_gamma[free] = gamma[free] + step[:n_f]
            lam = lam + step[n_f:]
            gamma = new_gamma
        if not ok:
            return None
        # validate the active set; constraints left out of it must still
        # hold at the polished point, otherwise restore them and restart
        # from the barrier's box guess (the reduced system may have
        # dragged coordinates onto the wrong bounds)
        slack = prog.budgets - np.array([c.value(model, gamma) for c in prog.cons])
        restored = [j for j in range(len(prog.cons))
                    if j not in active_cons
                    and slack[j] < -_feas_margin_tol(prog.budgets[j], 1e-9)]
        if restored:
            active_cons = sorted(set(active_cons) | set(restored))
            at_lo, at_hi = at_lo0.copy(), at_hi0.copy()
            continue
        out_lo = free & (gamma < prog.lo - 1e-9 * span)
        out_hi = free & (gamma > prog.hi + 1e-9 * span)
        bad_lam = [active_cons[i] for i in range(n_a) if lam[i] < -1e-10]
        if not np.any(out_lo) and not np.any(out_hi) and not bad_lam:
            gamma = np.clip(gamma, prog.lo, prog.hi)
            full_lam = np.zeros(len(prog.cons))
            for idx_a, j in enumerate(active_cons):
                full_lam[j] = max(0.0, lam[idx_a])
            return gamma, full_lam
        at_lo = at_lo | out_lo
        at_hi = at_hi | out_hi
        active_cons = [j for j in active_cons if j not in bad_lam]
    return None


def _tie_break_flat(model, prog, gamma, feas_tol):
    """Move flat coordinates (zero objective weight) to gamma_max when all
    aggregate budgets still hold; binding budgets pin them where
    optimality put them."""
    obj_w = np.zeros_like(gamma)
    obj_w[prog.objective.idx] = prog.objective.coef
    span = prog.hi - prog.lo
    for k in np.flatnonzero((obj_w == 0.0) & (span > 0.0)):
        if gamma[k] == prog.hi[k]:
            continue
        trial = gamma.copy()
        trial[k] = prog.hi[k]
        ok = all(c.value(model, trial) <= b + _feas_margin_tol(b, feas_tol)
                 for c, b in zip(prog.cons, prog.budgets))
        if ok:
            gamma = trial
    return gamma


def _solve_joint(spec: ProblemSpec, problem: str, opts: SolverOptions) -> Solution:
    model = _Model(spec)
    try:
        prog = _build_program(spec, model, problem)
    except InfeasibleSubchannelError as err:
        return _infeasible(problem, str(err))

    # drop constraints with no weight on any subchannel (trivially satisfied
    # or violated regardless of gamma)
    keep = []
    for j, con in enumerate(prog.cons):
        if np.all(con.coef == 0.0):
            if prog.budgets[j] < 0.0:
                return _infeasible(problem, f"constraint {j} has zero weights and negative budget")
            continue
        keep.append(j)
    if len(keep) != len(prog.cons):
        prog = replace(prog, cons=[prog.cons[j] for j in keep],
                       budgets=prog.budgets[keep] if keep else np.zeros(0))

    report = check_feasibility(spec, problem)
    if not report.feasible:
        return _infeasible(problem, report.reason)

    # corner shortcut: objective-best corner already satisfies every budget
    best = prog.best_corner.copy()
    if all(c.value(model, best) <= b + _feas_margin_tol(b, opts.feas_tol)
           for c, b in zip(prog.cons, prog.budgets)):
        best = _tie_break_flat(model, prog, best, opts.feas_tol)
        mult = _corner_multipliers(model, prog, best)
        return _finish(spec, model, prog, problem, best, mult, "optimal", 0)

    t_max, gamma0 = _phase1(model, prog)
    if t_max <= 1e-10:
        # feasible set collapses onto the loose corner
        gamma = prog.loose_corner.copy()
        mult = _corner_multipliers(model, prog, gamma)
        return _finish(spec, model, prog, problem, gamma, mult, "optimal", 0)

    gamma, lam, mu, iters, clean = _solve_barrier(model, prog, gamma0, opts)
    polished = _polish(model, prog, gamma, lam)
    if polished is not None:
        gamma, lam = polished
    gamma = _tie_break_flat(model, prog, gamma, opts.feas_tol)
    resid = _stationarity(model, prog, gamma, lam)
    lower, upper = _box_multipliers_from_stationarity(prog, gamma, resid)
    mult = KKTMultipliers(lam, lower, upper)
    sol = _finish(spec, model, prog, problem, gamma, mult, "optimal", iters)
    # a stalled barrier stage is fine as long as the polished point
    # certifies: the program is convex, so KKT plus feasibility is a
    # global optimality certificate regardless of the path taken
    violation = float(np.max(np.maximum(-sol.slacks, 0.0), initial=0.0))
    if sol.kkt_residual > opts.kkt_tol or violation > opts.feas_tol:
        sol = replace(sol, status="max-iterations",
                      message="stopped before reaching the requested tolerances")
    return sol


def solve_p2(spec: ProblemSpec, options: SolverOptions | None = None) -> Solution:
    """Maximize aggregate opportunistic throughput subject to the per-group
    interference budgets, over the admissible threshold box.

    Returns a Solution whose objective is R(gamma); weighted_false_alarm
    carries the minimized form sum_k r_k Pf_k.
    """
    return _solve_joint(spec, "p2", options or SolverOptions())


def solve_p3(spec: ProblemSpec, options: SolverOptions | None = None) -> Solution:
    """Minimize the weighted aggregate miss probability subject to the
    throughput floor R(gamma) >= delta, over the admissible threshold box."""
    return _solve_joint(spec, "p3", options or SolverOptions())


# ---------------------------------------------------------------------------
# uniform-threshold baseline


def _golden_min(fn, a: float, b: float, tol: float = 1e-8):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = fn(x2)
    return 0.5 * (a + b)


def solve_uniform_baseline(spec: ProblemSpec, problem: str = "p2",
                           options: SolverOptions | None = None) -> Solution:
    """Best single threshold applied to every subchannel.

    Golden-section search over the scalar feasible interval (the box
    intersection further clipped by the aggregate constraints). The
    kkt_residual certifies the one-dimensional restricted program, not
    the joint one; on identical subchannels the two coincide.
    """
    opts = options or SolverOptions()
    model = _Model(spec)
    try:
        prog = _build_program(spec, model, problem)
    except InfeasibleSubchannelError as err:
        return _infeasible(problem, str(err))
    lo_s = float(np.max(prog.lo))
    hi_s = float(np.min(prog.hi))
    if lo_s > hi_s:
        return _infeasible(problem, "scalar threshold interval is empty")
    k = spec.num_subchannels

    def uni(x):
        return np.full(k, x)

    # clip the interval by each aggregate constraint (monotone in the scalar)
    a, b = lo_s, hi_s
    for con, budget in zip(prog.cons, prog.budgets):
        tol = _feas_margin_tol(budget, opts.feas_tol)
        va, vb = con.value(model, uni(a)), con.value(model, uni(b))
        if va <= budget + tol and vb <= budget + tol:
            continue
        if va > budget + tol and vb > budget + tol:
            return _infeasible(problem, "no uniform threshold satisfies the aggregate constraints")
        increasing = vb > va
        x_lo, x_hi = a, b
        for _ in range(200):
            mid = 0.5 * (x_lo + x_hi)
            feas = con.value(model, uni(mid)) <= budget
            if feas == increasing:
                x_lo = mid
            else:
                x_hi = mid
        if increasing:
            b = x_lo  # keep the feasible (low) side
        else:
            a = x_hi
    if a > b:
        return _infeasible(problem, "no uniform threshold satisfies the aggregate constraints")

    gamma_s = _golden_min(lambda x: prog.objective.value(model, uni(x)), a, b)
    # snap to an endpoint when the optimum sits on the interval edge
    for edge in (a, b):
        if abs(gamma_s - edge) < 1e-6 and \
                prog.objective.value(model, uni(edge)) <= prog.objective.value(model, uni(gamma_s)):
            gamma_s = edge
    gamma = uni(gamma_s)

    # 1-D KKT: stationarity of the scalar program with the active multipliers
    obj_d = float(prog.objective.grad(model, gamma).sum())
    lam = np.zeros(len(prog.cons))
    values = np.array([c.value(model, gamma) for c in prog.cons])
    slacks = prog.budgets - values
    station = obj_d
    for j, con in enumerate(prog.cons):
        if slacks[j] <= _feas_margin_tol(prog.budgets[j], 1e-7):
            cg = float(con.grad(model, gamma).sum())
            if cg != 0.0:
                lam[j] = max(0.0, -station / cg)
                station += lam[j] * cg
    eta_lo = max(0.0, station) if abs(gamma_s - lo_s) < 1e-6 else 0.0
    eta_hi = max(0.0, -station) if abs(gamma_s - hi_s) < 1e-6 else 0.0
    resid_1d = abs(station - eta_lo + eta_hi)
    cs = max([abs(lam[j] * slacks[j]) for j in range(len(prog.cons))], default=0.0)
    kkt_1d = max(resid_1d, cs, float(np.max(np.maximum(-slacks, 0.0), initial=0.0)))

    pf = model.pf(gamma)
    pm = model.pm(gamma)
    throughput = float(model.rates @ (1.0 - pf))
    objective = throughput if problem == "p2" else float(model.costs @ pm)
    mult = KKTMultipliers(lam, np.full(k, eta_lo), np.full(k, eta_hi))
    return Solution(status="optimal", problem=problem, gamma=gamma, pf=pf, pm=pm,
                    objective=objective, throughput=throughput,
                    weighted_false_alarm=float(model.rates @ pf), slacks=slacks,
                    kkt_residual=kkt_1d, multipliers=mult)


# ---------------------------------------------------------------------------
# oracles


def _per_channel_argmin(model, prog, w_obj, w_con, kind_obj, kind_con, lam):
    """Vectorized per-channel minimizer of w_obj*F + lam*w_con*G over the box,
    where F/G are the pf/pm curves named by kind_obj/kind_con."""
    lo, hi = prog.lo, prog.hi

    def dpsi(g):
        pf_d1 = model.pf_d(g)[0]
        pm_d1 = model.pm_d(g)[0]
        d_obj = pf_d1 if kind_obj == "pf" else pm_d1
        d_con = pf_d1 if kind_con == "pf" else pm_d1
        return w_obj * d_obj + lam * w_con * d_con

    flat = (w_obj == 0.0) & (lam * w_con == 0.0)
    d_lo, d_hi = dpsi(lo), dpsi(hi)
    gamma = np.where(d_lo >= 0.0, lo, np.where(d_hi <= 0.0, hi, 0.0))
    interior = (d_lo < 0.0) & (d_hi > 0.0)
    a, b = lo.copy(), hi.copy()
    for _ in range(200):
        mid = 0.5 * (a + b)
        neg = dpsi(mid) < 0.0
        a = np.where(neg, mid, a)
        b = np.where(neg, b, mid)
    gamma = np.where(interior, 0.5 * (a + b), gamma)
    return np.where(flat, hi, gamma)


def oracle_solve(spec: ProblemSpec, problem: str = "p2") -> Solution:
    """Independent reference solver.

    Single coupling constraint (one group for the throughput form; the
    interference form always): Lagrangian decomposition with per-channel
    derivative bisection and dual bisection on the multiplier until
    complementary slackness. Multi-group instances fall back to dense
    grid refinement (K <= 4) followed by an exact active-set solve.
    """
    model = _Model(spec)
    try:
        prog = _build_program(spec, model, problem)
    except InfeasibleSubchannelError as err:
        return _infeasible(problem, str(err))
    report = check_feasibility(spec, problem)
    if not report.feasible:
        return _infeasible(problem, report.reason)
    if len(prog.cons) > 1:
        if spec.num_subchannels > 4:
            raise ValueError("oracle supports one coupling constraint, or K <= 4 via grid refinement")
        return _oracle_grid(spec, model, prog, problem)

    con, budget = prog.cons[0], float(prog.budgets[0])
    k = spec.num_subchannels
    w_obj = np.zeros(k)
    w_obj[prog.objective.idx] = prog.objective.coef
    w_con = np.zeros(k)
    w_con[con.idx] = con.coef
    kind_obj, kind_con = prog.objective.kind, con.kind

    def solve_at(lam):
        return _per_channel_argmin(model, prog, w_obj, w_con, kind_obj, kind_con, lam)

    def excess(lam):
        return con.value(model, solve_at(lam)) - budget

    lam_star = 0.0
    if excess(0.0) > 0.0:
        lam_hi = 1.0
        for _ in range(120):
            if excess(lam_hi) <= 0.0:
                break
            lam_hi *= 2.0
        lam_lo = 0.0
        for _ in range(400):
            if lam_hi - lam_lo <= 1e-14 * max(1.0, lam_hi):
                break
            mid = 0.5 * (lam_lo + lam_hi)
            if excess(mid) > 0.0:
                lam_lo = mid
            else:
                lam_hi = mid
        lam_star = lam_hi  # feasible side of the bracket
    gamma = solve_at(lam_star)
    gamma = _tie_break_flat(model, prog, gamma, 1e-9)
    lam_vec = np.array([lam_star])
    resid = _stationarity(model, prog, gamma, lam_vec)
    lower, upper = _box_multipliers_from_stationarity(prog, gamma, resid)
    mult = KKTMultipliers(lam_vec, lower, upper)
    return _finish(spec, model, prog, problem, gamma, mult, "optimal", 0)


def _grid_refine(model, prog, points_per_axis=9, rounds=120):
    k = prog.lo.size
    lo_cur, hi_cur = prog.lo.copy(), prog.hi.copy()
    incumbent = None
    inc_val = math.inf
    span0 = float(np.max(prog.hi - prog.lo))
    for _ in range(rounds):
        axes = [np.linspace(lo_cur[i], hi_cur[i], points_per_axis) for i in range(k)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        if incumbent is not None:
            pts = np.vstack([pts, incumbent])
        feasible = np.ones(len(pts), dtype=bool)
        for con, budget in zip(prog.cons, prog.budgets):
            cur = model.pf(pts) if con.kind == "pf" else model.pm(pts)
            vals = cur[:, con.idx] @ con.coef
            feasible &= vals <= budget + 1e-12 * max(1.0, abs(budget))
        if np.any(feasible):
            sel = pts[feasible]
            cur = model.pf(sel) if prog.objective.kind == "pf" else model.pm(sel)
            obj = cur[:, prog.objective.idx] @ prog.objective.coef
            i_best = int(np.argmin(obj))
            if obj[i_best] < inc_val:
                inc_val = float(obj[i_best])
                incumbent = sel[i_best].copy()
        if incumbent is None:
            # shrink toward the loose corner until a feasible point appears
            hi_cur = lo_cur + 0.5 * (hi_cur - lo_cur)
            continue
        width = hi_cur - lo_cur
        on_edge = (incumbent <= lo_cur + 1e-12 * span0) | (incumbent >= hi_cur - 1e-12 * span0)
        shrink = np.where(on_edge, 1.0, 0.35)
        half = 0.5 * width * shrink
        lo_cur = np.maximum(prog.lo, incumbent - half)
        hi_cur = np.minimum(prog.hi, incumbent + half)
        if float(np.max(width)) < 1e-12 * max(1.0, span0):
            break
    return incumbent


def _oracle_grid(spec, model, prog, problem):
    gamma = _grid_refine(model, prog)
    if gamma is None:
        return _infeasible(problem, "grid refinement found no feasible point")
    # recover multipliers from the refined point with an active-set solve
    values = np.array([c.value(model, gamma) for c in prog.cons])
    slacks = prog.budgets - values
    lam0 = np.where(slacks < 1e-5 * np.maximum(1.0, np.abs(prog.budgets)), 1.0, 0.0)
    polished = _polish(model, prog, gamma, lam0, act_box_tol=1e-4)
    if polished is not None:
        new_gamma, lam = polished
        if float(np.max(np.abs(new_gamma - gamma))) < 1e-3 * float(np.max(prog.hi - prog.lo)):
            gamma, full_lam = new_gamma, lam
        else:
            full_lam = lam0
    else:
        full_lam = lam0
    gamma = _tie_break_flat(model, prog, gamma, 1e-9)
    resid = _stationarity(model, prog, gamma, full_lam)
    lower, upper = _box_multipliers_from_stationarity(prog, gamma, resid)
    mult = KKTMultipliers(full_lam, lower, upper)
    return _finish(spec, model, prog, problem, gamma, mult, "optimal", 0)


def _golden_min_vec(psi, lo: np.ndarray, hi: np.ndarray, iters: int = 100) -> np.ndarray:
    """Componentwise golden-section minimization of a vectorized separable
    function psi (maps a gamma vector to per-coordinate values)."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        x1 = b - inv_phi * (b - a)
        x2 = a + inv_phi * (b - a)
        left = psi(x1) <= psi(x2)
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
    return 0.5 * (a + b)


def coordinate_descent_solve(spec: ProblemSpec, problem: str = "p2"):
    """Derivative-free verification path.

    The Lagrangian of either program separates across subchannels, so for
    fixed aggregate multipliers each coordinate is minimized exactly by
    golden section; the multipliers themselves are driven by cyclic
    bisection on their budgets (complementary slackness). No derivatives
    anywhere. Returns (gamma, objective).
    """
    model = _Model(spec)
    prog = _build_program(spec, model, problem)
    report = check_feasibility(spec, problem)
    if not report.feasible:
        raise ValueError(f"infeasible spec: {report.reason}")

    def argmin_for(lam: np.ndarray) -> np.ndarray:
        wpf = np.zeros(spec.num_subchannels)
        wpm = np.zeros(spec.num_subchannels)
        for weight, term in [(1.0, prog.objective)] + list(zip(lam, prog.cons)):
            target = wpf if term.kind == "pf" else wpm
            np.add.at(target, term.idx, weight * term.coef)

        def psi(x):
            return wpf * model.pf(x) + wpm * model.pm(x)

        gamma = _golden_min_vec(psi, prog.lo, prog.hi)
        # coordinates with no weight anywhere: park at the loose corner
        flat = (wpf == 0.0) & (wpm == 0.0)
        return np.where(flat, prog.loose_corner, gamma)

    lam = np.zeros(len(prog.cons))
    for _ in range(40 if len(prog.cons) > 1 else 1):
        settled = True
        for j, (con, budget) in enumerate(zip(prog.cons, prog.budgets)):
            tol = _feas_margin_tol(budget, 1e-11)

            def excess(lj: float) -> float:
                trial = lam.copy()
                trial[j] = lj
                return con.value(model, argmin_for(trial)) - budget

            if excess(0.0) <= tol:
                settled = settled and lam[j] == 0.0
                lam[j] = 0.0
                continue
            hi = max(1.0, 2.0 * lam[j])
            for _ in range(120):
                if excess(hi) <= 0.0:
                    break
                hi *= 2.0
            lo = 0.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if excess(mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            settled = settled and abs(hi - lam[j]) <= 1e-9 * max(1.0, hi)
            lam[j] = hi
        if settled:
            break
    gamma = argmin_for(lam)
    return gamma, prog.objective.value(model, gamma)
