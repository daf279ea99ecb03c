"""Independent reference solvers.

``brute_force_solve`` searches a plain (theta, lambda, pt) grid using only the
rate and energy constraint evaluators, so it shares no code path with the
closed-form rate matching in :mod:`swipt_relay.solver`.

``interior_point_fixed_theta`` is a small log-barrier method for the convex
fixed-theta subproblem, used as the cost baseline for the bisection solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Allocation, ChannelState, DomainError, SystemParams, _pt_ceiling, rate_rd, rate_sr
from .solver import check_feasibility

FLOPS_PER_NEWTON_STEP = 27  # Gaussian elimination on a 3x3 system


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n_theta: int = 200
    n_lambda: int = 400
    n_pt: int = 400
    refine_rounds: int = 2

    def __post_init__(self):
        if min(self.n_theta, self.n_lambda, self.n_pt) < 2:
            raise ValueError("grid resolutions must be at least 2")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be nonnegative")


@dataclass(frozen=True)
class IpReport:
    tau: float
    lam: float
    pt: float
    iterations: int
    barrier_path: list = field(default_factory=list)

    @property
    def flops(self) -> int:
        return FLOPS_PER_NEWTON_STEP * self.iterations


# --- brute force ---------------------------------------------------------------


def _pt_upper(p, c, theta):
    # Beyond the static-budget cap the energy constraint fails even with
    # lambda = tau = 0; beyond c the relay hop outpaces any source rate.
    budget = (p.eta * p.Q * c.g1 * theta - p.Pd * theta - p.Pe * (1.0 - theta)) / (1.0 - theta)
    return np.minimum(_pt_ceiling(p, c.g1, c.g2, theta), budget)


def _best_on_grid(p, c, thetas, lams, pt_lo, pt_hi, n_pt, chunk=8):
    """Maximise tau over the tensor grid; pt grid is per-theta ``linspace(pt_lo, pt_hi)``.

    Returns ``(tau, theta, lam, pt)`` of the first maximiser in (theta, lambda, pt)
    index order, or None when no grid point is feasible.
    """
    best = None
    frac = np.linspace(0.0, 1.0, n_pt)
    for start in range(0, len(thetas), chunk):
        th = thetas[start : start + chunk, None]
        pts = pt_lo[start : start + chunk, None] + frac * (pt_hi - pt_lo)[start : start + chunk, None]
        r_sr = rate_sr(p, c, lams[None, :], th)
        r_rd = rate_rd(p, c, pts, th)
        tau = np.minimum(r_sr[:, :, None], r_rd[:, None, :])
        th3 = th[:, :, None]
        consumed = p.Pd * th3 + p.Pe * (1.0 - th3) + p.eps * tau + pts[:, None, :] * (1.0 - th3)
        harvested = p.eta * p.Q * c.g1 * (1.0 - lams[None, :, None]) * th3
        tau = np.where(consumed <= harvested, tau, -np.inf)
        k = int(np.argmax(tau))
        i, j, l = np.unravel_index(k, tau.shape)
        val = tau[i, j, l]
        if np.isfinite(val) and (best is None or val > best[0]):
            best = (float(val), float(th[i, 0]), float(lams[j]), float(pts[i, l]))
    return best


def _window(center, span, lo, hi, n):
    a = max(lo, center - span / 2)
    b = min(hi, center + span / 2)
    return np.linspace(a, b, n)


def _refine(p, c, best, grid, spans, theta_bounds, theta_fixed=False):
    """Shrink every axis span 10x around the incumbent, ``grid.refine_rounds`` times."""
    th_lo, th_hi = theta_bounds
    history = [best[0]]
    span_th, span_lam, span_pt = spans
    for _ in range(grid.refine_rounds):
        _, th_c, lam_c, pt_c = best
        span_lam /= 10
        span_pt /= 10
        lams = _window(lam_c, span_lam, 0.0, 1.0, grid.n_lambda)
        if theta_fixed:
            thetas = np.array([th_c])
        else:
            span_th /= 10
            thetas = _window(th_c, span_th, th_lo, th_hi, grid.n_theta)
        cap = _pt_upper(p, c, thetas)
        pt_lo = np.clip(pt_c - span_pt / 2, 0.0, cap)
        pt_hi = np.clip(pt_c + span_pt / 2, 0.0, cap)
        cand = _best_on_grid(p, c, thetas, lams, pt_lo, pt_hi, grid.n_pt)
        if cand is not None and cand[0] > best[0]:
            best = cand
        history.append(best[0])
    return best, history


def brute_force_solve(p: SystemParams, c: ChannelState, grid: GridSpec | None = None) -> Allocation | None:
    """Grid maximiser of the joint problem; None when the instance is infeasible."""
    result = brute_force_search(p, c, grid)
    return None if result is None else result[0]


def brute_force_search(p: SystemParams, c: ChannelState, grid: GridSpec | None = None):
    """Like :func:`brute_force_solve` but also returns the per-round best tau."""
    grid = grid or GridSpec()
    gate = check_feasibility(p, c)
    if not gate:
        return None
    th0 = gate.theta0
    i = np.arange(1, grid.n_theta + 1)
    thetas = th0 + i * (1.0 - th0) / (grid.n_theta + 1)
    lams = np.linspace(0.0, 1.0, grid.n_lambda)
    cap = _pt_upper(p, c, thetas)
    best = _best_on_grid(p, c, thetas, lams, np.zeros_like(cap), cap, grid.n_pt)
    if best is None:
        return Allocation(0.0, 0.0, 0.0, 0.0), [0.0]
    step = (1.0 - th0) / (grid.n_theta + 1)
    theta_bounds = (th0 + step * 1e-3, 1.0 - step * 1e-3)
    spans = (1.0 - th0, 1.0, float(_pt_upper(p, c, best[1])))
    best, history = _refine(p, c, best, grid, spans, theta_bounds)
    tau, theta, lam, pt = best
    return Allocation(tau, lam, pt, theta), history


def brute_force_fixed_theta(
    p: SystemParams, c: ChannelState, theta: float, n_lambda: int = 400, n_pt: int = 400, refine_rounds: int = 2
) -> Allocation:
    gate = check_feasibility(p, c)
    if not gate:
        raise DomainError(f"infeasible instance: {gate.reason}")
    if not gate.theta0 < theta < 1:
        raise DomainError(f"theta={theta} outside ({gate.theta0}, 1)")
    grid = GridSpec(2, n_lambda, n_pt, refine_rounds)
    thetas = np.array([float(theta)])
    lams = np.linspace(0.0, 1.0, n_lambda)
    cap = _pt_upper(p, c, thetas)
    best = _best_on_grid(p, c, thetas, lams, np.zeros_like(cap), cap, n_pt)
    if best is None:
        return Allocation(0.0, 0.0, 0.0, float(theta))
    best, _ = _refine(p, c, best, grid, (0.0, 1.0, float(cap[0])), (theta, theta), theta_fixed=True)
    tau, _, lam, pt = best
    return Allocation(tau, lam, pt, float(theta))


# --- interior point --------------------------------------------------------------


def _solve3(a, b):
    """Solve a 3x3 system by Gaussian elimination with partial pivoting."""
    m = [list(a[0]) + [b[0]], list(a[1]) + [b[1]], list(a[2]) + [b[2]]]
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0.0:
            raise ConvergenceError("singular Newton system")
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, 3):
            f = m[r][col] / m[col][col]
            for k in range(col, 4):
                m[r][k] -= f * m[col][k]
    x = [0.0, 0.0, 0.0]
    for r in (2, 1, 0):
        x[r] = (m[r][3] - sum(m[r][k] * x[k] for k in range(r + 1, 3))) / m[r][r]
    return x


class _FixedThetaBarrier:
    """Log barrier of the fixed-theta subproblem in x = (tau, lambda, pt)."""

    def __init__(self, p: SystemParams, c: ChannelState, theta: float):
        ln2 = math.log(2.0)
        self.ka = theta / (p.T0 * ln2)
        self.kb = (1.0 - theta) / (p.T0 * ln2)
        self.s1 = 1.0 + p.Q * c.g1 / p.sigma2
        self.b = c.g2 / (2.0 * p.sigma2)
        self.harvest = p.eta * p.Q * c.g1 * theta
        self.static = p.Pd * theta + p.Pe * (1.0 - theta) - self.harvest
        self.eps = p.eps
        self.one_minus = 1.0 - theta

    def constraints(self, x):
        tau, lam, pt = x
        if lam <= 0 or pt <= 0 or tau <= 0:
            return None
        h = math.log1p(self.s1 * lam) - math.log1p(lam)
        g = (
            tau - self.ka * h,
            tau - self.kb * math.log1p(self.b * pt),
            self.static + self.eps * tau + self.one_minus * pt + self.harvest * lam,
        )
        if max(g) >= 0:
            return None
        return g

    def value(self, x, t):
        g = self.constraints(x)
        if g is None:
            return math.inf
        return -t * x[0] - sum(math.log(-gi) for gi in g) - math.log(x[0]) - math.log(x[1]) - math.log(x[2])

    def grad_hess(self, x, t):
        tau, lam, pt = x
        g1, g2, g3 = self.constraints(x)
        u = 1.0 + self.s1 * lam
        hp = self.s1 / u - 1.0 / (1.0 + lam)
        hpp = -(self.s1**2) / u**2 + 1.0 / (1.0 + lam) ** 2
        v = 1.0 + self.b * pt
        d1 = (1.0, -self.ka * hp, 0.0)
        d2 = (1.0, 0.0, -self.kb * self.b / v)
        d3 = (self.eps, self.harvest, self.one_minus)
        grad = [-t, 0.0, 0.0]
        hess = [[0.0] * 3 for _ in range(3)]
        for gi, di in ((g1, d1), (g2, d2), (g3, d3)):
            w = -1.0 / gi
            for r in range(3):
                grad[r] += w * di[r]
                for q in range(3):
                    hess[r][q] += w * w * di[r] * di[q]
        # curvature of the two concave rate terms
        hess[1][1] += (-self.ka * hpp) / (-g1)
        hess[2][2] += (self.kb * self.b**2 / v**2) / (-g2)
        for r, xr in enumerate(x):
            grad[r] -= 1.0 / xr
            hess[r][r] += 1.0 / xr**2
        return grad, hess


def _strict_start(p, c, theta):
    budget = p.eta * p.Q * c.g1 * theta - p.Pd * theta - p.Pe * (1.0 - theta)
    lam = budget / (4.0 * p.eta * p.Q * c.g1 * theta)
    pt = budget / (4.0 * (1.0 - theta))
    tau = 0.5 * min(float(rate_sr(p, c, lam, theta)), float(rate_rd(p, c, pt, theta)))
    if p.eps > 0:
        tau = min(tau, budget / (4.0 * p.eps))
    return [tau, lam, pt]


def interior_point_fixed_theta(
    p: SystemParams,
    c: ChannelState,
    theta: float,
    tol: float = 1e-6,
    mu0: float = 1.0,
    mu_factor: float = 10.0,
    newton_tol: float = 1e-10,
    max_newton: int = 200,
) -> IpReport:
    """Maximise tau at fixed theta with a log-barrier method and damped Newton steps.

    The barrier weight starts at ``mu0`` and is divided by ``mu_factor`` after
    each centering until the duality-gap bound ``m * mu`` drops below
    ``tol * tau`` (relative gap). Every Newton step counts as one iteration.
    """
    gate = check_feasibility(p, c)
    if not gate:
        raise DomainError(f"infeasible instance: {gate.reason}")
    if not gate.theta0 < theta < 1:
        raise DomainError(f"theta={theta} outside ({gate.theta0}, 1)")
    barrier = _FixedThetaBarrier(p, c, theta)
    x = _strict_start(p, c, theta)
    if barrier.constraints(x) is None:
        raise ConvergenceError("could not build a strictly feasible start")
    n_constraints = 6
    mu = mu0
    iterations = 0
    path = []
    while True:
        t = 1.0 / mu
        for _ in range(max_newton):
            grad, hess = barrier.grad_hess(x, t)
            step = _solve3(hess, [-gi for gi in grad])
            iterations += 1
            slope = sum(gi * si for gi, si in zip(grad, step))
            if -slope / 2.0 <= newton_tol:
                break
            # Inside the quadratic region (decrement^2 < 1/4) only strict
            # feasibility is enforced: Armijo tests there compare values that
            # differ below the rounding level of t*tau.
            pure = -slope < 0.25
            f0 = barrier.value(x, t)
            alpha = 1.0
            for _ in range(80):
                trial = [xi + alpha * si for xi, si in zip(x, step)]
                f1 = barrier.value(trial, t)
                if f1 < math.inf and (pure or f1 <= f0 + 0.25 * alpha * slope):
                    break
                alpha *= 0.5
            else:
                raise ConvergenceError(f"line search failed at mu={mu:g}")
            stalled = all(abs(a - b) <= 4e-16 * abs(b) for a, b in zip(trial, x))
            x = trial
            if stalled:
                break
        else:
            raise ConvergenceError(f"centering did not converge at mu={mu:g}")
        path.append((mu, x[0]))
        if n_constraints * mu <= tol * x[0]:
            break
        mu /= mu_factor
    return IpReport(tau=x[0], lam=x[1], pt=x[2], iterations=iterations, barrier_path=path)
