"""Feasibility gate, fixed-theta bisection, theta grid search and a KKT checker."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import bounds
from .model import (
    LN2,
    Allocation,
    ChannelState,
    DomainError,
    SystemParams,
    _f1,
    _f2,
    _pt_ceiling,
    _residual,
    energy_slack,
    rate_rd,
    rate_sr,
)

FLOPS_PER_BISECTION_ITER = 3
ZERO_ALLOCATION = Allocation(0.0, 0.0, 0.0, 0.0)


class Status(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SolverConfig:
    n: int = 500
    tol_pt_rel: float = 1e-12
    tol_constraint: float = 1e-8

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not 0 < self.tol_pt_rel < 1:
            raise ValueError("tol_pt_rel must lie in (0, 1)")
        if not self.tol_constraint > 0:
            raise ValueError("tol_constraint must be positive")

    @property
    def max_bisection_iters(self) -> int:
        return math.ceil(math.log2(1.0 / self.tol_pt_rel))


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    theta0: float = float("nan")
    reason: str = ""

    def __bool__(self):
        return self.feasible


@dataclass(frozen=True)
class GridDiagnostics:
    """Per grid point results of a theta search, index-aligned arrays."""

    theta: np.ndarray
    pt: np.ndarray
    tau: np.ndarray
    lam: np.ndarray
    iterations: np.ndarray


@dataclass(frozen=True)
class SolveReport:
    status: Status
    best: Allocation
    theta0: float
    lower_bound_tau: float
    diagnostics: GridDiagnostics | None = None
    total_iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    @property
    def total_flops(self) -> int:
        return FLOPS_PER_BISECTION_ITER * self.total_iterations


@dataclass(frozen=True)
class KktReport:
    duals: tuple
    stationarity_residuals: tuple
    complementary_slackness_residuals: tuple
    primal_residuals: tuple
    passed: bool
    tol: float = field(default=1e-6, repr=False)


def check_feasibility(p: SystemParams, c: ChannelState) -> Feasibility:
    harvest = p.eta * p.Q * c.g1
    if harvest <= p.Pd:
        return Feasibility(False, reason=f"eta*Q*g1 = {harvest:g} <= Pd = {p.Pd:g}")
    if c.g2 <= 0:
        return Feasibility(False, reason="g2 = 0, relay cannot forward")
    return Feasibility(True, theta0=p.Pe / (harvest + p.Pe - p.Pd))


def _theta0_unchecked(p, g1):
    return p.Pe / (p.eta * p.Q * g1 + p.Pe - p.Pd)


def theta_grid(theta0, n: int):
    """Interior grid theta0 + i(1 - theta0)/(n + 1), i = 1..n (broadcasts over theta0)."""
    i = np.arange(1, n + 1, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)[..., None]
    return theta0 + i * (1.0 - theta0) / (n + 1)


def _bisect(p, g1, g2, theta, tol_pt_rel):
    """Vectorised root of the energy residual on [0, min(c, budget cap)].

    All inputs broadcast; theta must exceed theta0 elementwise. Returns
    ``(pt, lam, tau, iterations)`` arrays.
    """
    g1, g2, theta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (g1, g2, theta)))
    # The residual is below zero once (1-theta)*pt alone exceeds the static
    # budget, so the root never lies past this cap; it keeps the bracket finite
    # when c overflows for theta near 1.
    budget = (p.eta * p.Q * g1 * theta - theta * p.Pd - (1.0 - theta) * p.Pe) / (1.0 - theta)
    hi = np.minimum(_pt_ceiling(p, g1, g2, theta), budget)
    lo = np.zeros_like(hi)
    degenerate = _residual(p, g1, g2, theta, hi) > 0
    k = math.ceil(math.log2(1.0 / tol_pt_rel))
    for _ in range(k):
        mid = 0.5 * (lo + hi)
        positive = _residual(p, g1, g2, theta, mid) > 0
        lo = np.where(positive, mid, lo)
        hi = np.where(positive, hi, mid)
    pt = 0.5 * (lo + hi)
    iterations = np.full(pt.shape, k, dtype=np.int64)
    if degenerate.any():
        top = np.minimum(_pt_ceiling(p, g1, g2, theta), budget)
        pt = np.where(degenerate, top, pt)
        iterations = np.where(degenerate, 0, iterations)
    lam = np.minimum(_f1(p, g1, g2, theta, pt), 1.0)
    tau = _f2(p, g2, theta, pt)
    return pt, lam, tau, iterations


def solve_fixed_theta(p: SystemParams, c: ChannelState, theta: float, cfg: SolverConfig | None = None):
    """Optimal (tau, lambda, pt) at a fixed time ratio.

    Returns ``(Allocation, iterations)``. Raises :class:`DomainError` unless the
    instance passes the feasibility gate and ``theta0 < theta < 1``.
    """
    cfg = cfg or SolverConfig()
    gate = check_feasibility(p, c)
    if not gate:
        raise DomainError(f"infeasible instance: {gate.reason}")
    if not gate.theta0 < theta < 1:
        raise DomainError(f"theta={theta} outside ({gate.theta0}, 1); root not bracketed")
    pt, lam, tau, iters = _bisect(p, c.g1, c.g2, np.array([theta]), cfg.tol_pt_rel)
    return Allocation(float(tau[0]), float(lam[0]), float(pt[0]), float(theta)), int(iters[0])


def solve_grid_batch(p: SystemParams, g1, g2, cfg: SolverConfig):
    """Grid search for many channels at once.

    ``g1`` and ``g2`` are 1-D arrays of equal length. Infeasible rows come
    back as the zero allocation with ``feasible`` False. Returns a dict of
    1-D arrays: tau, lam, pt, theta, theta0, feasible, iterations.
    """
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    feasible = (p.eta * p.Q * g1 > p.Pd) & (g2 > 0)
    m = g1.shape[0]
    out = {
        "tau": np.zeros(m),
        "lam": np.zeros(m),
        "pt": np.zeros(m),
        "theta": np.zeros(m),
        "theta0": np.full(m, np.nan),
        "feasible": feasible,
        "iterations": np.zeros(m, dtype=np.int64),
    }
    if not feasible.any():
        return out
    fg1, fg2 = g1[feasible], g2[feasible]
    th0 = _theta0_unchecked(p, fg1)
    thetas = theta_grid(th0, cfg.n)
    pt, lam, tau, iters = _bisect(p, fg1[:, None], fg2[:, None], thetas, cfg.tol_pt_rel)
    best = np.argmax(tau, axis=1)
    rows = np.arange(len(best))
    best_tau = tau[rows, best]
    improved = best_tau > 0
    out["theta0"][feasible] = th0
    out["iterations"][feasible] = iters.sum(axis=1)
    for key, arr in (("tau", tau), ("lam", lam), ("pt", pt), ("theta", thetas)):
        out[key][feasible] = np.where(improved, arr[rows, best], 0.0)
    return out


def solve(p: SystemParams, c: ChannelState, cfg: SolverConfig | None = None) -> SolveReport:
    """Near-optimal allocation by bisection at each of ``cfg.n`` interior theta levels."""
    cfg = cfg or SolverConfig()
    gate = check_feasibility(p, c)
    if not gate:
        return SolveReport(Status.INFEASIBLE, ZERO_ALLOCATION, float("nan"), 0.0)
    thetas = theta_grid(gate.theta0, cfg.n)
    pt, lam, tau, iters = _bisect(p, c.g1, c.g2, thetas, cfg.tol_pt_rel)
    diag = GridDiagnostics(thetas, pt, tau, lam, iters)
    best = ZERO_ALLOCATION
    # strict '>' keeps the first (smallest theta) of tied maxima
    i = int(np.argmax(tau))
    if tau[i] > 0:
        best = Allocation(float(tau[i]), float(lam[i]), float(pt[i]), float(thetas[i]))
    return SolveReport(
        Status.FEASIBLE,
        best,
        float(gate.theta0),
        float(bounds.lower_bound_tau(p, c)),
        diag,
        int(iters.sum()),
    )


def slater_point(p: SystemParams, c: ChannelState, theta: float, delta: float) -> Allocation:
    """Point on the energy-constraint boundary parametrised by ``delta``.

    For ``0 < delta < eta*Q*g1*theta - Pd*theta - Pe*(1-theta)`` the energy
    constraint holds with equality and tau, lambda, pt are strictly inside
    their sign constraints. Needs a positive rate-dependent circuit cost.
    """
    budget = p.eta * p.Q * c.g1 * theta - p.Pd * theta - p.Pe * (1.0 - theta)
    if not 0 < delta < budget:
        raise DomainError(f"delta must lie in (0, {budget})")
    if p.eps <= 0:
        raise DomainError("needs eps_d + eps_e > 0")
    rest = budget - delta
    return Allocation(
        tau=delta / p.eps,
        lam=rest / (2.0 * p.eta * p.Q * c.g1 * theta),
        pt=rest / (2.0 * (1.0 - theta)),
        theta=theta,
    )


def constraint_values(p: SystemParams, c: ChannelState, alloc: Allocation):
    """Left-hand sides of the two rate constraints and the energy constraint."""
    tau, lam, pt, theta = alloc.as_tuple()
    return (
        tau - rate_sr(p, c, lam, theta),
        tau - rate_rd(p, c, pt, theta),
        energy_slack(p, c, tau, lam, pt, theta),
    )


def verify_kkt(
    p: SystemParams, c: ChannelState, alloc: Allocation, tol: float = 1e-6, dual_tol: float = 1e-9
) -> KktReport:
    """Check an interior fixed-theta allocation against the KKT conditions.

    With lambda > 0 and pt > 0 the multipliers of the sign constraints are
    zero, and stationarity in (tau, lambda, pt) fixes the three remaining
    multipliers (both rate constraints and the energy constraint) in closed
    form. Complementary slackness terms carry units of bits/s and are
    compared relative to tau; primal violations relative to tau (rates) and
    eta*Q*g1 (energy).
    """
    tau, lam, pt, theta = alloc.as_tuple()
    gate = check_feasibility(p, c)
    if not gate:
        raise DomainError(f"infeasible instance: {gate.reason}")
    if not (0 < lam < 1 and pt > 0 and gate.theta0 < theta < 1):
        raise DomainError("boundary allocation; only the interior KKT branch is handled")
    s = p.Q * c.g1 / p.sigma2
    b = c.g2 / (2.0 * p.sigma2)
    harvest_scale = p.eta * p.Q * c.g1
    # d/dlam and d/dpt of the two rate terms
    d_sr = (theta / (p.T0 * LN2)) * s / ((1.0 + lam) * (1.0 + lam + s * lam))
    d_rd = ((1.0 - theta) / (p.T0 * LN2)) * b / (1.0 + b * pt)
    k1 = harvest_scale * theta / d_sr
    k2 = (1.0 - theta) / d_rd
    a6 = 1.0 / (k1 + k2 + p.eps)
    a1, a2 = a6 * k1, a6 * k2
    a3 = a4 = a5 = 0.0
    stationarity = (
        1.0 - a1 - a2 + a5 - a6 * p.eps,
        a1 * d_sr + a3 - a6 * harvest_scale * theta,
        a2 * d_rd + a4 - a6 * (1.0 - theta),
    )
    c1, c2, e = constraint_values(p, c, alloc)
    slackness = (a1 * c1, a2 * c2, a6 * e, a3 * lam, a4 * pt, a5 * tau)
    primal = (max(c1, 0.0), max(c2, 0.0), max(e, 0.0))
    scale = max(tau, np.finfo(float).tiny)
    passed = (
        all(abs(r) <= tol for r in stationarity)
        and all(abs(r) / scale <= tol for r in slackness)
        and primal[0] / scale <= tol
        and primal[1] / scale <= tol
        and primal[2] / harvest_scale <= tol
        and min(a1, a2, a3, a4, a5, a6) >= -dual_tol
    )
    return KktReport(
        duals=(a1, a2, a3, a4, a5, a6),
        stationarity_residuals=tuple(float(r) for r in stationarity),
        complementary_slackness_residuals=tuple(float(r) for r in slackness),
        primal_residuals=tuple(float(r) for r in primal),
        passed=bool(passed),
        tol=tol,
    )
