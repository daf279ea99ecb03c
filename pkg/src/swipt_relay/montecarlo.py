"""Rician fading draws, relay policies and Monte Carlo throughput campaigns."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from . import bounds
from .model import ChannelState, SystemParams
from .solver import (
    ZERO_ALLOCATION,
    Allocation,
    GridDiagnostics,
    SolverConfig,
    SolveReport,
    Status,
    _bisect,
    check_feasibility,
    solve,
    solve_grid_batch,
)

RNG_ALGORITHM = "PCG64 per trial, SeedSequence(entropy=seed, spawn_key=(trial,))"
CHUNK = 500  # trials per batch; fixed so results do not depend on worker count


class ConfigError(ValueError):
    pass


class Policy(str, Enum):
    DYNAMIC = "Dynamic"
    CONVENTIONAL_HALF = "ConventionalHalf"
    NO_CPC = "NoCpc"


@dataclass(frozen=True)
class FadingSpec:
    K: float = 1.0
    omega1: float = 0.4
    omega2: float = 0.4

    def __post_init__(self):
        if not self.K >= 0:
            raise ConfigError("Rice factor K must be nonnegative")
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ConfigError("mean gains must be positive")


@dataclass(frozen=True)
class McConfig:
    trials: int = 10_000
    seed: int = 0
    policy: Policy = Policy.DYNAMIC
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


# --- fading -------------------------------------------------------------------


def sample_rician_gain(K: float, omega: float, rng: np.random.Generator, size=None):
    """Power gain |h|^2 of a Rician channel with Rice factor K and E|h|^2 = omega."""
    if K < 0 or omega <= 0:
        raise ConfigError("need K >= 0 and omega > 0")
    z = rng.standard_normal(size=(2,) if size is None else (2, *np.atleast_1d(size)))
    return _rician_from_normals(K, omega, z[0], z[1])


def _rician_from_normals(K, omega, re, im):
    los = math.sqrt(omega * K / (K + 1.0))
    scatter = math.sqrt(omega / (2.0 * (K + 1.0)))
    return (los + scatter * re) ** 2 + (scatter * im) ** 2


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(trial,))))


@lru_cache(maxsize=64)
def _trial_normals(seed: int, start: int, stop: int) -> np.ndarray:
    # four standard normals per trial: (re1, im1, re2, im2)
    z = np.empty((stop - start, 4))
    for k, trial in enumerate(range(start, stop)):
        z[k] = trial_rng(seed, trial).standard_normal(4)
    z.setflags(write=False)
    return z


def draw_channels(fading: FadingSpec, seed: int, start: int, stop: int):
    """Gains (g1, g2) for trials ``start..stop-1``; trial i depends only on (seed, i)."""
    z = _trial_normals(seed, start, stop)
    g1 = _rician_from_normals(fading.K, fading.omega1, z[:, 0], z[:, 1])
    g2 = _rician_from_normals(fading.K, fading.omega2, z[:, 2], z[:, 3])
    return g1, g2


# --- policies -------------------------------------------------------------------


def _half_batch(p, g1, g2, cfg):
    feasible = (p.eta * p.Q * g1 > p.Pd) & (g2 > 0)
    th0 = np.full(g1.shape, np.nan)
    th0[feasible] = p.Pe / (p.eta * p.Q * g1[feasible] + p.Pe - p.Pd)
    feasible &= np.where(feasible, th0 < 0.5, False)
    tau = np.zeros(g1.shape)
    if feasible.any():
        _, _, t, _ = _bisect(p, g1[feasible], g2[feasible], 0.5, cfg.tol_pt_rel)
        tau[feasible] = t
    return tau, feasible


def policy_throughputs(p: SystemParams, g1, g2, policy: Policy, cfg: SolverConfig):
    """Per-draw optimal rate and feasibility flag for one policy."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    policy = Policy(policy)
    if policy is Policy.CONVENTIONAL_HALF:
        return _half_batch(p, g1, g2, cfg)
    if policy is Policy.NO_CPC:
        p = p.without_cpc()
    out = solve_grid_batch(p, g1, g2, cfg)
    return out["tau"], out["feasible"]


def solve_policy(p: SystemParams, c: ChannelState, policy: Policy, solver_cfg: SolverConfig | None = None) -> SolveReport:
    cfg = solver_cfg or SolverConfig()
    policy = Policy(policy)
    if policy is Policy.DYNAMIC:
        return solve(p, c, cfg)
    if policy is Policy.NO_CPC:
        return solve(p.without_cpc(), c, cfg)
    gate = check_feasibility(p, c)
    if not gate or not gate.theta0 < 0.5:
        return SolveReport(Status.INFEASIBLE, ZERO_ALLOCATION, gate.theta0, float(bounds.lower_bound_tau(p, c)) if c.g2 > 0 else 0.0)
    pt, lam, tau, iters = _bisect(p, c.g1, c.g2, np.array([0.5]), cfg.tol_pt_rel)
    best = Allocation(float(tau[0]), float(lam[0]), float(pt[0]), 0.5)
    diag = GridDiagnostics(np.array([0.5]), pt, tau, lam, iters)
    return SolveReport(
        Status.FEASIBLE, best, float(gate.theta0), float(bounds.lower_bound_tau(p, c)), diag, int(iters.sum())
    )


# --- campaigns --------------------------------------------------------------------


@dataclass(frozen=True)
class McResult:
    mean: float
    std_error: float
    infeasible_fraction: float
    trials: int


def _chunk_job(args):
    p, fading, seed, start, stop, policy, cfg = args
    g1, g2 = draw_channels(fading, seed, start, stop)
    return policy_throughputs(p, g1, g2, policy, cfg)


def campaign_throughputs(p: SystemParams, fading: FadingSpec, mc: McConfig):
    """Per-trial rates and feasibility flags in trial order."""
    jobs = [
        (p, fading, mc.seed, start, min(start + CHUNK, mc.trials), mc.policy, mc.solver_cfg)
        for start in range(0, mc.trials, CHUNK)
    ]
    if mc.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=mc.workers) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(job) for job in jobs]
    tau = np.concatenate([t for t, _ in parts])
    feasible = np.concatenate([f for _, f in parts])
    return tau, feasible


def average_throughput(p: SystemParams, fading: FadingSpec, mc: McConfig) -> McResult:
    """Mean optimal rate over Rician draws; infeasible draws count as zero."""
    if mc.trials < 1:
        raise ConfigError("trials must be positive")
    tau, feasible = campaign_throughputs(p, fading, mc)
    n = len(tau)
    std_error = float(tau.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McResult(float(tau.mean()), std_error, float(1.0 - feasible.mean()), n)


# --- sweeps -----------------------------------------------------------------------

PARAM_AXES = ("Q", "sigma2", "T0", "eta", "Pd", "Pe", "eps_d", "eps_e", "eps_sum", "pd_pe")
CHANNEL_AXES = ("g1", "g2")
FADING_AXES = ("K", "omega1", "omega2")


def apply_axis(p: SystemParams, source, axis: str, value: float):
    """Return ``(params, source)`` with ``axis`` set to ``value``."""
    if axis == "eps_sum":
        return p.replace(eps_d=value / 2.0, eps_e=value / 2.0), source
    if axis == "pd_pe":
        return p.replace(Pd=value, Pe=value), source
    if axis in PARAM_AXES:
        return p.replace(**{axis: value}), source
    if axis in CHANNEL_AXES:
        if not isinstance(source, ChannelState):
            raise ConfigError(f"axis {axis} needs a fixed channel")
        return p, replace(source, **{axis: value})
    if axis in FADING_AXES:
        if not isinstance(source, FadingSpec):
            raise ConfigError(f"axis {axis} needs a fading description")
        return p, replace(source, **{axis: value})
    raise ConfigError(f"unknown sweep axis {axis!r}")


def solve_row(p: SystemParams, c: ChannelState, policy: Policy, cfg: SolverConfig) -> dict:
    r = solve_policy(p, c, policy, cfg)
    a = r.best
    return {
        "g1": c.g1,
        "g2": c.g2,
        "policy": Policy(policy).value,
        "status": r.status.value,
        "tau_bits_per_s": a.tau,
        "lambda": a.lam,
        "pt_mw": a.pt,
        "theta": a.theta,
        "theta0": r.theta0,
        "lower_bound_bits_per_s": r.lower_bound_tau,
        "bisection_iters_total": r.total_iterations,
        "flops": r.total_flops,
    }


def mc_row(p: SystemParams, fading: FadingSpec, mc: McConfig) -> dict:
    res = average_throughput(p, fading, mc)
    return {
        "policy": Policy(mc.policy).value,
        "K": fading.K,
        "omega1": fading.omega1,
        "omega2": fading.omega2,
        "trials": res.trials,
        "mean_tau_bits_per_s": res.mean,
        "std_error": res.std_error,
        "infeasible_fraction": res.infeasible_fraction,
    }


def sweep(p_template: SystemParams, source, axis: str, values, settings, policies=(Policy.DYNAMIC,)) -> list[dict]:
    """One row per axis value per policy.

    ``source`` is a :class:`ChannelState` (deterministic rows; ``settings`` is a
    :class:`SolverConfig`) or a :class:`FadingSpec` (Monte Carlo rows;
    ``settings`` is an :class:`McConfig` whose policy field is overridden).
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    apply_axis(p_template, source, axis, values[0])  # reject unknown axes up front
    rows = []
    for v in values:
        p, src = apply_axis(p_template, source, axis, v)
        for policy in policies:
            if isinstance(src, ChannelState):
                row = solve_row(p, src, policy, settings)
            else:
                row = mc_row(p, src, replace(settings, policy=Policy(policy)))
            rows.append({f"axis_{axis}": v, **row})
    return rows
