import math

import numpy as np
import pytest
from conftest import feasible_channels
from hypothesis import given
from hypothesis import strategies as st

from swipt_relay import (
    Allocation,
    ChannelState,
    DomainError,
    SolverConfig,
    Status,
    SystemParams,
    check_feasibility,
    energy_balance_residual,
    lower_bound_tau,
    rate_rd,
    rate_sr,
    solve,
    solve_fixed_theta,
    verify_kkt,
)
from swipt_relay.model import energy_slack, f1, f2
from swipt_relay.solver import (
    FLOPS_PER_BISECTION_ITER,
    constraint_values,
    slater_point,
    solve_grid_batch,
    theta_grid,
)

# Golden values from the independent grid oracles (swipt_relay.oracle, default
# resolution). Neither path uses the closed-form rate matching.
ORACLE_2D_TAU_THETA_HALF = 278.44689631498653
ORACLE_3D_TAU = 421.15399747751405


class TestFeasibility:
    def test_gate_low_harvest(self, params):
        gate = check_feasibility(params, ChannelState(0.02, 0.1))
        assert not gate and "Pd" in gate.reason

    def test_gate_zero_relay_gain(self, params):
        assert not check_feasibility(params, ChannelState(5.0, 0.0))

    def test_theta0(self, params):
        gate = check_feasibility(params, ChannelState(0.1, 0.1))
        assert gate and gate.theta0 == pytest.approx(0.25, rel=1e-15)

    def test_exact_boundary_is_infeasible(self, params):
        g1 = params.Pd / (params.eta * params.Q)
        assert params.eta * params.Q * g1 == params.Pd
        assert not check_feasibility(params, ChannelState(g1, 0.1))
        assert check_feasibility(params, ChannelState(g1 * (1 + 1e-12), 0.1))


class TestFixedTheta:
    def test_against_2d_oracle(self, params, pinned):
        alloc, iters = solve_fixed_theta(params, pinned, 0.5)
        assert alloc.tau == pytest.approx(ORACLE_2D_TAU_THETA_HALF, rel=1e-3)
        assert iters == 40

    def test_constraints_tight(self, params, pinned):
        alloc, _ = solve_fixed_theta(params, pinned, 0.5)
        tau, lam, pt, theta = alloc.as_tuple()
        assert rate_sr(params, pinned, lam, theta) == pytest.approx(tau, rel=1e-8)
        assert rate_rd(params, pinned, pt, theta) == pytest.approx(tau, rel=1e-8)
        assert abs(energy_slack(params, pinned, tau, lam, pt, theta)) <= 1e-8 * params.eta * params.Q * pinned.g1

    @pytest.mark.parametrize("theta", ["theta0", 1.0, 1.5])
    def test_domain(self, params, pinned, theta):
        if theta == "theta0":
            theta = check_feasibility(params, pinned).theta0
        with pytest.raises(DomainError):
            solve_fixed_theta(params, pinned, theta)

    def test_infeasible_instance(self, params):
        with pytest.raises(DomainError):
            solve_fixed_theta(params, ChannelState(0.01, 0.1), 0.5)

    @given(c=feasible_channels(), u=st.floats(0.01, 0.99))
    def test_tightness_random(self, c, u):
        p = SystemParams()
        th0 = check_feasibility(p, c).theta0
        theta = th0 + u * (1 - th0)
        alloc, iters = solve_fixed_theta(p, c, theta)
        tau, lam, pt, _ = alloc.as_tuple()
        assert iters <= 40
        assert 0 <= lam <= 1 and pt >= 0
        assert rate_sr(p, c, lam, theta) == pytest.approx(tau, rel=1e-8, abs=1e-9)
        assert rate_rd(p, c, pt, theta) == pytest.approx(tau, rel=1e-8, abs=1e-9)
        assert abs(energy_balance_residual(p, c, theta, pt)) <= 1e-8 * p.eta * p.Q * c.g1

    def test_iteration_bound_follows_tolerance(self, params, pinned):
        for tol in (1e-3, 1e-6, 0.3):
            _, iters = solve_fixed_theta(params, pinned, 0.5, SolverConfig(tol_pt_rel=tol))
            assert iters <= math.ceil(math.log2(1 / tol))


class TestGrid:
    def test_theta_grid(self):
        th = theta_grid(0.2, 3)
        assert th == pytest.approx([0.4, 0.6, 0.8])

    def test_against_3d_oracle(self, params, pinned):
        r = solve(params, pinned)
        assert r.status is Status.FEASIBLE
        assert r.best.tau == pytest.approx(ORACLE_3D_TAU, rel=5e-3)
        assert r.theta0 < r.best.theta < 1
        assert r.best.tau >= r.lower_bound_tau

    def test_infeasible_sentinel(self, params):
        r = solve(params, ChannelState(0.01, 0.1))
        assert r.status is Status.INFEASIBLE
        assert r.best.as_tuple() == (0.0, 0.0, 0.0, 0.0)
        assert r.total_flops == 0

    def test_single_level_is_midpoint(self, params, pinned):
        r = solve(params, pinned, SolverConfig(n=1))
        th0 = r.theta0
        alloc, _ = solve_fixed_theta(params, pinned, th0 + (1 - th0) / 2)
        assert r.best == alloc

    def test_flop_accounting(self, params, pinned):
        r = solve(params, pinned)
        assert r.total_iterations == int(r.diagnostics.iterations.sum())
        assert r.total_flops == FLOPS_PER_BISECTION_ITER * r.total_iterations
        assert r.diagnostics.iterations.max() <= SolverConfig().max_bisection_iters

    def test_first_maximum_kept(self, params, pinned):
        r = solve(params, pinned)
        i = int(np.flatnonzero(r.diagnostics.tau == r.diagnostics.tau.max())[0])
        assert r.best.theta == r.diagnostics.theta[i]

    def test_refinement(self, params, pinned):
        coarse = solve(params, pinned, SolverConfig(n=500)).best.tau
        fine = solve(params, pinned, SolverConfig(n=2000)).best.tau
        assert fine >= coarse - 1e-6 * coarse

    def test_deterministic(self, params, pinned):
        a, b = solve(params, pinned), solve(params, pinned)
        assert a.best == b.best
        assert np.array_equal(a.diagnostics.tau, b.diagnostics.tau)

    def test_batch_matches_single(self, params):
        rng = np.random.default_rng(3)
        g = np.exp(rng.uniform(np.log(0.005), np.log(1.0), size=(40, 2)))
        g[0, 1] = 0.0
        out = solve_grid_batch(params, g[:, 0], g[:, 1], SolverConfig(n=100))
        for k, (g1, g2) in enumerate(g):
            r = solve(params, ChannelState(g1, g2), SolverConfig(n=100))
            assert out["feasible"][k] == r.feasible
            assert out["tau"][k] == r.best.tau
            assert out["theta"][k] == r.best.theta

    @given(c=feasible_channels())
    def test_lower_bound_sound(self, c):
        p = SystemParams()
        assert solve(p, c, SolverConfig(n=100)).best.tau >= lower_bound_tau(p, c)


LADDER_STEPS = st.lists(st.floats(1.05, 2.0), min_size=3, max_size=3)


def _ladder(start, factors):
    out = [start]
    for f in factors:
        out.append(out[-1] * f)
    return out


def _taus(pairs):
    cfg = SolverConfig(n=200)
    return [solve(p, c, cfg).best.tau for p, c in pairs]


def _nondecreasing(seq, rel=1e-9):
    return all(b >= a - rel * max(abs(a), 1.0) for a, b in zip(seq, seq[1:]))


class TestMonotonicity:
    @given(c=feasible_channels(), steps=LADDER_STEPS)
    def test_in_g1(self, c, steps):
        p = SystemParams()
        assert _nondecreasing(_taus([(p, ChannelState(g, c.g2)) for g in _ladder(c.g1, steps)]))

    @given(c=feasible_channels(), steps=LADDER_STEPS)
    def test_in_g2(self, c, steps):
        p = SystemParams()
        assert _nondecreasing(_taus([(p, ChannelState(c.g1, g)) for g in _ladder(c.g2, steps)]))

    @given(c=feasible_channels(), steps=LADDER_STEPS)
    def test_in_q(self, c, steps):
        assert _nondecreasing(_taus([(SystemParams(Q=q), c) for q in _ladder(500.0, steps)]))

    @given(c=feasible_channels(), eta=st.lists(st.floats(0.3, 1.0), min_size=4, max_size=4))
    def test_in_eta(self, c, eta):
        assert _nondecreasing(_taus([(SystemParams(eta=e), c) for e in sorted(eta)]))

    @given(c=feasible_channels(), steps=LADDER_STEPS)
    def test_in_static_powers(self, c, steps):
        for field in ("Pd", "Pe"):
            ladder = [SystemParams(**{field: v}) for v in _ladder(2.0, steps)]
            assert _nondecreasing(_taus([(p, c) for p in reversed(ladder)]))

    @given(c=feasible_channels(), steps=LADDER_STEPS)
    def test_in_rate_energy(self, c, steps):
        ladder = [SystemParams(eps_d=v / 2, eps_e=v / 2) for v in _ladder(0.01, steps)]
        assert _nondecreasing(_taus([(p, c) for p in reversed(ladder)]))


class TestSlater:
    @given(c=feasible_channels(), u=st.floats(0.02, 0.98), frac=st.floats(1e-6, 1 - 1e-6))
    def test_strictly_feasible_point(self, c, u, frac):
        p = SystemParams()
        th0 = check_feasibility(p, c).theta0
        theta = th0 + u * (1 - th0)
        budget = p.eta * p.Q * c.g1 * theta - p.Pd * theta - p.Pe * (1 - theta)
        a = slater_point(p, c, theta, frac * budget)
        assert a.tau > 0 and 0 < a.lam < 1 and a.pt > 0
        e = energy_slack(p, c, a.tau, a.lam, a.pt, a.theta)
        assert abs(e) <= 1e-9 * p.eta * p.Q * c.g1

    def test_delta_domain(self, params, pinned):
        with pytest.raises(DomainError):
            slater_point(params, pinned, 0.5, 0.0)


class TestKkt:
    def test_solution_passes(self, params, pinned):
        alloc, _ = solve_fixed_theta(params, pinned, 0.5)
        report = verify_kkt(params, pinned, alloc)
        assert report.passed
        assert min(report.duals[0], report.duals[1], report.duals[5]) > 0
        assert max(abs(r) for r in report.stationarity_residuals) < 1e-12

    @given(c=feasible_channels(), u=st.floats(0.05, 0.95))
    def test_random_solutions_pass(self, c, u):
        p = SystemParams()
        th0 = check_feasibility(p, c).theta0
        alloc, _ = solve_fixed_theta(p, c, th0 + u * (1 - th0))
        if 0 < alloc.lam < 1 and alloc.pt > 0:
            assert verify_kkt(p, c, alloc).passed

    def test_pt_perturbation_fails(self, params, pinned):
        alloc, _ = solve_fixed_theta(params, pinned, 0.5)
        pt = alloc.pt * 1.1
        moved = Allocation(float(f2(params, pinned, 0.5, pt)), float(f1(params, pinned, 0.5, pt)), pt, 0.5)
        report = verify_kkt(params, pinned, moved)
        assert not report.passed
        assert report.primal_residuals[2] > 0

    def test_tau_halved_fails(self, params, pinned):
        alloc, _ = solve_fixed_theta(params, pinned, 0.5)
        halved = Allocation(alloc.tau * 0.5, alloc.lam, alloc.pt, alloc.theta)
        report = verify_kkt(params, pinned, halved)
        assert not report.passed
        c1, c2, _ = constraint_values(params, pinned, halved)
        assert c1 < 0 and c2 < 0

    def test_boundary_rejected(self, params, pinned):
        with pytest.raises(DomainError):
            verify_kkt(params, pinned, Allocation(0.0, 0.0, 0.0, 0.5))
