"""Link model of a power-splitting decode-and-forward relay with circuit power.

Units used throughout: powers in mW, time in seconds, rates in bits/s and the
per-rate energy coefficients in mW per bit/s.

Every function here is written with numpy ufuncs so the same code evaluates a
single channel or a whole batch (arrays of ``g1``/``g2``/``theta``/``pt``
broadcast together). The scalar entry points validate their domain; the
underscore-prefixed kernels do not and are meant for the batched solvers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = np.log(2.0)


class DomainError(ValueError):
    """Argument outside the region where an expression is defined."""


@dataclass(frozen=True)
class SystemParams:
    Q: float = 500.0
    sigma2: float = 10.0
    T0: float = 500e-6
    eta: float = 0.8
    Pd: float = 10.0
    Pe: float = 10.0
    eps_d: float = 0.05
    eps_e: float = 0.05

    def __post_init__(self):
        if not (self.Q > 0 and self.sigma2 > 0 and self.T0 > 0):
            raise DomainError("Q, sigma2 and T0 must be positive")
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        for name in ("Pd", "Pe", "eps_d", "eps_e"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be nonnegative")

    @property
    def eps(self) -> float:
        """Combined decoder + encoder energy per unit rate."""
        return self.eps_d + self.eps_e

    def replace(self, **changes) -> "SystemParams":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return SystemParams(**fields)

    def without_cpc(self) -> "SystemParams":
        return self.replace(Pd=0.0, Pe=0.0, eps_d=0.0, eps_e=0.0)


@dataclass(frozen=True)
class ChannelState:
    """Power gains of the source-relay (g1) and relay-destination (g2) links."""

    g1: float
    g2: float

    def __post_init__(self):
        if not (np.all(np.asarray(self.g1) >= 0) and np.all(np.asarray(self.g2) >= 0)):
            raise DomainError("channel gains must be nonnegative")


@dataclass(frozen=True)
class Allocation:
    tau: float
    lam: float
    pt: float
    theta: float

    def as_tuple(self):
        return (self.tau, self.lam, self.pt, self.theta)


def _check_theta(theta):
    if not np.all((np.asarray(theta) > 0) & (np.asarray(theta) < 1)):
        raise DomainError(f"theta must lie in (0, 1), got {theta}")


def _pow_minus_one(base_minus_one, exponent):
    """(1 + x)**a - 1 via expm1(a*log1p(x)); inf on overflow."""
    with np.errstate(over="ignore"):
        return np.expm1(exponent * np.log1p(base_minus_one))


# --- signal-to-noise ratios and rates --------------------------------------


def snr_sr(p: SystemParams, c: ChannelState, lam):
    return p.Q * c.g1 * lam / ((1.0 + lam) * p.sigma2)


def snr_rd(p: SystemParams, c: ChannelState, pt):
    return pt * c.g2 / (2.0 * p.sigma2)


def rate_sr(p: SystemParams, c: ChannelState, lam, theta):
    """Source-relay rate for power-splitting ratio ``lam`` and time ratio ``theta``."""
    return (theta / p.T0) * np.log1p(snr_sr(p, c, lam)) / LN2


def rate_rd(p: SystemParams, c: ChannelState, pt, theta):
    return ((1.0 - theta) / p.T0) * np.log1p(snr_rd(p, c, pt)) / LN2


def circuit_powers(p: SystemParams, tau, theta, pt):
    """Decoder and encoder power draw ``(P_dec, P_enc)`` at source rate ``tau``."""
    _check_theta(theta)
    p_dec = p.Pd + p.eps_d * tau / theta
    p_enc = pt + p.Pe + p.eps_e * tau / (1.0 - theta)
    return p_dec, p_enc


def harvested_power(p: SystemParams, c: ChannelState, lam, theta):
    """Harvested energy per block, normalised by block duration."""
    return p.eta * p.Q * c.g1 * (1.0 - lam) * theta


def consumed_power(p: SystemParams, tau, theta, pt):
    """Relay consumption per block, normalised by block duration."""
    return p.Pd * theta + p.Pe * (1.0 - theta) + p.eps * tau + pt * (1.0 - theta)


def energy_slack(p: SystemParams, c: ChannelState, tau, lam, pt, theta):
    """Consumption minus harvest; feasible allocations have a nonpositive value."""
    return consumed_power(p, tau, theta, pt) - harvested_power(p, c, lam, theta)


# --- rate matching closed forms ---------------------------------------------


def _f1(p, g1, g2, theta, pt):
    # A - 1 with A = (1 + pt*g2/(2 sigma2))**((1-theta)/theta); rearranged so
    # that pt = 0 gives 0 instead of 0/0.
    am1 = _pow_minus_one(pt * g2 / (2.0 * p.sigma2), (1.0 - theta) / theta)
    num = p.sigma2 * am1
    return num / (p.Q * g1 - num)


def _f2(p, g2, theta, pt):
    return ((1.0 - theta) / p.T0) * np.log1p(pt * g2 / (2.0 * p.sigma2)) / LN2


def _pt_ceiling(p, g1, g2, theta):
    with np.errstate(over="ignore"):
        return (2.0 * p.sigma2 / g2) * _pow_minus_one(
            p.Q * g1 / (2.0 * p.sigma2), theta / (1.0 - theta)
        )


def _residual(p, g1, g2, theta, pt):
    harvest = p.eta * p.Q * g1 * theta * (1.0 - _f1(p, g1, g2, theta, pt))
    return (
        harvest
        - theta * p.Pd
        - (1.0 - theta) * p.Pe
        - p.eps * _f2(p, g2, theta, pt)
        - (1.0 - theta) * pt
    )


def pt_ceiling(p: SystemParams, c: ChannelState, theta):
    """Relay power at which rate matching needs the whole received signal (lambda = 1).

    Returns ``inf`` when the value exceeds the double range (theta close to 1).
    """
    _check_theta(theta)
    if np.any(np.asarray(c.g2) <= 0):
        raise DomainError("pt_ceiling needs g2 > 0")
    return _pt_ceiling(p, c.g1, c.g2, theta)


def f1(p: SystemParams, c: ChannelState, theta, pt):
    """Power-splitting ratio that equalises the two hop rates at relay power ``pt``."""
    _check_theta(theta)
    if np.any(np.asarray(c.g1) <= 0) or np.any(np.asarray(c.g2) <= 0):
        raise DomainError("f1 needs g1 > 0 and g2 > 0")
    if np.any(np.asarray(pt) < 0):
        raise DomainError("pt must be nonnegative")
    lam = _f1(p, c.g1, c.g2, theta, pt)
    if np.any(~((lam >= 0) & (lam <= 1 + 1e-12))):
        raise DomainError("pt exceeds the ceiling; lambda would leave [0, 1]")
    return np.minimum(lam, 1.0)


def f2(p: SystemParams, c: ChannelState, theta, pt):
    """Relay-destination rate, i.e. the matched source rate at relay power ``pt``."""
    _check_theta(theta)
    return _f2(p, c.g2, theta, pt)


def energy_balance_residual(p: SystemParams, c: ChannelState, theta, pt):
    """Harvest minus consumption after eliminating lambda and tau by rate matching.

    Strictly decreasing in ``pt`` on ``[0, pt_ceiling]``; its root is the
    fixed-theta optimal relay power.
    """
    lam = f1(p, c, theta, pt)
    return (
        p.eta * p.Q * c.g1 * theta * (1.0 - lam)
        - theta * p.Pd
        - (1.0 - theta) * p.Pe
        - p.eps * f2(p, c, theta, pt)
        - (1.0 - theta) * pt
    )


def theta0(p: SystemParams, c: ChannelState):
    """Smallest time ratio at which the harvest can cover the static circuit power."""
    harvest = p.eta * p.Q * c.g1
    if np.any(np.asarray(harvest) <= p.Pd):
        raise DomainError("eta*Q*g1 <= Pd: no time ratio is feasible")
    return p.Pe / (harvest + p.Pe - p.Pd)
