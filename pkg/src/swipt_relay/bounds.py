"""Closed-form lower bound on the optimal source rate.

Everything is evaluated at theta = 1/2, where the rate-matching curves
simplify: the relay-destination rate is bounded above by a line through the
origin and the harvested power is bounded below by the chord over
``[0, Q g1/g2]``. Solving the linearised energy balance gives a relay power,
and substituting it into the relay rate gives the bound.

The published line ``g2*pt/(4*T0*sigma2)`` omits the ``1/ln 2`` of the true
tangent of ``log2``, so it undercuts the relay rate for SNR in (0, 1) and the
relay power it yields can violate the energy constraint. Every function
defaults to the published expressions; ``exact_tangent=True`` switches to the
true tangent, for which the theta = 1/2 point is feasible by construction.
"""
from __future__ import annotations

import numpy as np

from .model import LN2, ChannelState, DomainError, SystemParams


def _slope_scale(exact_tangent: bool) -> float:
    return 1.0 / LN2 if exact_tangent else 1.0


def tangent_rate_bound(p: SystemParams, c: ChannelState, pt, exact_tangent: bool = False):
    """Linear majorant of the theta=1/2 relay rate through the origin.

    With ``exact_tangent=True`` this is the true tangent at pt=0 and never lies
    below the rate; the published slope is smaller by ``ln 2``.
    """
    if np.any(np.asarray(pt) < 0):
        raise DomainError("pt must be nonnegative")
    return _slope_scale(exact_tangent) * c.g2 * pt / (4.0 * p.T0 * p.sigma2)


def chord_harvest_bound(p: SystemParams, c: ChannelState, pt):
    """Chord of the theta=1/2 harvest term between pt=0 and pt=Q g1/g2."""
    if np.any(np.asarray(pt) < 0) or np.any(np.asarray(pt) * c.g2 > p.Q * c.g1 * (1 + 1e-12)):
        raise DomainError("pt must lie in [0, Q*g1/g2]")
    return p.eta * (p.Q * c.g1 - pt * c.g2)


def half_theta_pt(p: SystemParams, c: ChannelState, exact_tangent: bool = False):
    """Relay power solving the linearised energy balance at theta = 1/2.

    Negative when eta*Q*g1 < Pd + Pe; not clamped.
    """
    k = _slope_scale(exact_tangent)
    denom = 1.0 + p.eta * c.g2 + k * p.eps * c.g2 / (2.0 * p.T0 * p.sigma2)
    return (p.eta * p.Q * c.g1 - p.Pd - p.Pe) / denom


def lower_bound_tau(p: SystemParams, c: ChannelState, exact_tangent: bool = False):
    """Closed-form lower bound on the optimal rate (0 when eta*Q*g1 <= Pd + Pe)."""
    if np.any(np.asarray(c.g2) <= 0):
        raise DomainError("lower bound needs g2 > 0")
    k = _slope_scale(exact_tangent)
    snr = (p.eta * p.Q * c.g1 - p.Pd - p.Pe) / (
        2.0 * p.sigma2 / c.g2 + 2.0 * p.sigma2 * p.eta + k * p.eps / p.T0
    )
    # log1p(max(snr, 0)) clamps the bound at 0 for a negative numerator
    return np.log1p(np.maximum(snr, 0.0)) / (2.0 * p.T0 * LN2)
