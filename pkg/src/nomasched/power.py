"""Equal power split across subbands and FTPA inside a subband."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import CellGeometry

__all__ = ["PowerAllocation", "dbm_to_mw", "equal_subband_power", "ftpa_allocate", "ftpa_powers"]

DEFAULT_FTPA_ALPHA = 0.4


@dataclass(frozen=True)
class PowerAllocation:
    """Power of each co-scheduled user on one subband (mW)."""

    subband_power: float
    per_user: dict
    ftpa_alpha: float


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def equal_subband_power(geometry: CellGeometry) -> float:
    """``P_max / S`` in mW."""
    return geometry.p_max_mw / geometry.num_subbands


def ftpa_allocate(candidate, norm_gains, subband_power: float,
                  alpha: float = DEFAULT_FTPA_ALPHA) -> PowerAllocation:
    """Fractional transmit power allocation for one candidate set.

    User ``k`` receives ``P_s * g_k**-alpha / sum_j g_j**-alpha`` where ``g``
    is the noise-normalised channel gain, so weaker users get more power
    when ``alpha > 0``.
    """
    users = list(candidate)
    g = np.asarray(norm_gains, dtype=float)
    if len(users) < 1:
        raise ValueError("candidate set must not be empty")
    if g.shape != (len(users),):
        raise ValueError("need one normalised gain per candidate user")
    if np.any(~(g > 0)) or not np.all(np.isfinite(g)):
        raise ValueError("normalised gains must be strictly positive and finite")
    p = ftpa_powers(g, subband_power, alpha)
    return PowerAllocation(subband_power, dict(zip(users, p.tolist())), alpha)


def ftpa_powers(norm_gains, subband_power, alpha: float) -> np.ndarray:
    """Vectorised FTPA along the last axis of ``norm_gains``."""
    g = np.asarray(norm_gains, dtype=float)
    # relative to the weakest member so g**-alpha stays in range for large alpha
    share = (g / g.min(axis=-1, keepdims=True)) ** -alpha
    return subband_power * share / share.sum(axis=-1, keepdims=True)
