"""SIC decoding order and achievable rates of users sharing a subband."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RateVector", "sic_order", "user_rate", "sic_interference", "sic_rates"]


@dataclass(frozen=True)
class RateVector:
    users: tuple
    rates: np.ndarray  # bps, aligned with users
    subband: int | None = None
    slot: int | None = None

    def as_dict(self) -> dict:
        return dict(zip(self.users, self.rates.tolist()))


def sic_order(candidate, norm_gains) -> list:
    """Decoding order: ascending normalised gain, ties by user id."""
    users = list(candidate)
    g = list(np.asarray(norm_gains, dtype=float))
    if len(g) != len(users):
        raise ValueError("need one normalised gain per candidate user")
    return [u for _, u in sorted(zip(g, users))]


def user_rate(candidate, powers, gain2, noise, subband_hz: float,
              subband: int | None = None, slot: int | None = None) -> RateVector:
    """Shannon rate of every member of ``candidate`` under perfect SIC.

    ``powers``, ``gain2`` and ``noise`` are aligned with ``candidate``.
    A user is interfered only by co-scheduled users whose normalised gain is
    strictly higher than its own (ties resolved by user id), and that
    interference is seen through the user's own channel.
    """
    users = tuple(candidate)
    p = np.asarray(powers, dtype=float)
    g2 = np.asarray(gain2, dtype=float)
    n = np.asarray(noise, dtype=float)
    if not p.shape == g2.shape == n.shape == (len(users),):
        raise ValueError("powers, gain2 and noise must align with the candidate set")
    rates = sic_rates(g2, n, p, np.asarray(users), subband_hz)
    return RateVector(users, rates, subband, slot)


def sic_interference(gain2, noise, powers, user_ids) -> np.ndarray:
    """Residual interference power left after SIC, per member (mW).

    Same broadcasting rules as :func:`sic_rates`. The member with the highest
    normalised gain gets exactly zero.
    """
    g = gain2 / noise
    ids = np.broadcast_to(user_ids, g.shape)
    # stronger[..., n, j]: member j decodes after member n, so n sees j as noise
    gn, gj = g[..., :, None], g[..., None, :]
    stronger = (gj > gn) | ((gj == gn) & (ids[..., None, :] > ids[..., :, None]))
    return gain2 * (stronger * powers[..., None, :]).sum(axis=-1)


def sic_rates(gain2, noise, powers, user_ids, subband_hz: float) -> np.ndarray:
    """Vectorised SIC rates along the last axis (the members of a set).

    All array arguments broadcast to ``(..., m)``; ``user_ids`` is used only
    to break exact gain ties.
    """
    interf = sic_interference(gain2, noise, powers, user_ids)
    sinr = gain2 * powers / (interf + noise)
    return subband_hz * np.log2(1.0 + sinr)
