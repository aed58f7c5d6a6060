"""Fairness and throughput statistics over scheduling logs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NEVER_SERVED",
    "GroupStats",
    "MetricsReport",
    "PropositionRatios",
    "gini",
    "long_term_rates",
    "cell_edge",
    "rate_latency",
    "service_utility",
    "service_report",
    "proposition_ratios",
]

NEVER_SERVED = -1


@dataclass
class GroupStats:
    target_rate_bps: float
    group_rate_bps: float
    gini: float
    success: bool
    users: tuple = ()


@dataclass
class MetricsReport:
    """Per-drop summary of one scheduler run."""

    system_throughput_bps: float
    gini_long: float
    gini_short_per_slot: np.ndarray
    cell_edge_bps: float
    rate_latency_slots: np.ndarray
    service_utility: float
    long_term_rates: np.ndarray
    per_group: dict = field(default_factory=dict)
    ratio1: float | None = None
    ratio2: float | None = None


@dataclass
class PropositionRatios:
    """Empirical check of the service-utility condition for two paired runs.

    ``ratio1`` compares per-slot scheduling probabilities, ``ratio2`` the
    two sides of the utility inequality. Both are geometric means over drops
    of the per-drop values; ``excluded`` lists ``(drop, user)`` pairs left out
    because the user was never scheduled in one of the runs.
    """

    ratio1: float
    ratio2: float
    ratio1_per_drop: np.ndarray
    ratio2_per_drop: np.ndarray
    ratio1_per_user: list
    excluded: list


def gini(rates) -> float:
    """Gini index ``sum_x sum_y |r_x - r_y| / (2 K^2 mean(r))``.

    Evaluated through the sorted-order identity, which makes the result
    exactly permutation invariant.
    """
    r = np.sort(np.asarray(rates, dtype=float).ravel())
    if r.size == 0:
        raise ValueError("gini of an empty vector")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("rates must be finite and nonnegative")
    total = r.sum()
    if total == 0:
        raise ValueError("gini is undefined for an all-zero rate vector")
    K = r.size
    coef = 2.0 * np.arange(K) - K + 1
    # coef sums to zero, so shifting by the minimum is exact and keeps equal vectors at 0
    return max(0.0, float(np.dot(coef, r - r[0]) / (K * total)))


def long_term_rates(history, t_c: int = 100) -> np.ndarray:
    """Per-user rate averaged over the first ``t_c`` slots.

    ``history`` has shape ``(num_slots, K)``. With fewer than ``t_c`` slots
    the average runs over the slots available.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim != 2 or h.shape[0] < 1:
        raise ValueError("history must be (num_slots >= 1, K)")
    window = h[:int(t_c)]
    return window.sum(axis=0) / window.shape[0]


def cell_edge(long_rates, percentile: float = 5.0) -> float:
    """Low-percentile user throughput, linear interpolation."""
    parts = [np.ravel(np.asarray(a, dtype=float)) for a in long_rates]
    if not parts or sum(p.size for p in parts) == 0:
        raise ValueError("cell_edge needs at least one sample")
    return float(np.percentile(np.concatenate(parts), percentile))


def rate_latency(history) -> np.ndarray:
    """First slot (1-based) with a nonzero rate, ``NEVER_SERVED`` otherwise."""
    h = np.asarray(history, dtype=float)
    hit = h > 0
    first = np.argmax(hit, axis=0) + 1
    return np.where(hit.any(axis=0), first, NEVER_SERVED)


def service_utility(T) -> float:
    """Sum of log historical rates; ``-inf`` if any user has zero history."""
    T = np.asarray(T, dtype=float)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(T)))


def service_report(long_rates, services) -> dict:
    """Aggregate rate, intra-group Gini and target success per service class."""
    r = np.asarray(long_rates, dtype=float)
    out = {}
    for svc in services:
        members = r[list(svc.users)]
        g = gini(members) if members.sum() > 0 else float("nan")
        out[svc.name] = GroupStats(
            target_rate_bps=svc.target_rate,
            group_rate_bps=float(members.sum()),
            gini=g,
            success=bool(np.all(members >= svc.target_rate)),
            users=tuple(svc.users),
        )
    return out


def _scheduled_stats(log, normalization):
    served = np.asarray(log.served)  # (slots, S, K)
    rates = np.asarray(log.rates_sk)
    pr = served.any(axis=1).mean(axis=0)
    n_events = served.sum(axis=(0, 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_rate = np.where(served, rates, 0.0).sum(axis=(0, 1)) / n_events
        mw = np.asarray(log.mean_weight, dtype=float)
        if normalization == "sum":
            mw = mw * log.num_candidates
        elif normalization != "mean":
            raise ValueError(f"unknown normalization {normalization!r}")
        valid = mw > 0
        share = np.where(valid, np.asarray(log.set_weight) / np.where(valid, mw, 1.0), 0.0)
        ok = served & valid[..., None]
        w_norm = (ok * share[..., None]).sum(axis=(0, 1)) / ok.sum(axis=(0, 1))
    return pr, mean_rate, w_norm


def proposition_ratios(logs_weighted, logs_conventional,
                       normalization: str = "mean") -> PropositionRatios:
    """Ratio1 and Ratio2 for paired drops of a weighted and a conventional run.

    Parameters
    ----------
    logs_weighted, logs_conventional : sequence of RunLog
        Drop logs in matching order (same placements and fading).
    normalization : {"mean", "sum"}
        How the weight of a chosen set is normalised: by the mean of W(U)
        over all candidate sets at that decision, or by their sum.

    Notes
    -----
    Per drop, with ``Pr_k`` the fraction of slots in which user ``k`` is on at
    least one subband, ``E[R_k]`` its mean rate over the subbands it was given
    and ``E[w_k]`` the mean normalised weight of the chosen sets containing
    it::

        ratio1 = geomean_k(Pr_k / Pr'_k)
        ratio2 = prod_k E[w_k] * prod_k E[R_k] / prod_k E[R'_k]

    Products are accumulated as sums of logs. Decisions in which every
    weight is zero (slot 1, or all targets met) carry no weight information
    and are skipped in ``E[w_k]``.
    """
    if len(logs_weighted) != len(logs_conventional):
        raise ValueError("both runs must contain the same number of drops")
    if len(logs_weighted) == 0:
        raise ValueError("no drops to compare")
    r1, r2, per_user, excluded = [], [], [], []
    for d, (a, b) in enumerate(zip(logs_weighted, logs_conventional)):
        pr_a, rate_a, w_a = _scheduled_stats(a, normalization)
        pr_b, rate_b, _ = _scheduled_stats(b, normalization)
        keep = (pr_a > 0) & (pr_b > 0) & np.isfinite(w_a) & (w_a > 0)
        excluded.extend((d, int(k)) for k in np.flatnonzero(~keep))
        if not keep.any():
            raise ValueError(f"drop {d}: no user scheduled in both runs")
        ratio_users = pr_a[keep] / pr_b[keep]
        per_user.append(ratio_users)
        r1.append(np.mean(np.log(ratio_users)))
        r2.append(np.sum(np.log(w_a[keep])) + np.sum(np.log(rate_a[keep]))
                  - np.sum(np.log(rate_b[keep])))
    return PropositionRatios(
        ratio1=math.exp(math.fsum(r1) / len(r1)),
        ratio2=math.exp(math.fsum(r2) / len(r2)),
        ratio1_per_drop=np.exp(r1),
        ratio2_per_drop=np.exp(r2),
        ratio1_per_user=per_user,
        excluded=excluded,
    )
