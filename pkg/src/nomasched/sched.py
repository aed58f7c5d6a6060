"""Candidate enumeration, PF-family scheduling metrics and the slot loop.

A slot is scheduled subband by subband. For each subband every candidate
user set (all subsets of size ``1..n_s``) is scored with the scheduler's
metric, the best set wins (ties go to the lexicographically smallest set),
and the winners' current-slot rates are credited immediately so later
subbands see the running totals.

State arrays may carry leading batch axes, e.g. ``T.shape == (D, K)`` for
``D`` independent drops advanced in lock-step. The per-set metric functions
(:func:`pf_metric` and friends) take a single-drop state and are meant for
inspection and testing; :class:`Scheduler` is the vectorised path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from math import comb

import numpy as np

from .power import ftpa_powers
from .rate import sic_rates

__all__ = [
    "SchedulerKind",
    "ServiceClass",
    "SchedulerState",
    "AllocationResult",
    "CandidateTable",
    "Scheduler",
    "enumerate_candidates",
    "count_candidates",
    "pf_metric",
    "weight_user",
    "user_weights",
    "wnopf_metric",
    "jwnopf_metric",
    "pf_modified_metric",
    "first_slot_metric",
    "allocate_slot",
    "end_slot_update",
]


class SchedulerKind(str, Enum):
    PF_NOMA = "PF_NOMA"
    WNOPF = "WNOPF"
    J_WNOPF = "J_WNOPF"
    PF_MODIFIED = "PF_MODIFIED"
    PF_OMA = "PF_OMA"
    WOPF = "WOPF"

    @property
    def is_oma(self) -> bool:
        return self in (SchedulerKind.PF_OMA, SchedulerKind.WOPF)

    @property
    def is_weighted(self) -> bool:
        return self in (SchedulerKind.WNOPF, SchedulerKind.J_WNOPF, SchedulerKind.WOPF)

    @classmethod
    def parse(cls, name) -> "SchedulerKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown scheduler {name!r}; expected one of {valid}") from None

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ServiceClass:
    """A premium service level: its target rate and the users requesting it."""

    name: str
    target_rate: float  # bps
    users: tuple = ()

    def __post_init__(self):
        if not self.target_rate > 0:
            raise ValueError(f"service {self.name!r}: target_rate must be positive")


def service_rates(services, num_users: int) -> np.ndarray:
    """Per-user target rate vector; every user must belong to exactly one class."""
    out = np.full(num_users, np.nan)
    for svc in services:
        for k in svc.users:
            if not 0 <= k < num_users:
                raise ValueError(f"service {svc.name!r} references unknown user {k}")
            if not np.isnan(out[k]):
                raise ValueError(f"user {k} belongs to more than one service class")
            out[k] = svc.target_rate
    missing = np.flatnonzero(np.isnan(out))
    if missing.size:
        raise ValueError(f"users {missing.tolist()} have no service class")
    return out


def enumerate_candidates(num_users: int, max_per_subband: int) -> list[tuple]:
    """All user subsets of size ``1..max_per_subband`` in lexicographic order."""
    if num_users < 1:
        raise ValueError("num_users must be >= 1")
    if not 1 <= max_per_subband <= num_users:
        raise ValueError(
            f"max_per_subband must be in [1, num_users={num_users}], got {max_per_subband}")
    sets = [c for m in range(1, max_per_subband + 1)
            for c in itertools.combinations(range(num_users), m)]
    return sorted(sets)


def count_candidates(num_users: int, max_per_subband: int) -> int:
    return sum(comb(num_users, m) for m in range(1, max_per_subband + 1))


class CandidateTable:
    """Candidate sets as index arrays.

    ``members`` has shape ``(N_U, n_max)``; short sets are padded with the
    out-of-range index ``K``, so per-user arrays extended by one trailing
    entry can be gathered without masking.
    """

    def __init__(self, num_users: int, max_per_subband: int):
        self.sets = enumerate_candidates(num_users, max_per_subband)
        self.num_users = num_users
        self.n_max = max_per_subband
        self.members = np.full((len(self.sets), max_per_subband), num_users, dtype=np.intp)
        for i, c in enumerate(self.sets):
            self.members[i, :len(c)] = c
        sizes = np.array([len(c) for c in self.sets])
        self.sizes = sizes
        self.groups = []
        for m in range(1, max_per_subband + 1):
            idx = np.flatnonzero(sizes == m)
            self.groups.append((m, idx, self.members[idx, :m]))

    def __len__(self):
        return len(self.sets)


@dataclass
class SchedulerState:
    """Per-user scheduling history and the running totals of the current slot.

    Attributes
    ----------
    T : ndarray, shape (..., K)
        Exponentially averaged historical rate (bps).
    R_cur : ndarray, shape (..., K)
        Rate credited so far in the current slot.
    served : ndarray of bool, shape (..., S, K)
        ``served[..., s, k]`` is True when subband ``s`` was given to ``k``
        in the current slot.
    R_avg_prev : ndarray, shape (...)
        Mean per-user rate of the previous slot.
    service_rate : ndarray or None, shape (K,)
        Target rates when premium services are on.
    """

    T: np.ndarray
    R_cur: np.ndarray
    served: np.ndarray
    R_avg_prev: np.ndarray
    t: int = 1
    t_c: float = 100.0
    b: float = 1.5
    epsilon_rate: float = 1e-3
    w_floor: float = 0.0
    clamp_weights: bool = True
    service_rate: np.ndarray | None = None

    @classmethod
    def initial(cls, num_users: int, num_subbands: int, batch_shape=(), **params):
        batch_shape = tuple(batch_shape)
        return cls(
            T=np.zeros(batch_shape + (num_users,)),
            R_cur=np.zeros(batch_shape + (num_users,)),
            served=np.zeros(batch_shape + (num_subbands, num_users), dtype=bool),
            R_avg_prev=np.zeros(batch_shape),
            **params,
        )

    @property
    def num_users(self) -> int:
        return self.T.shape[-1]

    @property
    def S_alloc(self) -> list[set]:
        """Subbands allocated to each user in the current slot (single drop)."""
        if self.served.ndim != 2:
            raise ValueError("S_alloc is only defined for an unbatched state")
        return [set(np.flatnonzero(self.served[:, k]).tolist()) for k in range(self.num_users)]

    @property
    def premium(self) -> bool:
        return self.service_rate is not None


@dataclass
class AllocationResult:
    """Outcome of one slot.

    ``chosen`` indexes the candidate table per subband; ``rates`` and
    ``powers`` are ``(..., S, K)`` with zeros for users not on a subband.
    ``set_weight`` is W(U_s) of the chosen set and ``mean_weight`` the mean
    of W(U) over all candidates at decision time. Unweighted kinds log
    ``W_k = 1`` for every user.
    """

    slot: int
    kind: SchedulerKind
    candidates: list
    chosen: np.ndarray
    rates: np.ndarray
    powers: np.ndarray
    served: np.ndarray
    set_weight: np.ndarray
    mean_weight: np.ndarray
    order: np.ndarray = field(repr=False, default=None)

    @property
    def user_rates(self) -> np.ndarray:
        return self.rates.sum(axis=-2)

    @property
    def sets(self) -> list[tuple]:
        if self.chosen.ndim != 1:
            raise ValueError("sets is only defined for an unbatched result")
        return [self.candidates[c] for c in self.chosen]


# -- per-set metrics (single drop, used for inspection and as test oracles) --

def _terms(U, rates_on_s):
    U = tuple(U)
    r = np.asarray(rates_on_s, dtype=float)
    if r.shape != (len(U),):
        raise ValueError("rates_on_s must align with the candidate set")
    return U, r


def pf_metric(U, rates_on_s, state: SchedulerState) -> float:
    """Sum of instantaneous-to-historical rate ratios over the set."""
    U, r = _terms(U, rates_on_s)
    T = state.T[list(U)]
    return float(np.sum(r / np.maximum(T, state.epsilon_rate)))


def weight_user(k: int, state: SchedulerState, mode: str | None = None, service=None) -> float:
    """Rate-distance weight of user ``k``.

    ``standard``: distance between ``b`` times last slot's mean user rate and
    the user's rate so far this slot. ``premium``: distance between the
    user's service target and its rate so far. Clamped below at ``w_floor``
    unless ``state.clamp_weights`` is False.
    """
    if mode is None:
        mode = "premium" if (service is not None or state.premium) else "standard"
    if mode == "standard":
        w = state.b * float(state.R_avg_prev) - state.R_cur[k]
    elif mode == "premium":
        if service is None:
            if state.service_rate is None or np.isnan(state.service_rate[k]):
                raise ValueError(f"user {k} has no service class in premium mode")
            target = state.service_rate[k]
        else:
            target = getattr(service, "target_rate", service)
        w = target - state.R_cur[k]
    else:
        raise ValueError(f"unknown weight mode {mode!r}")
    return float(max(w, state.w_floor)) if state.clamp_weights else float(w)


def user_weights(state: SchedulerState) -> np.ndarray:
    """Vectorised :func:`weight_user` over all users, shape ``(..., K)``."""
    if state.premium:
        w = state.service_rate - state.R_cur
    else:
        w = state.b * np.asarray(state.R_avg_prev)[..., None] - state.R_cur
    return np.maximum(w, state.w_floor) if state.clamp_weights else w


def wnopf_metric(U, rates_on_s, state: SchedulerState) -> float:
    """PF score of the set times the summed weights of its members."""
    W = sum(weight_user(k, state) for k in U)
    return pf_metric(U, rates_on_s, state) * W


def jwnopf_metric(U, rates_on_s, state: SchedulerState) -> float:
    """Each member's PF term scaled by its own weight, no cross terms."""
    U, r = _terms(U, rates_on_s)
    T = np.maximum(state.T[list(U)], state.epsilon_rate)
    w = np.array([weight_user(k, state) for k in U])
    return float(np.sum(r / T * w))


def pf_modified_metric(U, rates_on_s, state: SchedulerState) -> float:
    """PF with the current slot's credited rate added to the history."""
    U, r = _terms(U, rates_on_s)
    den = state.T[list(U)] + state.R_cur[list(U)]
    return float(np.sum(r / np.maximum(den, state.epsilon_rate)))


def first_slot_metric(U, rates_on_s, state: SchedulerState) -> float:
    """First-slot rule: instantaneous rate over rate already credited this slot."""
    if state.t != 1:
        raise ValueError(f"first_slot_metric applies to slot 1 only, state is at slot {state.t}")
    U, r = _terms(U, rates_on_s)
    return float(np.sum(r / np.maximum(state.R_cur[list(U)], state.epsilon_rate)))


# -- vectorised slot scheduler --

class Scheduler:
    """Static per-experiment scheduling setup.

    Parameters
    ----------
    kind : SchedulerKind
    num_users : int
    subband_power : float
        Power per subband in mW (``P_max / S``).
    subband_hz : float
        Subband bandwidth ``B / S``.
    max_per_subband : int
        ``n_s``; forced to 1 for OMA kinds.
    ftpa_alpha : float
    first_slot_rule : {"weighted", "all", "none"}
        Which kinds use the first-slot metric in slot 1.
    """

    def __init__(self, kind, num_users: int, subband_power: float, subband_hz: float,
                 max_per_subband: int = 2, ftpa_alpha: float = 0.4,
                 first_slot_rule: str = "weighted"):
        self.kind = SchedulerKind.parse(kind)
        if first_slot_rule not in ("weighted", "all", "none"):
            raise ValueError(f"unknown first_slot_rule {first_slot_rule!r}")
        n_s = 1 if self.kind.is_oma else min(max_per_subband, num_users)
        self.table = CandidateTable(num_users, n_s)
        self.num_users = num_users
        self.subband_power = subband_power
        self.subband_hz = subband_hz
        self.ftpa_alpha = ftpa_alpha
        self.first_slot_rule = first_slot_rule

    def uses_first_slot_rule(self, t: int) -> bool:
        if t != 1:
            return False
        return self.first_slot_rule == "all" or (
            self.first_slot_rule == "weighted" and self.kind.is_weighted)

    def candidate_rates(self, gain2: np.ndarray, noise: np.ndarray):
        """FTPA powers and SIC rates of every candidate on every subband.

        Returns two arrays of shape ``(D, S, N_U, n_max)`` (padded with 0).
        """
        D, S, _ = gain2.shape
        tab = self.table
        rates = np.zeros((D, S, len(tab), tab.n_max))
        powers = np.zeros_like(rates)
        for m, idx, mem in tab.groups:
            g2 = gain2[..., mem]
            nz = noise[..., mem]
            p = ftpa_powers(g2 / nz, self.subband_power, self.ftpa_alpha)
            rates[:, :, idx, :m] = sic_rates(g2, nz, p, mem, self.subband_hz)
            powers[:, :, idx, :m] = p
        return rates, powers

    def allocate(self, realization, state: SchedulerState, order=None) -> AllocationResult:
        """Schedule every subband of one slot, crediting ``state`` in place.

        ``order`` is the subband visit order, shape ``(S,)`` or ``(..., S)``;
        ascending by default.
        """
        batch = state.T.shape[:-1]
        K = state.num_users
        if K != self.num_users:
            raise ValueError("state and scheduler disagree on the number of users")
        S = realization.gain2.shape[-2]
        D = int(np.prod(batch, dtype=int))
        gain2 = np.asarray(realization.gain2, dtype=float).reshape(D, S, K)
        noise = np.broadcast_to(realization.noise_power, realization.gain2.shape).reshape(D, S, K)
        if order is None:
            order = np.broadcast_to(np.arange(S), (D, S))
        else:
            order = np.broadcast_to(np.asarray(order), batch + (S,)).reshape(D, S)

        cand_rates, cand_powers = self.candidate_rates(gain2, noise)
        M = self.table.members
        rows = np.arange(D)
        eps = state.epsilon_rate

        def ext(a, pad):
            return np.concatenate([a.reshape(D, K), np.full((D, 1), pad)], axis=1)

        T_ext = ext(state.T, 1.0)
        R_cur = ext(state.R_cur, 0.0)
        R_avg_prev = np.asarray(state.R_avg_prev, dtype=float).reshape(D)
        service = None
        if state.premium:
            service = np.broadcast_to(state.service_rate, batch + (K,)).reshape(D, K)

        rates = np.zeros((D, S, K + 1))
        powers = np.zeros((D, S, K + 1))
        served = np.zeros((D, S, K + 1), dtype=bool)
        chosen = np.empty((D, S), dtype=np.intp)
        set_weight = np.empty((D, S))
        mean_weight = np.empty((D, S))

        # T is frozen during the slot, so PF terms are known up front
        pf_terms = cand_rates / np.maximum(T_ext[:, M], eps)[:, None]
        pf_sum = pf_terms.sum(axis=-1)
        kind = self.kind
        first = self.uses_first_slot_rule(state.t)
        weighted = kind.is_weighted
        # unweighted kinds log W_k = 1, i.e. W(U) = |U|
        unit_weight = np.broadcast_to(self.table.sizes.astype(float), (D, len(M)))

        for i in range(S):
            s = order[:, i]
            R = cand_rates[rows, s]  # (D, N_U, n_max)
            if weighted:
                if service is not None:
                    w = service - R_cur[:, :K]
                else:
                    w = state.b * R_avg_prev[:, None] - R_cur[:, :K]
                if state.clamp_weights:
                    w = np.maximum(w, state.w_floor)
                W_mem = np.concatenate([w, np.zeros((D, 1))], axis=1)[:, M]
                W_set = W_mem.sum(axis=-1)
            else:
                W_set = unit_weight

            if first:
                score = (R / np.maximum(R_cur[:, M], eps)).sum(axis=-1)
            elif kind in (SchedulerKind.PF_NOMA, SchedulerKind.PF_OMA):
                score = pf_sum[rows, s]
            elif kind is SchedulerKind.PF_MODIFIED:
                score = (R / np.maximum(T_ext[:, M] + R_cur[:, M], eps)).sum(axis=-1)
            elif kind is SchedulerKind.WNOPF:
                score = pf_sum[rows, s] * W_set
            else:  # J_WNOPF, WOPF
                score = (pf_terms[rows, s] * W_mem).sum(axis=-1)
            if weighted and not first and state.clamp_weights:
                # every weight exhausted: fall back to the unweighted PF score
                dead = ~np.any(w > 0, axis=-1)
                if dead.any():
                    score = np.where(dead[:, None], pf_sum[rows, s], score)

            c = np.argmax(score, axis=-1)
            mem = M[c]
            r = R[rows, c]
            np.add.at(R_cur, (rows[:, None], mem), r)
            rates[rows[:, None], s[:, None], mem] = r
            powers[rows[:, None], s[:, None], mem] = cand_powers[rows, s, c]
            served[rows[:, None], s[:, None], mem] = True
            chosen[rows, s] = c
            set_weight[rows, s] = W_set[rows, c]
            mean_weight[rows, s] = W_set.mean(axis=-1)

        state.R_cur = R_cur[:, :K].reshape(batch + (K,))
        state.served = served[..., :K].reshape(batch + (S, K))
        return AllocationResult(
            slot=state.t,
            kind=kind,
            candidates=self.table.sets,
            chosen=chosen.reshape(batch + (S,)),
            rates=rates[..., :K].reshape(batch + (S, K)),
            powers=powers[..., :K].reshape(batch + (S, K)),
            served=state.served.copy(),
            set_weight=set_weight.reshape(batch + (S,)),
            mean_weight=mean_weight.reshape(batch + (S,)),
            order=order.reshape(batch + (S,)),
        )


def allocate_slot(realization, state: SchedulerState, kind, subband_power: float,
                  subband_hz: float, max_per_subband: int = 2, ftpa_alpha: float = 0.4,
                  first_slot_rule: str = "weighted", order=None) -> AllocationResult:
    """One-shot convenience wrapper around :meth:`Scheduler.allocate`."""
    sched = Scheduler(kind, state.num_users, subband_power, subband_hz,
                      max_per_subband, ftpa_alpha, first_slot_rule)
    return sched.allocate(realization, state, order)


def end_slot_update(state: SchedulerState, result: AllocationResult | None = None) -> SchedulerState:
    """Close the slot: update historical rates and the mean user rate.

    The slot rate of each user is the running total ``state.R_cur`` built up
    during allocation. Returns a fresh state positioned at slot ``t + 1``.
    """
    if result is not None and result.slot != state.t:
        raise ValueError(f"result is for slot {result.slot}, state is at slot {state.t}")
    slot_rate = state.R_cur
    a = 1.0 / state.t_c
    T = (1.0 - a) * state.T + a * slot_rate
    return replace(
        state,
        T=T,
        R_cur=np.zeros_like(state.R_cur),
        served=np.zeros_like(state.served),
        R_avg_prev=slot_rate.mean(axis=-1),
        t=state.t + 1,
    )
