"""Monte-Carlo drops: placement, fading, the slot loop and aggregation.

Seeding
-------
Drop ``i`` of an experiment with ``seed`` draws all of its randomness from
``numpy.random.SeedSequence(seed, spawn_key=(i,))``, spawned into three
independent children: user placement, fading, and subband visit order.
Nothing about the scheduler enters the seed, so two schedulers run on the
same ``(seed, i)`` see identical users and identical channel sequences.

Drops are advanced in lock-step as one batch; the result is identical to
running them one at a time.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (SLOT_DURATION_S, CellGeometry, ChannelRealization, FadingProcess,
                      doppler_hz, next_realization, place_users)
from .metrics import (MetricsReport, PropositionRatios, cell_edge, gini, long_term_rates,
                      proposition_ratios, rate_latency, service_report, service_utility)
from .power import equal_subband_power
from .sched import (Scheduler, SchedulerKind, SchedulerState, ServiceClass, end_slot_update,
                    service_rates)

__all__ = [
    "ExperimentConfig",
    "RunLog",
    "ExperimentReport",
    "ExperimentResult",
    "Comparison",
    "drop_seed",
    "run_drop",
    "run_drops",
    "run_experiment",
    "run_comparison",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one simulation run."""

    geometry: CellGeometry = field(default_factory=CellGeometry)
    num_users: int = 15
    max_users_per_subband: int = 2
    schedulers: tuple = (SchedulerKind.WNOPF,)
    t_c: int = 100
    b_factor: float = 1.5
    ftpa_alpha: float = 0.4
    num_slots: int = 100
    num_drops: int = 20
    seed: int = 0
    velocity_kmh: float = 50.0
    services: tuple = ()
    clamp_weights: bool = True
    w_floor: float = 0.0
    epsilon_rate: float = 1e-3
    subband_order: str = "ascending"
    cell_edge_percentile: float = 5.0
    first_slot_rule: str = "weighted"
    fading: str = "ar1"

    def __post_init__(self):
        kinds = self.schedulers
        if isinstance(kinds, (str, SchedulerKind)):
            kinds = (kinds,)
        object.__setattr__(self, "schedulers", tuple(SchedulerKind.parse(k) for k in kinds))
        object.__setattr__(self, "services", tuple(self.services))
        self.validate()

    def validate(self):
        def need(ok, key, msg):
            if not ok:
                raise ValueError(f"{key}: {msg}")

        need(isinstance(self.num_users, int) and self.num_users >= 1, "num_users", "must be an integer >= 1")
        need(isinstance(self.max_users_per_subband, int) and 1 <= self.max_users_per_subband <= 3,
             "max_users_per_subband", "must be 1, 2 or 3")
        need(len(self.schedulers) >= 1, "scheduler", "at least one scheduler is required")
        need(self.t_c >= 1, "t_c", "must be >= 1")
        need(self.b_factor > 0, "b_factor", "must be positive")
        need(self.ftpa_alpha >= 0, "ftpa_alpha", "must be nonnegative")
        need(isinstance(self.num_slots, int) and self.num_slots >= 1, "num_slots", "must be an integer >= 1")
        need(isinstance(self.num_drops, int) and self.num_drops >= 1, "num_drops", "must be an integer >= 1")
        need(isinstance(self.seed, int) and self.seed >= 0, "seed", "must be a nonnegative integer")
        need(self.velocity_kmh >= 0, "velocity_kmh", "must be nonnegative")
        need(self.epsilon_rate > 0, "flags.epsilon_rate", "must be positive")
        need(self.subband_order in ("ascending", "random"), "flags.subband_order",
             "must be 'ascending' or 'random'")
        need(0 <= self.cell_edge_percentile <= 100, "flags.cell_edge_percentile", "must lie in [0, 100]")
        need(self.first_slot_rule in ("weighted", "all", "none"), "flags.first_slot_rule",
             "must be 'weighted', 'all' or 'none'")
        need(self.fading in ("ar1", "sos"), "flags.fading", "must be 'ar1' or 'sos'")
        if self.services:
            try:
                service_rates(self.services, self.num_users)
            except ValueError as exc:
                raise ValueError(f"services: {exc}") from None

    @property
    def scheduler(self) -> SchedulerKind:
        return self.schedulers[0]

    @property
    def doppler_hz(self) -> float:
        return doppler_hz(self.velocity_kmh, self.geometry.carrier_hz)

    @property
    def slot_duration_s(self) -> float:
        return SLOT_DURATION_S

    def with_(self, **changes) -> "ExperimentConfig":
        """Copy with fields replaced; ``num_subbands`` is routed to the geometry."""
        if "num_subbands" in changes:
            geo = replace(self.geometry, num_subbands=changes.pop("num_subbands"))
            changes["geometry"] = geo
        return replace(self, **changes)


@dataclass
class RunLog:
    """Complete record of one drop under one scheduler.

    Arrays are indexed ``[slot, subband, user]`` with slot 0 holding the
    first scheduling slot.
    """

    drop_index: int
    kind: SchedulerKind
    distances_m: np.ndarray
    user_rates: np.ndarray  # (slots, K), R_k(t)
    rates_sk: np.ndarray  # (slots, S, K)
    served: np.ndarray  # (slots, S, K) bool
    chosen: np.ndarray  # (slots, S) candidate index
    set_weight: np.ndarray  # (slots, S)
    mean_weight: np.ndarray  # (slots, S)
    T: np.ndarray  # (slots + 1, K); row t is the history entering slot t + 1
    num_candidates: int
    channel_digest: str
    report: MetricsReport | None = None


@dataclass
class ExperimentReport:
    """Cross-drop aggregate of one scheduler."""

    kind: SchedulerKind
    num_drops: int
    system_throughput_bps: float
    gini_long: float
    cell_edge_bps: float
    gini_short_per_slot: np.ndarray
    service_utility: float
    system_throughput_per_drop: np.ndarray
    gini_long_per_drop: np.ndarray
    service_utility_per_drop: np.ndarray
    rate_latency_slots: np.ndarray  # (drops, K)
    per_group: dict = field(default_factory=dict)
    ratio1: float | None = None
    ratio2: float | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    kind: SchedulerKind
    logs: list
    report: ExperimentReport

    @property
    def drop_reports(self) -> list:
        return [lg.report for lg in self.logs]


@dataclass
class Comparison:
    a: ExperimentResult
    b: ExperimentResult
    ratios: PropositionRatios


def drop_seed(seed: int, drop_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(drop_index,))


def _drop_streams(config: ExperimentConfig, drop_index: int):
    place_ss, fade_ss, order_ss = drop_seed(config.seed, drop_index).spawn(3)
    return (np.random.default_rng(place_ss), np.random.default_rng(fade_ss),
            np.random.default_rng(order_ss))


def _services(config: ExperimentConfig):
    return [s if isinstance(s, ServiceClass) else ServiceClass(**s) for s in config.services]


def run_drops(config: ExperimentConfig, drop_indices, kind=None) -> list[RunLog]:
    """Simulate several drops in lock-step and return one log per drop."""
    kind = config.scheduler if kind is None else SchedulerKind.parse(kind)
    drop_indices = list(drop_indices)
    D = len(drop_indices)
    if D == 0:
        return []
    geo = config.geometry
    K, S, n_slots = config.num_users, geo.num_subbands, config.num_slots
    if not kind.is_oma and config.max_users_per_subband > K:
        log.debug("max_users_per_subband %d exceeds K=%d; capped", config.max_users_per_subband, K)

    placements, fading, order_rngs = [], [], []
    for i in drop_indices:
        rp, rf, ro = _drop_streams(config, i)
        pl = place_users(K, geo, rp)
        placements.append(pl)
        fading.append(FadingProcess(K, geo, config.doppler_hz, rf, method=config.fading))
        order_rngs.append(ro)

    sched = Scheduler(kind, K, equal_subband_power(geo), geo.subband_hz,
                      config.max_users_per_subband, config.ftpa_alpha, config.first_slot_rule)
    services = _services(config)
    svc_rate = service_rates(services, K) if services else None
    state = SchedulerState.initial(
        K, S, (D,), t_c=config.t_c, b=config.b_factor, epsilon_rate=config.epsilon_rate,
        w_floor=config.w_floor, clamp_weights=config.clamp_weights, service_rate=svc_rate)

    user_rates = np.zeros((D, n_slots, K))
    rates_sk = np.zeros((D, n_slots, S, K))
    served = np.zeros((D, n_slots, S, K), dtype=bool)
    chosen = np.zeros((D, n_slots, S), dtype=np.intp)
    set_weight = np.zeros((D, n_slots, S))
    mean_weight = np.zeros((D, n_slots, S))
    T_hist = np.zeros((D, n_slots + 1, K))
    digests = [hashlib.sha256() for _ in range(D)]

    for t in range(n_slots):
        reals = [next_realization(f, p, geo) for f, p in zip(fading, placements)]
        for h, r in zip(digests, reals):
            h.update(r.gain2.tobytes())
        batch = ChannelRealization(t + 1, np.stack([r.gain2 for r in reals]),
                                   np.stack([r.noise_power for r in reals]))
        if config.subband_order == "random":
            order = np.stack([ro.permutation(S) for ro in order_rngs])
        else:
            order = None
        res = sched.allocate(batch, state, order)
        user_rates[:, t] = state.R_cur
        rates_sk[:, t] = res.rates
        served[:, t] = res.served
        chosen[:, t] = res.chosen
        set_weight[:, t] = res.set_weight
        mean_weight[:, t] = res.mean_weight
        state = end_slot_update(state, res)
        T_hist[:, t + 1] = state.T

    logs = []
    for j, i in enumerate(drop_indices):
        lg = RunLog(
            drop_index=i,
            kind=kind,
            distances_m=np.array([p.distance_m for p in placements[j]]),
            user_rates=user_rates[j],
            rates_sk=rates_sk[j],
            served=served[j],
            chosen=chosen[j],
            set_weight=set_weight[j],
            mean_weight=mean_weight[j],
            T=T_hist[j],
            num_candidates=len(sched.table),
            channel_digest=digests[j].hexdigest(),
        )
        lg.report = drop_report(lg, config, services)
        logs.append(lg)
    return logs


def drop_report(lg: RunLog, config: ExperimentConfig, services=()) -> MetricsReport:
    r = long_term_rates(lg.user_rates, config.t_c)
    short = np.array([gini(x) if x.sum() > 0 else np.nan for x in lg.user_rates])
    return MetricsReport(
        system_throughput_bps=float(r.sum()),
        gini_long=gini(r),
        gini_short_per_slot=short,
        cell_edge_bps=cell_edge([r], config.cell_edge_percentile),
        rate_latency_slots=rate_latency(lg.user_rates),
        service_utility=service_utility(lg.T[-1]),
        long_term_rates=r,
        per_group=service_report(r, services) if services else {},
    )


def run_drop(config: ExperimentConfig, drop_index: int, kind=None) -> RunLog:
    """Simulate a single drop."""
    return run_drops(config, [drop_index], kind)[0]


def aggregate(kind, reports, config: ExperimentConfig) -> ExperimentReport:
    """Combine per-drop reports; independent of the order they arrive in."""
    if not reports:
        raise ValueError("nothing to aggregate")
    reports = sorted(reports, key=lambda r: r[0])
    reps = [r for _, r in reports]
    thr = np.array([r.system_throughput_bps for r in reps])
    g_long = np.array([r.gini_long for r in reps])
    util = np.array([r.service_utility for r in reps])
    groups = {}
    if reps[0].per_group:
        for name in reps[0].per_group:
            gs = [r.per_group[name] for r in reps]
            groups[name] = {
                "target_rate_bps": gs[0].target_rate_bps,
                "group_rate_bps": math.fsum(g.group_rate_bps for g in gs) / len(gs),
                "gini": math.fsum(g.gini for g in gs) / len(gs),
                "success_fraction": sum(g.success for g in gs) / len(gs),
                "gini_per_drop": [g.gini for g in gs],
                "success_per_drop": [g.success for g in gs],
            }
    with np.errstate(all="ignore"):
        short = np.nanmean(np.stack([r.gini_short_per_slot for r in reps]), axis=0)
    return ExperimentReport(
        kind=SchedulerKind.parse(kind),
        num_drops=len(reps),
        system_throughput_bps=math.fsum(thr) / len(thr),
        gini_long=math.fsum(g_long) / len(g_long),
        cell_edge_bps=cell_edge([r.long_term_rates for r in reps], config.cell_edge_percentile),
        gini_short_per_slot=short,
        service_utility=math.fsum(util) / len(util) if np.all(np.isfinite(util)) else float(np.mean(util)),
        system_throughput_per_drop=thr,
        gini_long_per_drop=g_long,
        service_utility_per_drop=util,
        rate_latency_slots=np.stack([r.rate_latency_slots for r in reps]),
        per_group=groups,
    )


def run_experiment(config: ExperimentConfig, kind=None, drops=None) -> ExperimentResult:
    """Run ``config.num_drops`` drops of one scheduler and aggregate them."""
    kind = config.scheduler if kind is None else SchedulerKind.parse(kind)
    drops = range(config.num_drops) if drops is None else drops
    try:
        logs = run_drops(config, drops, kind)
    except Exception as exc:
        # lock-step batch failed; rerun one by one to name the failing drop
        for i in drops:
            try:
                run_drop(config, i, kind)
            except Exception as inner:
                raise RuntimeError(f"drop {i} failed: {inner}") from inner
        raise
    report = aggregate(kind, [(lg.drop_index, lg.report) for lg in logs], config)
    log.info("%s K=%d S=%d: %.2f Mbps, Gini %.4f", kind, config.num_users,
             config.geometry.num_subbands, report.system_throughput_bps / 1e6, report.gini_long)
    return ExperimentResult(config, kind, logs, report)


def run_comparison(config: ExperimentConfig, kind_a, kind_b,
                   normalization: str = "mean") -> Comparison:
    """Run two schedulers on identical drops and compute the paired ratios."""
    a = run_experiment(config, kind_a)
    b = run_experiment(config, kind_b)
    for la, lb in zip(a.logs, b.logs):
        if la.channel_digest != lb.channel_digest:
            raise RuntimeError(f"drop {la.drop_index}: channel streams diverged between runs")
    ratios = proposition_ratios(a.logs, b.logs, normalization)
    a.report.ratio1 = b.report.ratio1 = ratios.ratio1
    a.report.ratio2 = b.report.ratio2 = ratios.ratio2
    return Comparison(a, b, ratios)
