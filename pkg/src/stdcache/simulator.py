"""Replay query streams through configured caches and compute metrics.

A simulation is three phases: populate static sets from training
frequencies, warm up the mutable sections by replaying the training stream
with metrics off, then replay the test stream with metrics on. Sweeps run a
grid of configurations, write rows to CSV as they complete, and compare the
best static-dynamic and topic-partitioned rates against the clairvoyant
upper bound.
"""

from __future__ import annotations

import csv
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .admission import (
    AlwaysAdmit,
    FeatureThresholdPolicy,
    build_singleton_oracle,
    feature_policy,
)
from .caches import (
    DYNAMIC,
    STATIC,
    TOPIC,
    BeladyCache,
    CacheConfig,
    build_cache,
    build_future_index,
    query_counts,
)
from .querylog import QueryStream
from .topics.assign import TopicMap

RESULTS_COLUMNS = (
    "variant,N,f_s,f_t,f_d,f_ts,admission,warmup_events,test_events,"
    "hits,misses,hit_rate,hits_static,hits_topic,hits_dynamic,no_topic_routed"
).split(",")
GAP_COLUMNS = "N,admission,belady,best_sdc,best_std,gap_sdc,gap_std,gap_std_vs_sdc,gap_reduction".split(",")
MISSDIST_COLUMNS = "variant,N,scope,topic_id,avg_miss_distance".split(",")


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationReport:
    """Counts and rates from one test replay."""

    config: CacheConfig
    admission: str
    warmup_events: int
    test_events: int
    hits: int
    misses: int
    hits_by_layer: dict[str, int]
    no_topic_routed: int
    per_topic_miss_distance: dict[int, float] = field(default_factory=dict)
    dynamic_miss_distance: float | None = None

    @property
    def hit_rate(self) -> float:
        return self.hits / self.test_events

    def csv_row(self) -> list:
        c = self.config
        return [
            c.variant, c.total_entries, f"{c.f_s:g}", f"{c.f_t:g}", f"{c.f_d:g}",
            f"{c.f_t_s:g}", self.admission, self.warmup_events, self.test_events,
            self.hits, self.misses, f"{self.hit_rate:.6f}",
            self.hits_by_layer.get(STATIC, 0), self.hits_by_layer.get(TOPIC, 0),
            self.hits_by_layer.get(DYNAMIC, 0), self.no_topic_routed,
        ]


@dataclass(frozen=True)
class GapReport:
    """Hit-rate shortfalls from the clairvoyant bound, and their reduction.

    Rates keep whatever unit they are given in (fractions or percentages);
    gap_reduction is a ratio and is None when the baseline gap is not
    positive.
    """

    belady_rate: float
    sdc_rate: float
    std_rate: float

    @property
    def gap_sdc(self) -> float:
        return self.belady_rate - self.sdc_rate

    @property
    def gap_std(self) -> float:
        return self.belady_rate - self.std_rate

    @property
    def gap_std_vs_sdc(self) -> float:
        return self.std_rate - self.sdc_rate

    @property
    def gap_reduction(self) -> float | None:
        if self.gap_sdc <= 0:
            return None
        return (self.gap_sdc - self.gap_std) / self.gap_sdc


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian sweep: sizes x f_s x remainder split x f_t_s x variants."""

    sizes: tuple[int, ...]
    f_s_values: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    topic_share: tuple[float, ...] = (0.8,)
    f_t_s_values: tuple[float, ...] = (0.4,)
    variants: tuple[str, ...] = ("SDC", "STD_SDC_VAR_C2")
    admissions: tuple[str, ...] = ("none",)
    x: int = 3
    y: int = 5
    z: int = 20

    def __post_init__(self):
        for v in self.f_s_values:
            if not 0.0 <= v <= 1.0:
                raise SimulationError(f"f_s value {v} outside [0, 1]")

    def configs(self) -> list[CacheConfig]:
        points = []
        for n in self.sizes:
            for variant in self.variants:
                points.extend(self._variant_points(n, variant))
        return points

    def _variant_points(self, n: int, variant: str) -> list[CacheConfig]:
        if variant in ("LRU_ONLY", "STATIC_ONLY"):
            f = 0.0 if variant == "LRU_ONLY" else 1.0
            return [CacheConfig(total_entries=n, f_s=f, f_t=0.0, f_d=1.0 - f, variant=variant)]
        if variant == "T_SDC_VAR":
            return [
                CacheConfig(total_entries=n, f_s=0.0, f_t=1.0, f_d=0.0, f_t_s=fts, variant=variant)
                for fts in self.f_t_s_values
            ]
        if variant == "SDC":
            return [
                CacheConfig(total_entries=n, f_s=fs, f_t=0.0, f_d=1.0 - fs, variant=variant)
                for fs in self.f_s_values
            ]
        points = []
        needs_fts = variant in ("STD_SDC_VAR_C1", "STD_SDC_VAR_C2")
        fts_values = self.f_t_s_values if needs_fts else (0.0,)
        for fs in self.f_s_values:
            for share in self.topic_share:
                f_t = (1.0 - fs) * share
                f_d = 1.0 - fs - f_t
                for fts in fts_values:
                    points.append(
                        CacheConfig(
                            total_entries=n, f_s=fs, f_t=f_t, f_d=f_d,
                            f_t_s=fts, variant=variant,
                        )
                    )
        return points


def resolve_topic(event, assignments: dict[str, int] | None) -> int | None:
    if event.topic is not None:
        return event.topic
    if assignments:
        return assignments.get(event.query)
    return None


def run_simulation(
    config: CacheConfig,
    training_stream: QueryStream | None,
    test_stream: QueryStream,
    topic_map: TopicMap | None = None,
    admission=None,
    *,
    warmup: bool = True,
    record_trace: bool = False,
    admission_filters_static: bool = False,
) -> SimulationReport:
    """Three-phase replay returning a metrics report.

    training_stream may be None (no statics, no warm-up). The admission
    policy gates insertions in both warm-up and test phases; when
    ``admission_filters_static`` is set, a feature policy also filters the
    queries eligible for static population.
    """
    if not test_stream.events:
        raise SimulationError("test stream is empty")
    counts = query_counts(training_stream) if training_stream else Counter()
    static_counts = counts
    if admission_filters_static and isinstance(admission, FeatureThresholdPolicy):
        static_counts = {q: c for q, c in counts.items() if admission.admits(q)}

    cache = build_cache(config, static_counts, topic_map)
    assignments = topic_map.assignments if topic_map else None
    policy = admission or AlwaysAdmit()

    if warmup and training_stream:
        for event in training_stream.events:
            cache.process(event.query, topic=resolve_topic(event, assignments), admit=policy.admits(event.query))

    hits = 0
    by_layer = {STATIC: 0, TOPIC: 0, DYNAMIC: 0}
    no_topic_routed = 0
    trace: list[tuple[str, int | None, bool, str, int | None]] = []
    for event in test_stream.events:
        topic = resolve_topic(event, assignments)
        outcome = cache.process(event.query, topic=topic, admit=policy.admits(event.query))
        if outcome.hit:
            hits += 1
            by_layer[outcome.layer] += 1
        if topic is not None and outcome.layer == DYNAMIC:
            no_topic_routed += 1
        if record_trace:
            trace.append((event.query, topic, outcome.hit, outcome.layer, outcome.topic))

    n_test = len(test_stream.events)
    per_topic, dynamic_dist = avg_miss_distance(trace) if record_trace else ({}, None)
    return SimulationReport(
        config=config,
        admission=getattr(policy, "name", "custom"),
        warmup_events=len(training_stream.events) if (warmup and training_stream) else 0,
        test_events=n_test,
        hits=hits,
        misses=n_test - hits,
        hits_by_layer=by_layer,
        no_topic_routed=no_topic_routed,
        per_topic_miss_distance=per_topic,
        dynamic_miss_distance=dynamic_dist,
    )


def avg_miss_distance(trace: Sequence[tuple]) -> tuple[dict[int, float], float | None]:
    """Mean gap between consecutive misses of the same query, aggregated.

    The gap between misses at replay positions p1 < p2 is p2 - p1 - 1
    (events in between). Queries with fewer than two misses contribute
    nothing. Per-query means are averaged into the query's serving scope:
    its topic section, or the dynamic cache.
    """
    miss_positions: dict[str, list[int]] = {}
    scope: dict[str, tuple[str, int | None]] = {}
    for pos, (query, _topic, hit, layer, outcome_topic) in enumerate(trace):
        if hit or layer == STATIC:
            continue
        miss_positions.setdefault(query, []).append(pos)
        if query not in scope:
            scope[query] = (layer, outcome_topic)

    topic_means: dict[int, list[float]] = {}
    dynamic_means: list[float] = []
    for query, positions in miss_positions.items():
        if len(positions) < 2:
            continue
        gaps = [b - a - 1 for a, b in zip(positions, positions[1:])]
        mean = sum(gaps) / len(gaps)
        layer, topic = scope[query]
        if layer == TOPIC and topic is not None:
            topic_means.setdefault(topic, []).append(mean)
        else:
            dynamic_means.append(mean)

    per_topic = {t: sum(ms) / len(ms) for t, ms in sorted(topic_means.items())}
    dynamic = sum(dynamic_means) / len(dynamic_means) if dynamic_means else None
    return per_topic, dynamic


def run_belady(
    test_stream: QueryStream,
    total_entries: int,
    admission=None,
    record_trace: bool = False,
    training_stream: QueryStream | None = None,
) -> SimulationReport:
    """Clairvoyant replay; metrics cover the test stream only.

    When a training stream is given, the future index spans the concatenated
    training+test stream and the training portion is replayed metrics-off,
    so the clairvoyant bound starts as warm as the policies it is compared
    against.
    """
    if not test_stream.events:
        raise SimulationError("test stream is empty")
    warm_keys = training_stream.queries() if training_stream else []
    keys = test_stream.queries()
    cache = BeladyCache(total_entries, build_future_index(warm_keys + keys))
    policy = admission or AlwaysAdmit()
    config = CacheConfig(total_entries=total_entries, f_s=0.0, f_t=0.0, f_d=1.0, variant="BELADY")

    for q in warm_keys:
        cache.process(q, admit=policy.admits(q))

    if record_trace or not isinstance(policy, AlwaysAdmit):
        hits = 0
        trace = []
        for q in keys:
            outcome = cache.process(q, admit=policy.admits(q))
            hits += outcome.hit
            if record_trace:
                trace.append((q, None, outcome.hit, DYNAMIC, None))
        misses = len(keys) - hits
    else:
        hits, misses = cache.replay(keys)
        trace = []

    per_topic, dynamic_dist = avg_miss_distance(trace) if record_trace else ({}, None)
    return SimulationReport(
        config=config,
        admission=getattr(policy, "name", "custom"),
        warmup_events=len(warm_keys),
        test_events=len(keys),
        hits=hits,
        misses=misses,
        hits_by_layer={STATIC: 0, TOPIC: 0, DYNAMIC: hits},
        no_topic_routed=0,
        per_topic_miss_distance=per_topic,
        dynamic_miss_distance=dynamic_dist,
    )


def make_admission(
    name: str,
    training_stream: QueryStream | None,
    test_stream: QueryStream,
    *,
    x: int = 3,
    y: int = 5,
    z: int = 20,
    singleton_scope: str = "full",
):
    """Build a policy by name: none, features (X/Y/Z), or singleton oracle."""
    if name == "none":
        return AlwaysAdmit()
    if name == "features":
        counts = query_counts(training_stream) if training_stream else Counter()
        return feature_policy(counts, x=x, y=y, z=z)
    if name == "singleton":
        if singleton_scope == "full" and training_stream:
            events = list(training_stream.events) + list(test_stream.events)
        else:
            events = list(test_stream.events)
        return build_singleton_oracle(events)
    raise SimulationError(f"unknown admission policy {name!r}")


_WORKER_STATE: dict = {}


def _sweep_worker_init(training_stream, test_stream, topic_map, warmup):
    _WORKER_STATE["args"] = (training_stream, test_stream, topic_map, warmup)


def _sweep_worker_run(task):
    config, admission_name, xyz, singleton_scope = task
    training_stream, test_stream, topic_map, warmup = _WORKER_STATE["args"]
    policy = make_admission(
        admission_name, training_stream, test_stream,
        x=xyz[0], y=xyz[1], z=xyz[2], singleton_scope=singleton_scope,
    )
    report = run_simulation(
        config, training_stream, test_stream, topic_map, policy, warmup=warmup
    )
    return report


def run_sweep(
    grid: SweepGrid,
    training_stream: QueryStream | None,
    test_stream: QueryStream,
    topic_map: TopicMap | None = None,
    *,
    warmup: bool = True,
    jobs: int = 1,
    singleton_scope: str = "full",
    results_path: str | Path | None = None,
    gaps_path: str | Path | None = None,
    include_belady: bool = True,
) -> tuple[list[SimulationReport], list[GapReport]]:
    """Simulate every grid point; per (N, admission) compare bests vs Belady.

    Points are independent; with jobs > 1 they run in worker processes.
    Results are appended to the CSVs as they complete (deterministic order).
    """
    effective_scope = "full" if (warmup and singleton_scope == "full") else "test"
    tasks = []
    for admission_name in grid.admissions:
        for config in grid.configs():
            tasks.append((config, admission_name, (grid.x, grid.y, grid.z), effective_scope))

    results_writer = _CsvAppender(results_path, RESULTS_COLUMNS) if results_path else None
    reports: list[SimulationReport] = []
    try:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(
                max_workers=jobs,
                initializer=_sweep_worker_init,
                initargs=(training_stream, test_stream, topic_map, warmup),
            ) as pool:
                completed = pool.map(_sweep_worker_run, tasks, chunksize=4)
                for report in completed:
                    reports.append(report)
                    if results_writer:
                        results_writer.write(report.csv_row())
        else:
            _sweep_worker_init(training_stream, test_stream, topic_map, warmup)
            for task in tasks:
                report = _sweep_worker_run(task)
                reports.append(report)
                if results_writer:
                    results_writer.write(report.csv_row())
    finally:
        if results_writer:
            results_writer.close()

    gap_reports: list[GapReport] = []
    gap_rows: list[list] = []
    if include_belady:
        for admission_name in grid.admissions:
            for n in grid.sizes:
                # The clairvoyant bound composes only with the clairvoyant
                # singleton oracle; gating it by the heuristic feature filter
                # would not give an upper bound.
                bound_admission = "singleton" if admission_name == "singleton" else "none"
                policy = make_admission(
                    bound_admission, training_stream, test_stream,
                    singleton_scope=effective_scope,
                )
                belady = run_belady(test_stream, n, policy, training_stream=training_stream if warmup else None)
                here = [
                    r for r in reports
                    if r.config.total_entries == n and r.admission == admission_name
                ]
                best_sdc = _best_rate(here, ("SDC",))
                best_std = _best_rate(here, ("STD_LRU_FIXED", "STD_LRU_VAR", "STD_SDC_VAR_C1", "STD_SDC_VAR_C2"))
                if best_sdc is None or best_std is None:
                    continue
                gap = GapReport(belady_rate=belady.hit_rate, sdc_rate=best_sdc, std_rate=best_std)
                gap_reports.append(gap)
                gap_rows.append([
                    n, admission_name, f"{gap.belady_rate:.6f}", f"{gap.sdc_rate:.6f}",
                    f"{gap.std_rate:.6f}", f"{gap.gap_sdc:.6f}", f"{gap.gap_std:.6f}",
                    f"{gap.gap_std_vs_sdc:.6f}",
                    "" if gap.gap_reduction is None else f"{gap.gap_reduction:.6f}",
                ])
    if gaps_path:
        writer = _CsvAppender(gaps_path, GAP_COLUMNS)
        try:
            for row in gap_rows:
                writer.write(row)
        finally:
            writer.close()
    return reports, gap_reports


def _best_rate(reports: Iterable[SimulationReport], variants: tuple[str, ...]) -> float | None:
    # ties prefer the larger static fraction (cheaper to serve)
    best = None
    for r in reports:
        if r.config.variant in variants:
            key = (r.hit_rate, r.config.f_s)
            if best is None or key > best:
                best = key
    return best[0] if best else None


class _CsvAppender:
    """Streams rows to disk as they arrive; writes the header once."""

    def __init__(self, path: str | Path, columns: Sequence[str]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(columns)

    def write(self, row: Sequence) -> None:
        self._writer.writerow(row)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def write_missdist_csv(reports: Iterable[SimulationReport], path: str | Path) -> None:
    """variant,N,scope,topic_id,avg_miss_distance rows for traced reports."""
    writer = _CsvAppender(path, MISSDIST_COLUMNS)
    for r in reports:
        for topic_id, dist in r.per_topic_miss_distance.items():
            writer.write([r.config.variant, r.config.total_entries, "topic", topic_id, f"{dist:.6f}"])
        if r.dynamic_miss_distance is not None:
            writer.write([r.config.variant, r.config.total_entries, "dynamic", "", f"{r.dynamic_miss_distance:.6f}"])
    writer.close()
