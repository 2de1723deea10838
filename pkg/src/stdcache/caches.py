"""Cache policies behind one process-one-query interface.

Every policy consumes one query key per call and reports hit/miss, the layer
that served it (static set, a topic section, or the dynamic cache) and
whether a missed key actually entered the cache. Admission control is the
``admit`` flag: a rejected miss leaves all state untouched.

Policies: plain LRU, static-only, SDC (static + LRU), the topic-partitioned
STD family (fixed/variable LRU sections, SDC sections in two static-
population flavors), the topic-only variant where unclassified queries form
an extra section, and the clairvoyant farthest-next-use baseline.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter, OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .topics.assign import TopicAllocation, TopicMap, allocate_topic_entries, equal_allocation

INF = math.inf

# Section id for unclassified queries in the topic-only cache layout.
NO_TOPIC = -1

VARIANTS = (
    "SDC",
    "STD_LRU_FIXED",
    "STD_LRU_VAR",
    "STD_SDC_VAR_C1",
    "STD_SDC_VAR_C2",
    "T_SDC_VAR",
    "LRU_ONLY",
    "STATIC_ONLY",
    "BELADY",
)

STATIC, TOPIC, DYNAMIC = "static", "topic", "dynamic"


class CacheConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class LookupOutcome:
    """Result of processing one query: hit/miss, serving layer, admission."""

    hit: bool
    layer: str
    topic: int | None = None
    admitted: bool = False


def round_half_even(x: Fraction | float) -> int:
    """Nearest integer, ties to even; exact when given a Fraction."""
    return round(Fraction(x) if not isinstance(x, Fraction) else x)


@dataclass(frozen=True)
class CacheConfig:
    """Total size, partition fractions and variant selector.

    Derived sizes: |S| = round(f_s*N), |T| = round(f_t*N), |D| = N-|S|-|T|.
    Rounding is half-to-even. f_t_s is the static share inside each topic
    section (SDC-section variants only).
    """

    total_entries: int
    f_s: float = 0.0
    f_t: float = 0.0
    f_d: float = 1.0
    f_t_s: float = 0.0
    variant: str = "SDC"
    allocation: TopicAllocation | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise CacheConfigError(f"unknown variant {self.variant!r}")
        if self.total_entries < 1:
            raise CacheConfigError("total_entries must be positive")
        if abs(self.f_s + self.f_t + self.f_d - 1.0) > 1e-9:
            raise CacheConfigError(
                f"fractions must sum to 1, got {self.f_s}+{self.f_t}+{self.f_d}"
            )
        for name in ("f_s", "f_t", "f_d", "f_t_s"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise CacheConfigError(f"{name} must be in [0, 1], got {v}")
        if self.dynamic_size < 0:
            raise CacheConfigError("derived dynamic size is negative")

    @property
    def static_size(self) -> int:
        return round_half_even(Fraction(self.f_s).limit_denominator(10**9) * self.total_entries)

    @property
    def topic_size(self) -> int:
        return round_half_even(Fraction(self.f_t).limit_denominator(10**9) * self.total_entries)

    @property
    def dynamic_size(self) -> int:
        return self.total_entries - self.static_size - self.topic_size


class LruCache:
    """Least-recently-used cache over hashable keys; capacity 0 stores nothing."""

    __slots__ = ("capacity", "_entries")

    def __init__(self, capacity: int):
        if capacity < 0:
            raise CacheConfigError("capacity must be >= 0")
        self.capacity = capacity
        self._entries: OrderedDict = OrderedDict()

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def keys(self) -> list:
        """Residents from most to least recently used."""
        return list(reversed(self._entries))

    def process(self, key: Hashable, topic: int | None = None, admit: bool = True) -> LookupOutcome:
        entries = self._entries
        if key in entries:
            entries.move_to_end(key)
            return LookupOutcome(hit=True, layer=DYNAMIC)
        if not admit or self.capacity == 0:
            return LookupOutcome(hit=False, layer=DYNAMIC, admitted=False)
        entries[key] = None
        if len(entries) > self.capacity:
            entries.popitem(last=False)
        return LookupOutcome(hit=False, layer=DYNAMIC, admitted=True)


class StaticOnlyCache:
    """Frozen set of entries populated offline; nothing is ever admitted."""

    __slots__ = ("static",)

    def __init__(self, static: frozenset):
        self.static = static

    def __len__(self) -> int:
        return len(self.static)

    def process(self, key: Hashable, topic: int | None = None, admit: bool = True) -> LookupOutcome:
        if key in self.static:
            return LookupOutcome(hit=True, layer=STATIC)
        return LookupOutcome(hit=False, layer=STATIC, admitted=False)


class SdcCache:
    """Static set checked first, misses delegated to an LRU."""

    __slots__ = ("static", "lru")

    def __init__(self, static: frozenset, lru_capacity: int):
        self.static = static
        self.lru = LruCache(lru_capacity)

    def __len__(self) -> int:
        return len(self.static) + len(self.lru)

    def process(self, key: Hashable, topic: int | None = None, admit: bool = True) -> LookupOutcome:
        if key in self.static:
            return LookupOutcome(hit=True, layer=STATIC)
        return self.lru.process(key, admit=admit)


class StdCache:
    """Static set, per-topic sections, dynamic LRU; routing per topic.

    Lookup order: static set first; else the query's topic section when the
    query has a topic with a non-empty section; else the dynamic cache. A
    topical query whose section does not exist is routed to the dynamic
    cache (tracked by the caller via the outcome layer).
    """

    __slots__ = ("static", "sections", "dynamic")

    def __init__(self, static: frozenset, sections: dict[int, SdcCache | LruCache], dynamic: LruCache):
        self.static = static
        self.sections = sections
        self.dynamic = dynamic

    def process(self, key: Hashable, topic: int | None = None, admit: bool = True) -> LookupOutcome:
        if key in self.static:
            return LookupOutcome(hit=True, layer=STATIC)
        if topic is not None:
            section = self.sections.get(topic)
            if section is not None:
                inner = section.process(key, admit=admit)
                return LookupOutcome(hit=inner.hit, layer=TOPIC, topic=topic, admitted=inner.admitted)
        return self.dynamic.process(key, admit=admit)


class TsdcCache:
    """Topic-only layout: every query goes to exactly one SDC section.

    Unclassified queries (and topics with zero allocated entries) route to
    the extra section keyed NO_TOPIC. A missing extra section behaves as a
    zero-capacity cache.
    """

    __slots__ = ("sections",)

    def __init__(self, sections: dict[int, SdcCache]):
        if NO_TOPIC not in sections:
            sections = dict(sections)
            sections[NO_TOPIC] = SdcCache(frozenset(), 0)
        self.sections = sections

    def process(self, key: Hashable, topic: int | None = None, admit: bool = True) -> LookupOutcome:
        section_id = topic if topic is not None and topic in self.sections else NO_TOPIC
        inner = self.sections[section_id].process(key, admit=admit)
        return LookupOutcome(hit=inner.hit, layer=TOPIC, topic=section_id, admitted=inner.admitted)


@dataclass(frozen=True)
class FutureIndex:
    """next_use[i] = position of the next occurrence of stream[i], or inf."""

    next_use: tuple
    length: int


def build_future_index(keys: Sequence[Hashable]) -> FutureIndex:
    """Single backward pass; O(n) time, O(distinct) extra space."""
    n = len(keys)
    nxt: list = [INF] * n
    last_seen: dict = {}
    for i in range(n - 1, -1, -1):
        k = keys[i]
        if k in last_seen:
            nxt[i] = last_seen[k]
        last_seen[k] = i
    return FutureIndex(next_use=tuple(nxt), length=n)


# Eviction keys must order "never used again" residents above every finite
# next use, and break ties among them by least recent use. Finite keys are
# the next-use position itself (< length); infinite ones map to
# 2*length - access_position, so older accesses sort higher.
class BeladyCache:
    """Clairvoyant replacement: evict the resident reused farthest ahead.

    Built over the exact stream to be replayed; each process() call consumes
    one stream position. Missed keys are inserted even when never reused
    (replacement only; admission is composed externally via ``admit``).
    For small capacities eviction scans the residents; larger caches use a
    lazy max-heap.
    """

    _SCAN_MAX = 8

    __slots__ = ("capacity", "_future", "_n", "_pos", "_resident", "_heap", "_use_heap")

    def __init__(self, capacity: int, future: FutureIndex):
        if capacity < 0:
            raise CacheConfigError("capacity must be >= 0")
        self.capacity = capacity
        self._future = future.next_use
        self._n = future.length
        self._pos = 0
        self._resident: dict = {}
        self._heap: list = []
        self._use_heap = capacity > self._SCAN_MAX

    def _order_key(self, next_use: float, pos: int) -> float:
        if next_use == INF:
            return 2 * self._n - pos
        return next_use

    def _step(self, key: Hashable, admit: bool = True) -> bool:
        pos = self._pos
        if pos >= self._n:
            raise IndexError("processed more events than the future index covers")
        self._pos = pos + 1
        resident = self._resident
        order = self._order_key(self._future[pos], pos)
        if key in resident:
            resident[key] = order
            if self._use_heap:
                heapq.heappush(self._heap, (-order, key))
            return True
        if not admit or self.capacity == 0:
            return False
        if len(resident) >= self.capacity:
            if self._use_heap:
                while True:
                    neg, victim = heapq.heappop(self._heap)
                    if resident.get(victim) == -neg:
                        break
                del resident[victim]
            else:
                victim = max(resident, key=resident.get)
                del resident[victim]
        resident[key] = order
        if self._use_heap:
            heapq.heappush(self._heap, (-order, key))
        return False

    def process(self, key: Hashable, topic: int | None = None, admit: bool = True) -> LookupOutcome:
        hit = self._step(key, admit)
        admitted = not hit and admit and self.capacity > 0
        return LookupOutcome(hit=hit, layer=DYNAMIC, admitted=admitted)

    def replay(self, keys: Iterable[Hashable], admits: Iterable[bool] | None = None) -> tuple[int, int]:
        """Run a whole stream; returns (hits, misses)."""
        hits = 0
        n = 0
        if admits is None:
            for k in keys:
                hits += self._step(k)
                n += 1
        else:
            for k, a in zip(keys, admits):
                hits += self._step(k, a)
                n += 1
        return hits, n - hits


def query_counts(stream) -> Counter:
    """Frequency of each normalized query in a stream."""
    return Counter(e.query for e in stream.events)


def _top_queries(counts: Mapping[str, int], size: int, pool: Iterable[str] | None = None) -> list[str]:
    items = counts.items() if pool is None else ((q, counts[q]) for q in pool if q in counts)
    ranked = sorted(items, key=lambda kv: (-kv[1], kv[0]))
    return [q for q, _ in ranked[:size]]


def populate_static(counts_or_stream, size: int) -> frozenset:
    """Top ``size`` queries by training frequency; ties break lexicographically."""
    counts = counts_or_stream if isinstance(counts_or_stream, Mapping) else query_counts(counts_or_stream)
    if size <= 0:
        return frozenset()
    return frozenset(_top_queries(counts, size))


def section_sizes(allocation: TopicAllocation, f_t_s: float) -> dict[int, tuple[int, int]]:
    """Per-topic (static, lru) sizes for SDC sections: static = round(f_t_s*n)."""
    out = {}
    frac = Fraction(f_t_s).limit_denominator(10**9)
    for topic_id, n in allocation.entries_per_topic.items():
        if n <= 0:
            continue
        s = round_half_even(frac * n)
        out[topic_id] = (s, n - s)
    return out


def populate_std_statics(
    variant: str,
    counts_or_stream,
    topic_map: TopicMap,
    global_size: int,
    static_per_section: Mapping[int, int],
) -> tuple[frozenset, dict[int, frozenset]]:
    """Fill the global static set and per-section statics for SDC sections.

    C1: the global set takes only top no-topic queries; each section's static
    takes that topic's top queries. C2: the global set takes top queries
    regardless of topic; section statics take the topic's next-most-frequent
    queries not already held globally.
    """
    if variant not in ("STD_SDC_VAR_C1", "STD_SDC_VAR_C2"):
        raise CacheConfigError(f"populate_std_statics expects an SDC-section variant, got {variant}")
    counts = counts_or_stream if isinstance(counts_or_stream, Mapping) else query_counts(counts_or_stream)
    assignments = topic_map.assignments

    if variant == "STD_SDC_VAR_C1":
        no_topic_pool = [q for q in counts if q not in assignments]
        global_static = frozenset(_top_queries(counts, global_size, no_topic_pool))
    else:
        global_static = frozenset(_top_queries(counts, global_size))

    by_topic: dict[int, list[str]] = {}
    for q in counts:
        t = assignments.get(q)
        if t is not None:
            by_topic.setdefault(t, []).append(q)

    section_statics: dict[int, frozenset] = {}
    for topic_id, s_size in static_per_section.items():
        if s_size <= 0:
            section_statics[topic_id] = frozenset()
            continue
        pool = by_topic.get(topic_id, [])
        if variant == "STD_SDC_VAR_C2":
            pool = [q for q in pool if q not in global_static]
        section_statics[topic_id] = frozenset(_top_queries(counts, s_size, pool))
    return global_static, section_statics


def build_topic_sections(
    variant: str,
    allocation: TopicAllocation,
    f_t_s: float = 0.0,
    section_statics: Mapping[int, frozenset] | None = None,
) -> dict[int, SdcCache | LruCache]:
    """Instantiate per-topic sections; zero-entry topics get no section."""
    sections: dict[int, SdcCache | LruCache] = {}
    if variant in ("STD_LRU_FIXED", "STD_LRU_VAR"):
        for topic_id, n in allocation.entries_per_topic.items():
            if n > 0:
                sections[topic_id] = LruCache(n)
        return sections
    if variant in ("STD_SDC_VAR_C1", "STD_SDC_VAR_C2", "T_SDC_VAR"):
        sizes = section_sizes(allocation, f_t_s)
        statics = section_statics or {}
        for topic_id, (s_size, lru_size) in sizes.items():
            static = statics.get(topic_id, frozenset())
            sections[topic_id] = SdcCache(static, lru_size)
        return sections
    raise CacheConfigError(f"variant {variant} has no topic sections")


def build_cache(
    config: CacheConfig,
    counts: Mapping[str, int] | None = None,
    topic_map: TopicMap | None = None,
):
    """Assemble a ready-to-run cache instance from a config.

    ``counts`` are training-stream query frequencies (used for static
    population); ``topic_map`` supplies assignments and topic popularity for
    section allocation. BELADY is excluded: it needs the future index of the
    exact replay stream (see simulator.run_belady).
    """
    counts = counts or {}
    topic_map = topic_map or TopicMap()
    variant = config.variant
    n = config.total_entries

    if variant == "BELADY":
        raise CacheConfigError("BELADY caches are built from a future index, not a config")
    if variant == "LRU_ONLY":
        return LruCache(n)
    if variant == "STATIC_ONLY":
        return StaticOnlyCache(populate_static(counts, n))
    if variant == "SDC":
        s = config.static_size
        return SdcCache(populate_static(counts, s), n - s)

    if variant == "T_SDC_VAR":
        alloc = config.allocation or _tsdc_allocation(counts, topic_map, n)
        sizes = section_sizes(alloc, config.f_t_s)
        statics = _tsdc_statics(counts, topic_map, sizes)
        return TsdcCache(build_topic_sections(variant, alloc, config.f_t_s, statics))

    # STD family
    s_size, t_size, d_size = config.static_size, config.topic_size, config.dynamic_size
    if config.allocation is not None:
        alloc = config.allocation
    elif variant == "STD_LRU_FIXED":
        alloc = equal_allocation(sorted(topic_map.popularity), t_size)
    else:
        alloc = allocate_topic_entries(topic_map, t_size)

    if variant in ("STD_SDC_VAR_C1", "STD_SDC_VAR_C2"):
        per_section = {t: s for t, (s, _) in section_sizes(alloc, config.f_t_s).items()}
        global_static, sec_statics = populate_std_statics(variant, counts, topic_map, s_size, per_section)
        sections = build_topic_sections(variant, alloc, config.f_t_s, sec_statics)
    else:
        global_static = populate_static(counts, s_size)
        sections = build_topic_sections(variant, alloc)
    return StdCache(global_static, sections, LruCache(d_size))


def _tsdc_allocation(counts: Mapping[str, int], topic_map: TopicMap, total: int) -> TopicAllocation:
    """Popularity allocation with no-topic distinct queries as an extra topic."""
    popularity = dict(topic_map.popularity)
    n_assigned = sum(popularity.values())
    n_no_topic = max(len({q for q in counts if q not in topic_map.assignments}),
                     topic_map.total_distinct_queries - n_assigned)
    popularity[NO_TOPIC] = n_no_topic
    extended = TopicMap(
        assignments=topic_map.assignments,
        popularity=popularity,
        total_distinct_queries=n_assigned + n_no_topic,
    )
    return allocate_topic_entries(extended, total)


def _tsdc_statics(
    counts: Mapping[str, int],
    topic_map: TopicMap,
    sizes: Mapping[int, tuple[int, int]],
) -> dict[int, frozenset]:
    assignments = topic_map.assignments
    by_section: dict[int, list[str]] = {}
    for q in counts:
        by_section.setdefault(assignments.get(q, NO_TOPIC), []).append(q)
    statics = {}
    for section_id, (s_size, _) in sizes.items():
        pool = by_section.get(section_id, [])
        statics[section_id] = frozenset(_top_queries(counts, s_size, pool)) if s_size > 0 else frozenset()
    return statics
