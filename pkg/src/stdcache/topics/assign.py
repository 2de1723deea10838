"""Query-to-topic assignment and topic-cache entry allocation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopicMap:
    """Query -> topic assignments plus per-topic distinct-query popularity."""

    assignments: dict[str, int] = field(default_factory=dict)
    popularity: dict[int, int] = field(default_factory=dict)
    total_distinct_queries: int = 0

    def __post_init__(self):
        assigned = sum(self.popularity.values())
        if assigned > self.total_distinct_queries:
            object.__setattr__(self, "total_distinct_queries", assigned)


@dataclass(frozen=True)
class TopicAllocation:
    """Entries per topic; sums exactly to the topic-cache size."""

    entries_per_topic: dict[int, int]
    topic_cache_size: int


def assign_query_topics(corpus, per_doc_topics, confidence_threshold: float = 0.2) -> TopicMap:
    """Vote one topic per query: the topic of its most-clicked document wins.

    ``per_doc_topics`` holds each document's (argmax topic, probability);
    documents below the confidence threshold cast no vote. Ties on clicks go
    to the earliest-seen document. Queries with no surviving vote stay
    unassigned but still count toward the distinct-query total.
    """
    best: dict[str, tuple[int, int, int]] = {}  # query -> (clicks, doc_id, topic)
    queries = set()
    for doc, (topic, prob) in zip(corpus.documents, per_doc_topics):
        queries.add(doc.source_query)
        if prob < confidence_threshold:
            continue
        cur = best.get(doc.source_query)
        if cur is None or doc.click_count > cur[0] or (doc.click_count == cur[0] and doc.doc_id < cur[1]):
            best[doc.source_query] = (doc.click_count, doc.doc_id, topic)

    assignments = {q: t for q, (_, _, t) in best.items()}
    popularity: dict[int, int] = {}
    for t in assignments.values():
        popularity[t] = popularity.get(t, 0) + 1
    return TopicMap(assignments=assignments, popularity=popularity, total_distinct_queries=len(queries))


def topic_map_from_stream(stream) -> TopicMap:
    """Topic map from events that already carry (planted) topics."""
    assignments: dict[str, int] = {}
    queries = set()
    for e in stream.events:
        queries.add(e.query)
        if e.topic is not None and e.query not in assignments:
            assignments[e.query] = e.topic
    popularity: dict[int, int] = {}
    for t in assignments.values():
        popularity[t] = popularity.get(t, 0) + 1
    return TopicMap(assignments=assignments, popularity=popularity, total_distinct_queries=len(queries))


def allocate_topic_entries(topic_map: TopicMap, topic_cache_size: int) -> TopicAllocation:
    """Proportional shares |T|*q_t/q rounded to nearest (ties to even), then
    corrected by fractional remainder so the total is exactly |T|.

    q counts distinct queries among classified queries only. Correction adds
    entries to the largest fractional remainders (or removes from the
    smallest) one per topic until the sum matches.
    """
    if topic_cache_size < 0:
        raise ValueError("topic_cache_size must be >= 0")
    popularity = topic_map.popularity
    q = sum(popularity.values())
    if not popularity or q == 0 or topic_cache_size == 0:
        return TopicAllocation(
            entries_per_topic={t: 0 for t in popularity},
            topic_cache_size=topic_cache_size if popularity else 0,
        )

    shares = {t: Fraction(topic_cache_size * q_t, q) for t, q_t in popularity.items()}
    entries = {t: round(share) for t, share in shares.items()}
    diff = topic_cache_size - sum(entries.values())
    if diff > 0:
        # grant to the most under-allocated topics (largest share remainder)
        order = sorted(shares, key=lambda t: (entries[t] - shares[t], t))
        for t in order[:diff]:
            entries[t] += 1
    elif diff < 0:
        order = sorted(
            (t for t in shares if entries[t] > 0),
            key=lambda t: (shares[t] - entries[t], t),
        )
        for t in order[: -diff]:
            entries[t] -= 1
    return TopicAllocation(entries_per_topic=entries, topic_cache_size=topic_cache_size)


def equal_allocation(topic_ids, topic_cache_size: int) -> TopicAllocation:
    """floor(|T|/k) each; the remainder goes one-each to ascending topic ids."""
    ids = sorted(topic_ids)
    if not ids:
        return TopicAllocation(entries_per_topic={}, topic_cache_size=0)
    if topic_cache_size < 0:
        raise ValueError("topic_cache_size must be >= 0")
    base, rem = divmod(topic_cache_size, len(ids))
    entries = {t: base + (1 if i < rem else 0) for i, t in enumerate(ids)}
    return TopicAllocation(entries_per_topic=entries, topic_cache_size=topic_cache_size)


def save_topic_map(topic_map: TopicMap, path: str | Path) -> None:
    """TSV ``query\\ttopic_id``, one row per assigned query."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for query in sorted(topic_map.assignments):
            fh.write(f"{query}\t{topic_map.assignments[query]}\n")


def load_topic_map(path: str | Path) -> TopicMap:
    """Read a topic-map TSV; duplicate query rows keep the last, with a warning."""
    assignments: dict[str, int] = {}
    duplicates = 0
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        query, _, topic = line.partition("\t")
        if query in assignments:
            duplicates += 1
        assignments[query] = int(topic)
    if duplicates:
        log.warning("topic map %s: %d duplicate query rows (last wins)", path, duplicates)
    popularity: dict[int, int] = {}
    for t in assignments.values():
        popularity[t] = popularity.get(t, 0) + 1
    return TopicMap(assignments=assignments, popularity=popularity, total_distinct_queries=len(assignments))
