"""Query-log ingestion: normalization, click dedup, splits, synthetic streams.

A stream is an immutable, time-ordered sequence of normalized query events.
Raw TSV logs (AOL- or MSN-style) are parsed into ``RawRecord``s, collapsed so
that multiple clicked results of one submission become a single event, and
normalized into a ``QueryStream``. A seeded Zipf generator produces synthetic
streams with planted topics for desk-scale experiments.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

_NON_ALNUM = re.compile(r"[^a-z0-9]+")

# Column orders for the two supported raw log layouts.
AOL_COLUMNS = ("AnonID", "Query", "QueryTime", "ItemRank", "ClickURL")
MSN_COLUMNS = ("Time", "Query", "QueryID", "SessionID", "ResultCount")

STREAM_FORMATS = ("aol", "msn", "events")


class QueryLogError(ValueError):
    """Raised for unusable inputs (bad format name, empty stream, bad split)."""


@dataclass(frozen=True, slots=True)
class RawRecord:
    """One raw log row; click_rank/click_url are both set or both absent."""

    user_id: str
    query_text: str
    timestamp: float
    click_rank: int | None = None
    click_url: str | None = None

    def __post_init__(self):
        if (self.click_rank is None) != (self.click_url is None):
            raise QueryLogError("click_rank and click_url must be set together")
        if self.timestamp < 0:
            raise QueryLogError("timestamp must be non-negative")


@dataclass(frozen=True, slots=True)
class QueryEvent:
    """A normalized query occurrence; topic is planted or assigned later."""

    query: str
    timestamp: float
    click_url: str | None = None
    topic: int | None = None


@dataclass(frozen=True)
class QueryStream:
    """Time-ordered (non-decreasing, stable) sequence of query events."""

    events: tuple[QueryEvent, ...]
    origin: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def queries(self) -> list[str]:
        return [e.query for e in self.events]


def normalize_query(raw: str) -> str:
    """Lowercase, map non-alphanumerics to spaces, collapse runs, trim.

    Returns "" when nothing alphanumeric survives; callers drop such events.
    Non-ASCII letters count as special characters and are removed.
    """
    return _NON_ALNUM.sub(" ", raw.lower()).strip()


def dedup_click_records(records: list[RawRecord]) -> list[RawRecord]:
    """Collapse consecutive records sharing (user, query, timestamp).

    A submission with several clicked results appears as several rows in the
    raw log; only the first row (first click) is kept. Input must be grouped
    by user and time-sorted within each user.
    """
    out: list[RawRecord] = []
    prev_key = None
    for rec in records:
        key = (rec.user_id, rec.query_text, rec.timestamp)
        if key != prev_key:
            out.append(rec)
            prev_key = key
    return out


def records_to_stream(records: list[RawRecord], origin: str = "full") -> QueryStream:
    """Normalize records into a time-sorted stream, dropping empty queries."""
    events = [
        QueryEvent(query=q, timestamp=rec.timestamp, click_url=rec.click_url)
        for rec in records
        if (q := normalize_query(rec.query_text))
    ]
    events.sort(key=lambda e: e.timestamp)  # stable: input order breaks ties
    return QueryStream(events=tuple(events), origin=origin)


def split_stream(stream: QueryStream, train_fraction: float) -> tuple[QueryStream, QueryStream]:
    """Split time-ordered events: first floor(fraction*n) train, rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise QueryLogError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not stream.events:
        raise QueryLogError("cannot split an empty stream")
    n_train = math.floor(train_fraction * len(stream.events))
    train = QueryStream(events=stream.events[:n_train], origin="training")
    test = QueryStream(events=stream.events[n_train:], origin="test")
    return train, test


def _parse_log_time(text: str) -> float:
    """'YYYY-MM-DD HH:MM:SS' (or ISO-ish) to epoch seconds, UTC."""
    dt = datetime.fromisoformat(text.strip())
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def load_tsv(
    path: str | Path,
    fmt: str,
    click_sidecar: str | Path | None = None,
) -> tuple[list[RawRecord], int]:
    """Parse a raw query-log TSV into records, skipping malformed rows.

    fmt "aol": AnonID\\tQuery\\tQueryTime\\tItemRank\\tClickURL (last two may
    be empty). fmt "msn": Time\\tQuery\\tQueryID\\tSessionID\\tResultCount,
    with an optional sidecar TSV ``QueryID\\tClickURL`` supplying clicks.
    Returns (records in file order, number of skipped rows).
    """
    path = Path(path)
    if fmt not in ("aol", "msn"):
        raise QueryLogError(f"unknown raw log format {fmt!r}; expected 'aol' or 'msn'")

    clicks: dict[str, str] = {}
    if click_sidecar is not None:
        for line in Path(click_sidecar).read_text().splitlines():
            parts = line.rstrip("\n").split("\t")
            if len(parts) >= 2 and parts[0]:
                clicks[parts[0]] = parts[1]

    records: list[RawRecord] = []
    skipped = 0
    with path.open(encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if lineno == 0 and _looks_like_header(parts, fmt):
                continue
            rec = _parse_row(parts, fmt, clicks)
            if rec is None:
                skipped += 1
            else:
                records.append(rec)
    return records, skipped


def _looks_like_header(parts: list[str], fmt: str) -> bool:
    expect = AOL_COLUMNS if fmt == "aol" else MSN_COLUMNS
    return [p.strip() for p in parts[: len(expect)]] == list(expect)


def _parse_row(parts: list[str], fmt: str, clicks: dict[str, str]) -> RawRecord | None:
    try:
        if fmt == "aol":
            if len(parts) < 3:
                return None
            user, query, qtime = parts[0], parts[1], parts[2]
            rank = parts[3] if len(parts) > 3 else ""
            url = parts[4] if len(parts) > 4 else ""
            has_click = bool(rank.strip()) and bool(url.strip())
            return RawRecord(
                user_id=user,
                query_text=query,
                timestamp=_parse_log_time(qtime),
                click_rank=int(rank) if has_click else None,
                click_url=url.strip() if has_click else None,
            )
        # msn: Time, Query, QueryID, SessionID, ResultCount
        if len(parts) < 4:
            return None
        qtime, query, query_id, session = parts[0], parts[1], parts[2], parts[3]
        url = clicks.get(query_id)
        return RawRecord(
            user_id=session,
            query_text=query,
            timestamp=_parse_log_time(qtime),
            click_rank=1 if url else None,
            click_url=url,
        )
    except (ValueError, QueryLogError):
        return None


def save_stream(stream: QueryStream, path: str | Path) -> None:
    """Write the normalized events format: timestamp\\tquery\\turl\\ttopic."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for e in stream.events:
            ts = int(e.timestamp) if float(e.timestamp).is_integer() else e.timestamp
            url = e.click_url or ""
            topic = "" if e.topic is None else str(e.topic)
            fh.write(f"{ts}\t{e.query}\t{url}\t{topic}\n")


def load_stream(path: str | Path, origin: str = "full") -> QueryStream:
    """Read the normalized events format written by save_stream."""
    events = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        parts = line.split("\t")
        try:
            ts = float(parts[0])
            query = parts[1]
            url = parts[2] if len(parts) > 2 and parts[2] else None
            topic = int(parts[3]) if len(parts) > 3 and parts[3] else None
        except (ValueError, IndexError) as exc:
            raise QueryLogError(f"{path}:{lineno}: bad events row {line!r}") from exc
        events.append(QueryEvent(query=query, timestamp=ts, click_url=url, topic=topic))
    return QueryStream(events=tuple(events), origin=origin)


def generate_synthetic_log(
    n_events: int,
    vocab_size: int,
    zipf_exponent: float,
    n_topics: int,
    profile: str = "uniform",
    seed: int = 0,
    *,
    burst_prob: float = 0.3,
    burst_window: int = 700,
    burst_hot: int = 10,
    burst_universe: int = 640,
    burst_drift: float = 0.5,
    burst_offset: int = 100,
    topic_coverage: float = 1.0,
) -> QueryStream:
    """Seeded Zipf query stream with planted topics.

    Query rank r (0-based) has weight (r+1)^-zipf_exponent.

    Profile "uniform" draws every event from the global Zipf and deals
    topics round-robin over the ranks, leaving a share of queries topic-less
    when topic_coverage < 1.

    Profile "bursty" plants topics with different temporal-locality
    patterns. Each topic owns ``burst_universe`` reserved mid-popularity
    ranks (starting at ``burst_offset``, interleaved so topic popularities
    are equal); background events draw from the remaining ranks and stay
    topic-less. The focus topic rotates every ``burst_window`` events; with
    probability ``burst_prob`` an event in the window cycles through the
    focus topic's active loop, whose length grows geometrically across
    topics from ``burst_hot`` up to ``burst_universe``. A topic's queries
    therefore recur at a topic-specific period: short-loop topics behave
    like recency-friendly bursts, long-loop ones revisit queries at
    intervals far beyond what a shared recency cache retains. After each
    full cycle a ``burst_drift`` fraction of the loop rotates to fresh
    members of the topic's reserved band, so individual queries stay
    individually rare while the topic's locality pattern persists. Reserved
    queries never reached by the rotation appear once, early in the stream,
    so training still observes every topic's full vocabulary.

    Each event carries a pseudo click URL so synthetic corpora can be built
    on top. Deterministic for a fixed parameter set and seed.
    """
    if n_events <= 0 or vocab_size <= 0 or n_topics <= 0:
        raise QueryLogError("n_events, vocab_size and n_topics must be positive")
    if zipf_exponent <= 0:
        raise QueryLogError("zipf_exponent must be > 0")
    if not 0.0 < topic_coverage <= 1.0:
        raise QueryLogError("topic_coverage must be in (0, 1]")
    if profile not in ("uniform", "bursty"):
        raise QueryLogError(f"unknown profile {profile!r}; expected 'uniform' or 'bursty'")

    rng = np.random.default_rng(seed)
    weights = np.arange(1, vocab_size + 1, dtype=np.float64) ** (-zipf_exponent)

    if profile == "uniform":
        # Round-robin over ceil(k/coverage) slots: slots >= n_topics are topic-less.
        n_slots = max(n_topics, int(round(n_topics / topic_coverage)))
        slot = np.arange(vocab_size, dtype=np.int64) % n_slots
        topics = np.where(slot < n_topics, slot, -1)
        cdf = np.cumsum(weights / weights.sum())
        ranks = _draw_ranks(rng, n_events, cdf)
    else:
        if burst_hot < 1 or burst_universe < burst_hot:
            raise QueryLogError("need 1 <= burst_hot <= burst_universe")
        n_reserved = n_topics * burst_universe
        if burst_offset + n_reserved > vocab_size:
            raise QueryLogError("vocab_size too small for the reserved topical band")
        reserved = burst_offset + np.arange(n_reserved)
        topics = np.full(vocab_size, -1, dtype=np.int64)
        topics[reserved] = np.arange(n_reserved) % n_topics
        # pool[t]: the topic's reserved ranks in popularity order
        pools = [reserved[np.arange(n_reserved) % n_topics == t] for t in range(n_topics)]
        if n_topics == 1:
            loops = [burst_hot]
        else:
            growth = (burst_universe / burst_hot) ** (1.0 / (n_topics - 1))
            loops = [min(burst_universe, max(1, round(burst_hot * growth**i))) for i in range(n_topics)]

        bg_weights = weights.copy()
        bg_weights[reserved] = 0.0
        bg_cdf = np.cumsum(bg_weights / bg_weights.sum())
        ranks = _draw_ranks(rng, n_events, bg_cdf)

        # Topical events pick a topic: every topic cycles its loop all the
        # time, the window's focus topic at a boosted rate (the burst).
        bursty = rng.random(n_events) < burst_prob
        focus = (np.arange(n_events) // burst_window) % n_topics
        boost = 3.0
        pick = rng.random(n_events)
        topic_of_event = np.full(n_events, -1, dtype=np.int64)
        total_w = n_topics - 1 + boost
        for f in range(n_topics):
            sel = bursty & (focus == f)
            if not sel.any():
                continue
            w = np.ones(n_topics)
            w[f] = boost
            cdf = np.cumsum(w / total_w)
            topic_of_event[sel] = np.searchsorted(cdf, pick[sel], side="right")
        np.minimum(topic_of_event, n_topics - 1, out=topic_of_event)
        for t in range(n_topics):
            sel = bursty & (topic_of_event == t)
            n_sel = int(sel.sum())
            if n_sel:
                loop = loops[t]
                shift = int(loop * burst_drift)
                pos = np.arange(n_sel)
                member = (pos % loop + (pos // loop) * shift) % burst_universe
                ranks[sel] = pools[t][member]

        # One early occurrence for every reserved query outside its loop, so
        # training still sees the whole topical vocabulary.
        idle_parts = [pools[t][loops[t]:] for t in range(n_topics) if loops[t] < burst_universe]
        if idle_parts:
            idle = np.concatenate(idle_parts)
            room = int(0.45 * n_events)
            if 0 < len(idle) <= room:
                slots = np.sort(rng.choice(room, size=len(idle), replace=False))
                ranks[slots] = idle

    width = max(5, len(str(vocab_size)))
    names = [f"q{r:0{width}d}" for r in range(vocab_size)]
    events = tuple(
        QueryEvent(
            query=names[r],
            timestamp=float(i),
            click_url=f"syn://{names[r]}",
            topic=int(topics[r]) if topics[r] >= 0 else None,
        )
        for i, r in enumerate(ranks)
    )
    return QueryStream(events=events, origin="full")


def _draw_ranks(rng: np.random.Generator, n: int, cdf: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return np.minimum(idx, len(cdf) - 1)


def strip_topics(stream: QueryStream) -> QueryStream:
    """Copy of the stream with every event's topic cleared."""
    events = tuple(replace(e, topic=None) for e in stream.events)
    return QueryStream(events=events, origin=stream.origin)
