"""CSV/TSV readers with column validation.

Input schemas are the simulator's external interfaces:
  results CSV: variant,N,f_s,...,hit_rate,...
  gaps CSV:    N,admission,belady,best_sdc,best_std,gap_sdc,gap_std,
               gap_std_vs_sdc,gap_reduction
  miss CSV:    variant,N,scope,topic_id,avg_miss_distance
  events TSV:  timestamp\tquery\tclick_url\ttopic (no header)
  popularity TSV: topic_id\tcount (no header)
"""

from __future__ import annotations

import csv
from collections import Counter
from pathlib import Path


class PlotError(ValueError):
    pass


def read_csv(path: str | Path, required: tuple[str, ...]) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise PlotError(f"input not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise PlotError(f"{path}: missing columns {', '.join(missing)}")
        return list(reader)


RESULTS_REQUIRED = ("variant", "N", "f_s", "hit_rate")
GAPS_REQUIRED = (
    "N", "admission", "belady", "best_sdc", "best_std",
    "gap_sdc", "gap_std", "gap_std_vs_sdc", "gap_reduction",
)
MISS_REQUIRED = ("variant", "N", "scope", "topic_id", "avg_miss_distance")


def read_results(path) -> list[dict]:
    rows = read_csv(path, RESULTS_REQUIRED)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def read_gaps(path) -> list[dict]:
    return read_csv(path, GAPS_REQUIRED)


def read_miss_distances(path) -> list[dict]:
    return read_csv(path, MISS_REQUIRED)


def read_query_frequencies(path: str | Path) -> list[int]:
    """Frequencies (descending) of queries in a normalized events TSV."""
    path = Path(path)
    if not path.exists():
        raise PlotError(f"input not found: {path}")
    counts: Counter = Counter()
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise PlotError(f"{path}: expected timestamp\\tquery\\t... rows")
        counts[parts[1]] += 1
    if not counts:
        raise PlotError(f"{path}: no events")
    return sorted(counts.values(), reverse=True)


def read_topic_popularity(path: str | Path) -> dict[int, int]:
    path = Path(path)
    if not path.exists():
        raise PlotError(f"input not found: {path}")
    popularity: dict[int, int] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        topic, _, count = line.partition("\t")
        try:
            popularity[int(topic)] = int(count)
        except ValueError as exc:
            raise PlotError(f"{path}: bad row {line!r}") from exc
    if not popularity:
        raise PlotError(f"{path}: no topics")
    return popularity
