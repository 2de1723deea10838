"""Admission policies: filters applied before a missed query may enter a cache.

Lookups are never blocked; only the insertion after a miss is. The feature
policy combines a stateful threshold (training frequency) with stateless
query-shape limits; the singleton oracle peeks at the full stream and only
admits queries that occur at least twice.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .caches import LookupOutcome


class AlwaysAdmit:
    """No filtering; the unguarded baseline."""

    name = "none"

    def admits(self, query: str) -> bool:
        return True


@dataclass(frozen=True)
class FeatureThresholdPolicy:
    """Admit iff train_freq >= min_train_freq, terms < max_terms, chars < max_chars.

    Term count is the whitespace-split length of the normalized query; the
    character count includes spaces. Boundaries are deliberately asymmetric
    (>= on frequency, strict < on the two lengths).
    """

    min_train_freq: int = 3
    max_terms: int = 5
    max_chars: int = 20
    train_freqs: Mapping[str, int] = field(default_factory=dict)

    name = "features"

    def __post_init__(self):
        if self.min_train_freq < 0 or self.max_terms < 1 or self.max_chars < 1:
            raise ValueError("thresholds must satisfy X >= 0, Y >= 1, Z >= 1")

    def admits(self, query: str) -> bool:
        if self.train_freqs.get(query, 0) < self.min_train_freq:
            return False
        if len(query.split()) >= self.max_terms:
            return False
        return len(query) < self.max_chars


@dataclass(frozen=True)
class SingletonOraclePolicy:
    """Clairvoyant filter: admit only queries seen at least twice in the stream."""

    admittable: frozenset

    name = "singleton"

    def admits(self, query: str) -> bool:
        return query in self.admittable


AdmissionPolicy = AlwaysAdmit | FeatureThresholdPolicy | SingletonOraclePolicy


def feature_policy(train_counts: Mapping[str, int], x: int = 3, y: int = 5, z: int = 20) -> FeatureThresholdPolicy:
    return FeatureThresholdPolicy(min_train_freq=x, max_terms=y, max_chars=z, train_freqs=dict(train_counts))


def build_singleton_oracle(queries: Iterable[str]) -> SingletonOraclePolicy:
    """Oracle over the exact stream to be replayed (queries or events)."""
    counts = Counter(q if isinstance(q, str) else q.query for q in queries)
    return SingletonOraclePolicy(admittable=frozenset(q for q, c in counts.items() if c >= 2))


def guarded_process(cache, policy, query: str, topic: int | None = None) -> LookupOutcome:
    """Process one query with insertion gated by the admission policy.

    A hit is returned regardless of the policy; a rejected miss leaves every
    cache section untouched and reports admitted=False.
    """
    admit = policy is None or policy.admits(query)
    return cache.process(query, topic=topic, admit=admit)
