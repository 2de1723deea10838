"""Trace-driven query-result cache simulator.

Implements a cache family where the space is split between a static set of
historically popular queries, per-topic LRU/SDC sections sized by topic
popularity, and a dynamic LRU, plus the classic baselines (LRU, SDC,
clairvoyant replacement) and admission policies. Topics come from an LDA
model over click-enriched query documents or from precomputed maps.
"""

__version__ = "0.1.0"
