"""Latent-topic model trained by collapsed Gibbs sampling.

The per-token sampling loop is the hot kernel: a compiled extension is used
when available, with a pure-Python twin selected at import time otherwise
(or when STDCACHE_PURE_PYTHON=1). Both produce identical results for a
given seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

if os.environ.get("STDCACHE_PURE_PYTHON"):
    from . import _gibbs_py as _kernel
else:
    try:
        from . import _gibbs as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _gibbs_py as _kernel

COMPILED_KERNEL: bool = _kernel.COMPILED

DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_MIN_DOC_FREQ = 5
DEFAULT_MAX_DOC_FRACTION = 0.5


class LdaError(ValueError):
    pass


@dataclass(frozen=True)
class LdaModel:
    """Count matrices from the final Gibbs state, plus the pruned vocabulary."""

    k: int
    alpha: float
    beta: float
    topic_word_counts: np.ndarray  # (k, V) int64
    topic_totals: np.ndarray  # (k,) int64
    vocabulary: dict[str, int]
    index_to_token: tuple[str, ...]
    doc_topic_counts: np.ndarray  # (D, k) int64, training documents
    iterations: int
    seed: int

    @property
    def vocab_size(self) -> int:
        return len(self.index_to_token)

    def doc_topic_distribution(self, d: int) -> np.ndarray:
        """Smoothed topic distribution of training document d."""
        counts = self.doc_topic_counts[d]
        length = int(counts.sum())
        return (counts + self.alpha) / (length + self.k * self.alpha)


class InferredTopics(NamedTuple):
    distribution: np.ndarray
    known_tokens: int
    flagged: bool  # True when no token was in the model vocabulary


def _prune_vocabulary(corpus, min_doc_freq: int, max_doc_fraction: float):
    n_docs = len(corpus.documents)
    df = np.zeros(len(corpus.index_to_token), dtype=np.int64)
    for doc in corpus.documents:
        for idx in set(doc.tokens):
            df[idx] += 1
    keep = [
        i
        for i in range(len(corpus.index_to_token))
        if df[i] >= min_doc_freq and df[i] <= max_doc_fraction * n_docs
    ]
    if not keep:
        raise LdaError("vocabulary is empty after pruning; relax the frequency bounds")
    remap = {old: new for new, old in enumerate(keep)}
    index_to_token = tuple(corpus.index_to_token[i] for i in keep)
    vocabulary = {tok: i for i, tok in enumerate(index_to_token)}
    return remap, vocabulary, index_to_token


def train_lda(
    corpus,
    k: int,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    min_doc_freq: int = DEFAULT_MIN_DOC_FREQ,
    max_doc_fraction: float = DEFAULT_MAX_DOC_FRACTION,
) -> LdaModel:
    """Collapsed Gibbs sampling from a seeded random initialization.

    alpha defaults to 50/k. Tokens appearing in fewer than ``min_doc_freq``
    documents or in more than ``max_doc_fraction`` of them are pruned before
    training. Deterministic for a fixed (corpus, parameters, seed).
    """
    if k < 1:
        raise LdaError("k must be >= 1")
    if iterations < 1:
        raise LdaError("iterations must be >= 1")
    if not corpus.documents:
        raise LdaError("corpus is empty")
    if alpha is None:
        alpha = 50.0 / k

    remap, vocabulary, index_to_token = _prune_vocabulary(corpus, min_doc_freq, max_doc_fraction)

    doc_tokens: list[list[int]] = [
        [remap[t] for t in doc.tokens if t in remap] for doc in corpus.documents
    ]
    n_docs = len(doc_tokens)
    doc_ptr = np.zeros(n_docs + 1, dtype=np.int64)
    doc_ptr[1:] = np.cumsum([len(ts) for ts in doc_tokens])
    tokens = np.fromiter(
        (t for ts in doc_tokens for t in ts), dtype=np.int32, count=int(doc_ptr[-1])
    )
    z = np.zeros(len(tokens), dtype=np.int32)
    n_tw = np.zeros((k, len(index_to_token)), dtype=np.int64)
    n_t = np.zeros(k, dtype=np.int64)
    n_dt = np.zeros((n_docs, k), dtype=np.int64)

    _kernel.gibbs_fit(
        doc_ptr, tokens, z, n_tw, n_t, n_dt,
        float(alpha), float(beta), int(iterations), int(seed) & (2**64 - 1),
        True, True,
    )
    return LdaModel(
        k=k,
        alpha=float(alpha),
        beta=float(beta),
        topic_word_counts=n_tw,
        topic_totals=n_t,
        vocabulary=vocabulary,
        index_to_token=index_to_token,
        doc_topic_counts=n_dt,
        iterations=iterations,
        seed=seed,
    )


def infer_doc_topic(
    model: LdaModel,
    tokens: Sequence[str],
    iterations: int = 50,
    seed: int = 0,
) -> InferredTopics:
    """Posterior topic distribution of a held-out token sequence.

    Gibbs sampling with the model's topic-word counts frozen; only the
    document-local counts move. Unknown tokens are skipped; with no known
    token the smoothing-only (uniform) distribution is returned, flagged.
    """
    ids = [model.vocabulary[t] for t in tokens if t in model.vocabulary]
    if not ids:
        return InferredTopics(np.full(model.k, 1.0 / model.k), 0, True)

    doc_ptr = np.array([0, len(ids)], dtype=np.int64)
    toks = np.array(ids, dtype=np.int32)
    z = np.zeros(len(ids), dtype=np.int32)
    n_dt = np.zeros((1, model.k), dtype=np.int64)
    _kernel.gibbs_fit(
        doc_ptr, toks, z, model.topic_word_counts, model.topic_totals, n_dt,
        model.alpha, model.beta, int(iterations), int(seed) & (2**64 - 1),
        False, True,
    )
    counts = n_dt[0]
    dist = (counts + model.alpha) / (len(ids) + model.k * model.alpha)
    return InferredTopics(dist, len(ids), False)


def per_document_topics(model: LdaModel) -> list[tuple[int, float]]:
    """(argmax topic, its probability) for every training document."""
    out = []
    for d in range(model.doc_topic_counts.shape[0]):
        dist = model.doc_topic_distribution(d)
        t = int(np.argmax(dist))
        out.append((t, float(dist[t])))
    return out


def save_model(model: LdaModel, path: str | Path) -> None:
    """Model dump: one .npz with counts plus a JSON sidecar of metadata."""
    path = Path(path)
    np.savez_compressed(
        path,
        topic_word_counts=model.topic_word_counts,
        topic_totals=model.topic_totals,
        doc_topic_counts=model.doc_topic_counts,
    )
    meta = {
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "iterations": model.iterations,
        "seed": model.seed,
        "index_to_token": list(model.index_to_token),
    }
    path.with_suffix(".json").write_text(json.dumps(meta), encoding="utf-8")


def load_model(path: str | Path) -> LdaModel:
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    arrays = np.load(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    index_to_token = tuple(meta["index_to_token"])
    return LdaModel(
        k=int(meta["k"]),
        alpha=float(meta["alpha"]),
        beta=float(meta["beta"]),
        topic_word_counts=arrays["topic_word_counts"],
        topic_totals=arrays["topic_totals"],
        vocabulary={tok: i for i, tok in enumerate(index_to_token)},
        index_to_token=index_to_token,
        doc_topic_counts=arrays["doc_topic_counts"],
        iterations=int(meta["iterations"]),
        seed=int(meta["seed"]),
    )
