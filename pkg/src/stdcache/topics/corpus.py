"""Click-enriched query documents: one document per (query, clicked-url) pair.

Document text is the clicked page's tokens with the query's own terms
appended. Queries without a resolvable click are dropped from the corpus;
pages outside the length bounds are dropped before enrichment.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..querylog import QueryStream, normalize_query

log = logging.getLogger(__name__)

# Function words removed from document text; queries are appended verbatim
# (post-normalization) so even stop-wordy queries keep their terms.
STOPWORDS = frozenset(
    """a about above after again against all am an and any are as at be because
    been before being below between both but by can could did do does doing down
    during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more most
    my myself no nor not now of off on once only or other our ours ourselves
    out over own same she should so some such than that the their theirs them
    themselves then there these they this those through to too under until up
    very was we were what when where which while who whom why will with would
    you your yours yourself yourselves""".split()
)

DEFAULT_MIN_TOKENS = 5
DEFAULT_MAX_TOKENS = 100_000


def tokenize(text: str, drop_stopwords: bool = True) -> list[str]:
    """Query-style normalization, whitespace split, stop-word filtering."""
    words = normalize_query(text).split()
    if drop_stopwords:
        return [w for w in words if w not in STOPWORDS]
    return words


@dataclass(frozen=True)
class Document:
    """One (query, clicked-url) pair; tokens are indices into the corpus vocabulary."""

    doc_id: int
    tokens: tuple[int, ...]
    source_query: str
    click_url: str
    click_count: int = 1


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    vocabulary: dict[str, int]
    index_to_token: tuple[str, ...]
    n_skipped_no_text: int = 0
    n_skipped_length: int = 0

    def __len__(self):
        return len(self.documents)


def build_corpus(
    training_stream: QueryStream,
    document_texts: Mapping[str, str | Sequence[str]],
    min_tokens: int = DEFAULT_MIN_TOKENS,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> Corpus:
    """Group clicked events into documents and index their tokens.

    The length bounds apply to the page text before the query terms are
    appended. Duplicate (query, url) pairs merge into one document whose
    click_count is the number of occurrences. Events without a click, or
    whose URL has no text, are counted and skipped.
    """
    pair_clicks: dict[tuple[str, str], int] = {}
    order: list[tuple[str, str]] = []
    skipped_no_text = 0
    for event in training_stream.events:
        if not event.click_url or event.click_url not in document_texts:
            skipped_no_text += 1
            continue
        pair = (event.query, event.click_url)
        if pair not in pair_clicks:
            order.append(pair)
            pair_clicks[pair] = 0
        pair_clicks[pair] += 1

    vocabulary: dict[str, int] = {}
    index_to_token: list[str] = []
    documents: list[Document] = []
    skipped_length = 0

    def index_of(token: str) -> int:
        idx = vocabulary.get(token)
        if idx is None:
            idx = len(index_to_token)
            vocabulary[token] = idx
            index_to_token.append(token)
        return idx

    for query, url in order:
        raw = document_texts[url]
        text_tokens = tokenize(raw) if isinstance(raw, str) else list(raw)
        if not min_tokens <= len(text_tokens) <= max_tokens:
            skipped_length += 1
            continue
        all_tokens = text_tokens + query.split()
        documents.append(
            Document(
                doc_id=len(documents),
                tokens=tuple(index_of(t) for t in all_tokens),
                source_query=query,
                click_url=url,
                click_count=pair_clicks[(query, url)],
            )
        )

    if skipped_no_text or skipped_length:
        log.info(
            "corpus: %d documents, %d events without text, %d pages outside [%d, %d] tokens",
            len(documents), skipped_no_text, skipped_length, min_tokens, max_tokens,
        )
    return Corpus(
        documents=tuple(documents),
        vocabulary=vocabulary,
        index_to_token=tuple(index_to_token),
        n_skipped_no_text=skipped_no_text,
        n_skipped_length=skipped_length,
    )


def load_document_texts(path: str | Path) -> dict[str, str]:
    """URL -> text store: a TSV ``url\\ttext`` or a directory of <sha1>.txt files.

    Directory entries are keyed by the sha1 hex digest of the URL; the first
    line of each file must repeat the URL, the rest is the text.
    """
    path = Path(path)
    texts: dict[str, str] = {}
    if path.is_dir():
        for item in sorted(path.glob("*.txt")):
            content = item.read_text(encoding="utf-8")
            url, _, body = content.partition("\n")
            texts[url.strip()] = body
        return texts
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        url, _, text = line.partition("\t")
        texts[url] = text
    return texts


def save_document_texts(texts: Mapping[str, str], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for url, text in texts.items():
        name = hashlib.sha1(url.encode("utf-8")).hexdigest()
        (directory / f"{name}.txt").write_text(f"{url}\n{text}", encoding="utf-8")


def subsample_corpus(corpus: Corpus, n_documents: int, seed: int = 0) -> Corpus:
    """Seeded uniform subsample (without replacement), preserving doc order."""
    if n_documents >= len(corpus.documents):
        return corpus
    rng = np.random.default_rng(seed)
    keep = sorted(rng.choice(len(corpus.documents), size=n_documents, replace=False).tolist())
    docs = tuple(
        Document(
            doc_id=i,
            tokens=corpus.documents[j].tokens,
            source_query=corpus.documents[j].source_query,
            click_url=corpus.documents[j].click_url,
            click_count=corpus.documents[j].click_count,
        )
        for i, j in enumerate(keep)
    )
    return Corpus(
        documents=docs,
        vocabulary=corpus.vocabulary,
        index_to_token=corpus.index_to_token,
        n_skipped_no_text=corpus.n_skipped_no_text,
        n_skipped_length=corpus.n_skipped_length,
    )


def make_planted_corpus(
    n_docs: int,
    n_topics: int,
    words_per_topic: int = 20,
    doc_length: int = 12,
    seed: int = 0,
) -> tuple[Corpus, list[int]]:
    """Synthetic corpus with disjoint per-topic vocabularies.

    Document d draws all its tokens from topic (d mod n_topics)'s word set;
    returns the corpus and the planted topic per document. Queries are
    distinct per document so click voting is exercised 1:1.
    """
    rng = np.random.default_rng(seed)
    vocabulary: dict[str, int] = {}
    index_to_token: list[str] = []
    for t in range(n_topics):
        for w in range(words_per_topic):
            token = f"t{t}w{w}"
            vocabulary[token] = len(index_to_token)
            index_to_token.append(token)

    documents = []
    planted = []
    for d in range(n_docs):
        topic = d % n_topics
        base = topic * words_per_topic
        token_ids = rng.integers(0, words_per_topic, size=doc_length) + base
        documents.append(
            Document(
                doc_id=d,
                tokens=tuple(int(x) for x in token_ids),
                source_query=f"planted query {d}",
                click_url=f"syn://planted/{d}",
                click_count=1,
            )
        )
        planted.append(topic)
    corpus = Corpus(documents=tuple(documents), vocabulary=vocabulary, index_to_token=tuple(index_to_token))
    return corpus, planted
