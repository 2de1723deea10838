"""Topic learning and assignment: LDA over click-enriched query documents,
click-vote query labeling, and topic-cache entry allocation."""

from .assign import (
    TopicAllocation,
    TopicMap,
    allocate_topic_entries,
    assign_query_topics,
    equal_allocation,
    load_topic_map,
    save_topic_map,
    topic_map_from_stream,
)
from .corpus import Corpus, Document, build_corpus, load_document_texts, make_planted_corpus, tokenize
from .lda import COMPILED_KERNEL, LdaModel, infer_doc_topic, per_document_topics, train_lda

__all__ = [
    "TopicAllocation",
    "TopicMap",
    "allocate_topic_entries",
    "assign_query_topics",
    "equal_allocation",
    "load_topic_map",
    "save_topic_map",
    "topic_map_from_stream",
    "Corpus",
    "Document",
    "build_corpus",
    "load_document_texts",
    "make_planted_corpus",
    "tokenize",
    "COMPILED_KERNEL",
    "LdaModel",
    "infer_doc_topic",
    "per_document_topics",
    "train_lda",
]
