import logging
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from stdcache.querylog import QueryEvent, QueryStream
from stdcache.topics.assign import (
    TopicMap,
    allocate_topic_entries,
    assign_query_topics,
    equal_allocation,
    load_topic_map,
    save_topic_map,
    topic_map_from_stream,
)
from stdcache.topics.corpus import Corpus, Document, build_corpus, tokenize


def make_stream(rows):
    """rows: (query, url_or_None) pairs."""
    return QueryStream(
        events=tuple(
            QueryEvent(query=q, timestamp=float(i), click_url=u) for i, (q, u) in enumerate(rows)
        )
    )


class TestTokenize:
    def test_normalizes_and_splits(self):
        assert tokenize("The Quick-Brown FOX!") == ["quick", "brown", "fox"]

    def test_stopwords_removed(self):
        assert tokenize("the of and weather") == ["weather"]

    def test_keep_stopwords_flag(self):
        assert tokenize("the fox", drop_stopwords=False) == ["the", "fox"]


class TestBuildCorpus:
    TEXTS = {
        "u1": "storm warning snow forecast radar winter cold",
        "u2": "students faculty campus graduate research programs",
        "u3": "tiny page",
    }

    def test_clicked_events_become_documents(self):
        stream = make_stream([("weather radar", "u1"), ("university", "u2"), ("no click", None)])
        corpus = build_corpus(stream, self.TEXTS)
        assert len(corpus) == 2
        assert corpus.n_skipped_no_text == 1

    def test_short_page_dropped(self):
        stream = make_stream([("q", "u3")])
        corpus = build_corpus(stream, self.TEXTS, min_tokens=5)
        assert len(corpus) == 0 and corpus.n_skipped_length == 1

    def test_duplicate_pairs_merge_clicks(self):
        stream = make_stream([("weather", "u1"), ("weather", "u1"), ("weather", "u2")])
        corpus = build_corpus(stream, self.TEXTS)
        # brute-force pair grouping: (weather,u1) twice, (weather,u2) once
        by_pair = {(d.source_query, d.click_url): d.click_count for d in corpus.documents}
        assert by_pair == {("weather", "u1"): 2, ("weather", "u2"): 1}

    def test_query_terms_appended(self):
        stream = make_stream([("weather radar", "u1")])
        corpus = build_corpus(stream, self.TEXTS)
        tokens = [corpus.index_to_token[i] for i in corpus.documents[0].tokens]
        assert tokens[-2:] == ["weather", "radar"]

    def test_missing_url_text_skipped(self):
        stream = make_stream([("q", "http://gone")])
        corpus = build_corpus(stream, self.TEXTS)
        assert len(corpus) == 0 and corpus.n_skipped_no_text == 1


def doc(doc_id, query, clicks):
    return Document(doc_id=doc_id, tokens=(), source_query=query, click_url=f"u{doc_id}", click_count=clicks)


def corpus_of(docs):
    return Corpus(documents=tuple(docs), vocabulary={}, index_to_token=())


class TestAssignQueryTopics:
    def test_most_clicked_wins(self):
        c = corpus_of([doc(0, "q", 5), doc(1, "q", 2)])
        tm = assign_query_topics(c, [(0, 0.9), (1, 0.9)])
        assert tm.assignments == {"q": 0}

    def test_below_threshold_casts_no_vote(self):
        c = corpus_of([doc(0, "q", 5)])
        tm = assign_query_topics(c, [(0, 0.05)], confidence_threshold=0.2)
        assert tm.assignments == {}
        assert tm.total_distinct_queries == 1

    def test_click_tie_goes_to_earlier_document(self):
        c = corpus_of([doc(0, "q", 3), doc(1, "q", 3)])
        tm = assign_query_topics(c, [(7, 0.9), (8, 0.9)])
        # brute-force vote tally: equal clicks, doc 0 seen first
        assert tm.assignments == {"q": 7}

    def test_popularity_counts_distinct_queries(self):
        c = corpus_of([doc(0, "a", 1), doc(1, "b", 1), doc(2, "c", 1)])
        tm = assign_query_topics(c, [(0, 0.9), (0, 0.9), (1, 0.9)])
        assert tm.popularity == {0: 2, 1: 1}

    def test_input_order_independent_except_tie_rule(self):
        docs = [doc(0, "a", 2), doc(1, "a", 9), doc(2, "b", 1)]
        topics = [(3, 0.9), (4, 0.9), (5, 0.9)]
        tm1 = assign_query_topics(corpus_of(docs), topics)
        order = [1, 2, 0]
        tm2 = assign_query_topics(
            corpus_of([docs[i] for i in order]), [topics[i] for i in order]
        )
        assert tm1.assignments == tm2.assignments == {"a": 4, "b": 5}


class TestAllocate:
    def test_worked_example(self):
        tm = TopicMap(assignments={}, popularity={0: 6, 1: 3}, total_distinct_queries=9)
        alloc = allocate_topic_entries(tm, 5)
        assert alloc.entries_per_topic == {0: 3, 1: 2}

    def test_zero_cache(self):
        tm = TopicMap(popularity={0: 4, 1: 2}, total_distinct_queries=6)
        alloc = allocate_topic_entries(tm, 0)
        assert alloc.entries_per_topic == {0: 0, 1: 0}

    def test_no_correction_needed(self):
        tm = TopicMap(popularity={0: 5, 1: 3, 2: 1}, total_distinct_queries=9)
        alloc = allocate_topic_entries(tm, 7)
        # naive rounds: 35/9=3.89->4, 21/9=2.33->2, 7/9=0.78->1, sum=7
        assert alloc.entries_per_topic == {0: 4, 1: 2, 2: 1}

    def test_half_rounds_to_even(self):
        tm = TopicMap(popularity={0: 1, 1: 1}, total_distinct_queries=2)
        alloc = allocate_topic_entries(tm, 1)
        # each share is exactly 1/2: both round to 0, correction adds one back
        assert sum(alloc.entries_per_topic.values()) == 1

    @given(
        st.dictionaries(st.integers(0, 20), st.integers(1, 50), min_size=1, max_size=12),
        st.integers(0, 200),
    )
    @settings(max_examples=300)
    def test_sum_exact_and_share_bound(self, popularity, size):
        tm = TopicMap(popularity=popularity, total_distinct_queries=sum(popularity.values()))
        alloc = allocate_topic_entries(tm, size)
        assert sum(alloc.entries_per_topic.values()) == size
        q = sum(popularity.values())
        for t, n in alloc.entries_per_topic.items():
            share = Fraction(size * popularity[t], q)
            assert abs(n - share) <= 1
            assert n >= 0


class TestEqualAllocation:
    def test_even_split(self):
        alloc = equal_allocation(range(5), 10)
        assert set(alloc.entries_per_topic.values()) == {2}

    def test_remainder_to_ascending_ids(self):
        alloc = equal_allocation([4, 2, 0, 1, 3], 11)
        assert [alloc.entries_per_topic[t] for t in (0, 1, 2, 3, 4)] == [3, 2, 2, 2, 2]
        assert sum(alloc.entries_per_topic.values()) == 11

    def test_fewer_entries_than_topics(self):
        alloc = equal_allocation(range(5), 3)
        assert [alloc.entries_per_topic[t] for t in range(5)] == [1, 1, 1, 0, 0]


class TestTopicMapIo:
    def test_roundtrip(self, tmp_path):
        tm = TopicMap(
            assignments={"alpha": 2, "beta": 0},
            popularity={2: 1, 0: 1},
            total_distinct_queries=2,
        )
        path = tmp_path / "map.tsv"
        save_topic_map(tm, path)
        back = load_topic_map(path)
        assert back.assignments == tm.assignments
        assert back.popularity == tm.popularity

    def test_duplicate_row_last_wins(self, tmp_path, caplog):
        path = tmp_path / "map.tsv"
        path.write_text("q\t1\nq\t2\n")
        with caplog.at_level(logging.WARNING):
            tm = load_topic_map(path)
        assert tm.assignments == {"q": 2}
        assert any("duplicate" in r.message for r in caplog.records)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "map.tsv"
        path.write_text("")
        tm = load_topic_map(path)
        assert tm.assignments == {}


def test_topic_map_from_stream_counts_distinct():
    stream = QueryStream(
        events=(
            QueryEvent("a", 0.0, topic=1),
            QueryEvent("a", 1.0, topic=1),
            QueryEvent("b", 2.0, topic=2),
            QueryEvent("c", 3.0, topic=None),
        )
    )
    tm = topic_map_from_stream(stream)
    assert tm.assignments == {"a": 1, "b": 2}
    assert tm.popularity == {1: 1, 2: 1}
    assert tm.total_distinct_queries == 3


class TestDocumentTextStore:
    def test_tsv_store(self, tmp_path):
        from stdcache.topics.corpus import load_document_texts

        path = tmp_path / "texts.tsv"
        path.write_text("http://a\tsome page text\nhttp://b\tanother page\n")
        texts = load_document_texts(path)
        assert texts == {"http://a": "some page text", "http://b": "another page"}

    def test_directory_store_roundtrip(self, tmp_path):
        from stdcache.topics.corpus import load_document_texts, save_document_texts

        original = {"http://x": "storm warning ahead", "http://y": "campus research news"}
        store = tmp_path / "docs"
        save_document_texts(original, store)
        assert len(list(store.glob("*.txt"))) == 2
        assert load_document_texts(store) == original


def test_subsample_corpus_deterministic():
    from stdcache.topics.corpus import make_planted_corpus, subsample_corpus

    corpus, _ = make_planted_corpus(50, 2, seed=1)
    a = subsample_corpus(corpus, 20, seed=3)
    b = subsample_corpus(corpus, 20, seed=3)
    assert len(a.documents) == 20
    assert [d.source_query for d in a.documents] == [d.source_query for d in b.documents]
    assert [d.doc_id for d in a.documents] == list(range(20))
    # order of the surviving documents is preserved
    originals = [d.source_query for d in corpus.documents]
    picked = [originals.index(d.source_query) for d in a.documents]
    assert picked == sorted(picked)
