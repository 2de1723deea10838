import csv
import json

import pytest

from stdcache.cli import ConfigError, main, parse_config

AOL_SAMPLE = (
    "AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n"
    "1\tWeather Report!\t2006-03-01 07:17:12\t1\thttp://w.example\n"
    "1\tWeather Report!\t2006-03-01 07:17:12\t2\thttp://w2.example\n"
    "2\tbank of america\t2006-03-01 08:00:00\t\t\n"
    "2\tweather report\t2006-03-02 09:10:11\t1\thttp://w.example\n"
    "3\tcheap flights\t2006-03-03 10:00:00\t\t\n"
)


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestIngest:
    def test_split_outputs_and_counts(self, tmp_path, capsys):
        src = tmp_path / "log.tsv"
        src.write_text(AOL_SAMPLE)
        out = tmp_path / "out"
        rc = run_cli("ingest", src, "--format", "aol", "--split", "0.7", "--out", out)
        assert rc == 0
        assert (out / "full.events").exists()
        assert (out / "train.events").exists() and (out / "test.events").exists()
        printed = capsys.readouterr().out
        assert "events: 4" in printed and "distinct queries: 3" in printed
        manifest = json.loads((out / "manifest.json").read_text())
        assert str(src) in manifest["input_hashes"]

    def test_bad_split_is_usage_error(self, tmp_path):
        src = tmp_path / "log.tsv"
        src.write_text(AOL_SAMPLE)
        rc = run_cli("ingest", src, "--format", "aol", "--split", "1.5", "--out", tmp_path / "o")
        assert rc == 2

    def test_rerun_byte_identical(self, tmp_path):
        src = tmp_path / "log.tsv"
        src.write_text(AOL_SAMPLE)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run_cli("ingest", src, "--format", "aol", "--split", "0.5", "--out", out1)
        run_cli("ingest", src, "--format", "aol", "--split", "0.5", "--out", out2)
        for name in ("full.events", "train.events", "test.events"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_missing_input_fails(self, tmp_path):
        rc = run_cli("ingest", tmp_path / "absent.tsv", "--out", tmp_path / "o")
        assert rc == 2


class TestSynth:
    def test_outputs_and_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            rc = run_cli(
                "synth", "--events", 500, "--vocab", 5000, "--zipf", "1.0",
                "--n-topics", 3, "--profile", "bursty", "--seed", 11,
                "--split", "0.7", "--out", out,
            )
            assert rc == 0
        assert (out1 / "full.events").read_bytes() == (out2 / "full.events").read_bytes()
        assert (out1 / "topic_map.tsv").read_bytes() == (out2 / "topic_map.tsv").read_bytes()


class TestTopicsCmd:
    def test_load_map_bypasses_training(self, tmp_path):
        src = tmp_path / "map.tsv"
        src.write_text("alpha\t0\nbeta\t1\n")
        out = tmp_path / "out"
        rc = run_cli("topics", "--load-map", src, "--out", out)
        assert rc == 0
        assert (out / "topic_map.tsv").read_text() == "alpha\t0\nbeta\t1\n"
        pop = dict(
            line.split("\t") for line in (out / "topic_popularity.tsv").read_text().splitlines()
        )
        assert pop == {"0": "1", "1": "1"}

    def test_synthetic_training_recovers_planting(self, tmp_path):
        out = tmp_path / "out"
        rc = run_cli(
            "topics", "--synthetic", 60, "--k", 2, "--alpha", "1.0",
            "--iterations", 150, "--seed", 5, "--out", out,
        )
        assert rc == 0
        rows = [line.split("\t") for line in (out / "topic_map.tsv").read_text().splitlines()]
        by_query = {q: int(t) for q, t in rows}
        # planted docs alternate topics by index; voting is 1:1 per document
        label0 = by_query["planted query 0"]
        label1 = by_query["planted query 1"]
        assert label0 != label1
        agree = sum(
            1
            for q, t in by_query.items()
            if t == (label0 if int(q.rsplit(" ", 1)[1]) % 2 == 0 else label1)
        )
        assert agree >= 0.95 * len(by_query)
        assert (out / "model.npz").exists() and (out / "model.json").exists()

    def test_same_seed_identical_map(self, tmp_path):
        outs = []
        for name in ("x", "y"):
            out = tmp_path / name
            run_cli("topics", "--synthetic", 30, "--k", 2, "--alpha", "1.0",
                    "--iterations", 40, "--seed", 9, "--out", out)
            outs.append((out / "topic_map.tsv").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_inputs_error(self, tmp_path):
        rc = run_cli("topics", "--out", tmp_path / "o")
        assert rc == 2


class TestConfigParsing:
    def test_unknown_keys_listed(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("sizes = 16\nmystery_knob = 3\nanother = x\n")
        with pytest.raises(ConfigError) as err:
            parse_config(cfg)
        assert "another" in str(err.value) and "mystery_knob" in str(err.value)

    def test_comments_and_blanks(self, tmp_path):
        cfg = tmp_path / "ok.cfg"
        cfg.write_text("# comment\n\nsizes = 16,32  # trailing\n")
        assert parse_config(cfg) == {"sizes": "16,32"}

    def test_malformed_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("sizes 16\n")
        with pytest.raises(ConfigError):
            parse_config(cfg)


def write_toy_inputs(tmp_path):
    """The 9-event toy stream with topic on `a`, as CLI inputs."""
    test_events = tmp_path / "test.events"
    test_events.write_text(
        "".join(f"{i}\t{q}\t\t\n" for i, q in enumerate("abcadeafg"))
    )
    topic_map = tmp_path / "map.tsv"
    topic_map.write_text("a\t0\n")
    return test_events, topic_map


class TestSimulateCmd:
    def test_toy_hit_rate_in_csv(self, tmp_path):
        test_events, topic_map = write_toy_inputs(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"test = {test_events}\n"
            f"topics = map\n"
            f"topic_map = {topic_map}\n"
            "sizes = 2\n"
            "variants = STD_LRU_VAR\n"
            "f_s = 0.0\n"
            "topic_share = 0.5\n"
            "warmup = false\n"
        )
        out = tmp_path / "out"
        rc = run_cli("simulate", "--config", cfg, "--out", out)
        assert rc == 0
        with (out / "results.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["hit_rate"] == "0.222222"
        assert rows[0]["hits"] == "2" and rows[0]["misses"] == "7"
        assert json.loads((out / "manifest.json").read_text())["config_hash"]

    def test_grid_row_count(self, tmp_path):
        test_events, topic_map = write_toy_inputs(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"test = {test_events}\n"
            f"topics = map\ntopic_map = {topic_map}\n"
            "sizes = 2\n"
            "variants = SDC,STD_LRU_VAR\n"
            "f_s = 0.0,0.5,0.9\n"
            "warmup = false\n"
        )
        out = tmp_path / "out"
        assert run_cli("simulate", "--config", cfg, "--out", out) == 0
        with (out / "results.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 6  # 2 variants x 3 f_s

    def test_unknown_variant_named_in_error(self, tmp_path, capsys):
        test_events, _ = write_toy_inputs(tmp_path)
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"test = {test_events}\nsizes = 2\nvariants = SDC,WOMBAT\n")
        rc = run_cli("simulate", "--config", cfg, "--out", tmp_path / "o")
        assert rc == 2
        assert "WOMBAT" in capsys.readouterr().err

    def test_synthetic_config_sweep_with_gaps(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "synthetic.events = 2000\n"
            "synthetic.vocab = 500\n"
            "synthetic.topics = 3\n"
            "synthetic.profile = bursty\n"
            "synthetic.burst_window = 100\n"
            "synthetic.burst_universe = 60\n"
            "synthetic.burst_offset = 20\n"
            "topics = planted\n"
            "split = 0.7\n"
            "sizes = 16,32\n"
            "variants = SDC,STD_SDC_VAR_C2\n"
            "f_s = 0.2,0.6\n"
        )
        out = tmp_path / "out"
        assert run_cli("sweep", "--config", cfg, "--out", out, "--seed", 4) == 0
        with (out / "results.csv").open() as fh:
            assert len(list(csv.DictReader(fh))) == 8
        with (out / "gaps.csv").open() as fh:
            gap_rows = list(csv.DictReader(fh))
        assert len(gap_rows) == 2
        for row in gap_rows:
            assert float(row["belady"]) >= float(row["best_sdc"])
            assert float(row["belady"]) >= float(row["best_std"])

    def test_same_seed_identical_outputs(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "synthetic.events = 1000\nsynthetic.vocab = 200\nsynthetic.topics = 2\n"
            "topics = planted\nsplit = 0.5\nsizes = 8\nvariants = SDC\nf_s = 0.5\n"
        )
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert run_cli("simulate", "--config", cfg, "--out", out, "--seed", 7) == 0
            outs.append((out / "results.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_stream_keys(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sizes = 8\n")
        assert run_cli("simulate", "--config", cfg, "--out", tmp_path / "o") == 2


class TestLdaPipelines:
    def write_corpus_inputs(self, tmp_path, n=24):
        """Events with clicks plus a texts TSV, two disjoint vocabularies."""
        words = {
            0: "storm snow forecast radar winter cold rain wind",
            1: "faculty campus graduate research student academic alumni college",
        }
        events, texts = [], {}
        for i in range(n):
            topic = i % 2
            url = f"syn://doc{i}"
            events.append(f"{i}\tsubject {i}\t{url}\t\n")
            texts[url] = words[topic]
        events_path = tmp_path / "train.events"
        events_path.write_text("".join(events))
        texts_path = tmp_path / "texts.tsv"
        texts_path.write_text("".join(f"{u}\t{t}\n" for u, t in texts.items()))
        return events_path, texts_path

    def test_topics_cmd_from_documents(self, tmp_path):
        events_path, texts_path = self.write_corpus_inputs(tmp_path)
        out = tmp_path / "out"
        rc = run_cli(
            "topics", "--events", events_path, "--doc-texts", texts_path,
            "--k", 2, "--alpha", "1.0", "--iterations", 100,
            "--min-doc-freq", 1, "--seed", 3, "--out", out,
        )
        assert rc == 0
        rows = [line.split("\t") for line in (out / "topic_map.tsv").read_text().splitlines()]
        by_query = {q: int(t) for q, t in rows}
        assert len(by_query) == 24
        evens = {by_query[f"subject {i}"] for i in range(0, 24, 2)}
        odds = {by_query[f"subject {i}"] for i in range(1, 24, 2)}
        assert len(evens) == 1 and len(odds) == 1 and evens != odds

    def test_simulate_with_inline_lda(self, tmp_path):
        events_path, texts_path = self.write_corpus_inputs(tmp_path)
        test_events = tmp_path / "test.events"
        test_events.write_text("".join(f"{100+i}\tsubject {i % 4}\t\t\n" for i in range(12)))
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"train = {events_path}\n"
            f"test = {test_events}\n"
            f"topics = lda\n"
            f"doc_texts = {texts_path}\n"
            "lda.k = 2\nlda.alpha = 1.0\nlda.iterations = 60\nlda.min_doc_freq = 1\n"
            "sizes = 4\nvariants = STD_LRU_VAR\nf_s = 0.0\n"
        )
        out = tmp_path / "out"
        assert run_cli("simulate", "--config", cfg, "--out", out, "--seed", 3) == 0
        with (out / "results.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert int(rows[0]["hits"]) > 0

    def test_simulate_missdist_csv(self, tmp_path):
        # a/c share a 1-entry topic section, b/d a 1-entry dynamic: every
        # query misses repeatedly, so both scopes produce distance rows
        test_events = tmp_path / "test.events"
        test_events.write_text(
            "".join(f"{i}\t{q}\t\t\n" for i, q in enumerate("abcd" * 3))
        )
        topic_map = tmp_path / "map.tsv"
        topic_map.write_text("a\t0\nc\t0\n")
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"test = {test_events}\ntopics = map\ntopic_map = {topic_map}\n"
            "sizes = 2\nvariants = STD_LRU_VAR\nf_s = 0.0\ntopic_share = 0.5\n"
            "warmup = false\nmissdist = true\n"
        )
        out = tmp_path / "out"
        assert run_cli("simulate", "--config", cfg, "--out", out) == 0
        assert (out / "missdist.csv").exists()
        with (out / "missdist.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert rows and {r["scope"] for r in rows} <= {"topic", "dynamic"}


def test_ingest_events_format_resplit(tmp_path):
    src = tmp_path / "in.events"
    src.write_text("".join(f"{i}\tq{i % 3}\t\t\n" for i in range(10)))
    out = tmp_path / "out"
    rc = run_cli("ingest", src, "--format", "events", "--split", "0.7", "--out", out)
    assert rc == 0
    train = (out / "train.events").read_text().splitlines()
    test = (out / "test.events").read_text().splitlines()
    assert len(train) == 7 and len(test) == 3
