"""Command-line front door: ingest, synth, topics, simulate, sweep.

Configuration is a flat ``key = value`` text file plus flag overrides; all
randomness flows from one --seed. Every run writes a manifest (config and
input hashes, seed, version, wall time) next to its outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .caches import VARIANTS
from .querylog import (
    QueryLogError,
    QueryStream,
    dedup_click_records,
    generate_synthetic_log,
    load_stream,
    load_tsv,
    records_to_stream,
    save_stream,
    split_stream,
    strip_topics,
)
from .simulator import SimulationError, SweepGrid, run_sweep, write_missdist_csv
from .topics import (
    assign_query_topics,
    build_corpus,
    load_document_texts,
    load_topic_map,
    make_planted_corpus,
    per_document_topics,
    save_topic_map,
    topic_map_from_stream,
    train_lda,
)
from .topics.assign import TopicMap
from .topics.lda import save_model


class ConfigError(ValueError):
    pass


CONFIG_KEYS = {
    "train", "test", "events", "split",
    "synthetic.events", "synthetic.vocab", "synthetic.zipf", "synthetic.topics",
    "synthetic.profile", "synthetic.burst_prob", "synthetic.burst_window",
    "synthetic.burst_hot", "synthetic.burst_universe", "synthetic.burst_offset",
    "synthetic.coverage",
    "topics", "topic_map",
    "doc_texts", "lda.k", "lda.alpha", "lda.beta", "lda.iterations",
    "lda.min_doc_freq", "lda.max_doc_fraction", "lda.confidence",
    "sizes", "variants", "f_s", "topic_share", "f_t_s",
    "admission", "admission.x", "admission.y", "admission.z",
    "warmup", "belady", "singleton_scope", "missdist", "seed",
}


def parse_config(path: str | Path) -> dict[str, str]:
    """Flat key = value file; '#' starts a comment. Unknown keys are fatal."""
    values: dict[str, str] = {}
    unknown: list[str] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line (expected key = value): {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            unknown.append(key)
        values[key] = value
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return values


def _parse_floats(text: str) -> tuple[float, ...]:
    """Comma list '0.1,0.2' or range 'start:stop:step' (stop inclusive)."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        out = []
        v = start
        while v <= stop + 1e-9:
            out.append(round(v, 10))
            v += step
        return tuple(out)
    return tuple(float(x) for x in text.split(","))


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Manifest:
    def __init__(self, seed: int | None):
        self.data = {
            "tool_version": __version__,
            "seed": seed,
            "config_hash": None,
            "input_hashes": {},
            "started_at": time.time(),
            "finished_at": None,
        }

    def add_config(self, path: str | Path):
        self.data["config_hash"] = _sha256(Path(path))

    def add_input(self, path: str | Path):
        p = Path(path)
        self.data["input_hashes"][str(p)] = _sha256(p)

    def write(self, out_dir: Path):
        self.data["finished_at"] = time.time()
        (out_dir / "manifest.json").write_text(json.dumps(self.data, indent=2), encoding="utf-8")


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(args.seed)

    if args.format == "events":
        stream = load_stream(args.input)
    else:
        records, skipped = load_tsv(args.input, args.format, click_sidecar=args.clicks)
        records.sort(key=lambda r: (r.user_id, r.timestamp))
        records = dedup_click_records(records)
        stream = records_to_stream(records)
        if skipped:
            print(f"skipped {skipped} malformed rows", file=sys.stderr)
    manifest.add_input(args.input)

    distinct = len(set(e.query for e in stream.events))
    print(f"events: {len(stream.events)}  distinct queries: {distinct}")
    save_stream(stream, out / "full.events")
    if args.split is not None:
        train, test = split_stream(stream, args.split)
        save_stream(train, out / "train.events")
        save_stream(test, out / "test.events")
        print(f"train: {len(train.events)}  test: {len(test.events)}")
    manifest.write(out)
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(args.seed)
    stream = generate_synthetic_log(
        args.events, args.vocab, args.zipf, args.n_topics,
        profile=args.profile, seed=args.seed,
        burst_prob=args.burst_prob, burst_window=args.burst_window,
    )
    save_stream(stream, out / "full.events")
    print(f"events: {len(stream.events)}  distinct queries: {len(set(e.query for e in stream.events))}")
    if args.split is not None:
        train, test = split_stream(stream, args.split)
        save_stream(train, out / "train.events")
        save_stream(test, out / "test.events")
        save_topic_map(topic_map_from_stream(train), out / "topic_map.tsv")
    else:
        save_topic_map(topic_map_from_stream(stream), out / "topic_map.tsv")
    manifest.write(out)
    return 0


def cmd_topics(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(args.seed)

    if args.load_map:
        topic_map = load_topic_map(args.load_map)
        manifest.add_input(args.load_map)
    else:
        if args.synthetic:
            corpus, _planted = make_planted_corpus(args.synthetic, args.k, seed=args.seed)
            min_doc_freq = 1
        else:
            if not args.events or not args.doc_texts:
                print("error: --events and --doc-texts are required without --load-map/--synthetic", file=sys.stderr)
                return 2
            stream = load_stream(args.events, origin="training")
            texts = load_document_texts(args.doc_texts)
            corpus = build_corpus(stream, texts)
            min_doc_freq = args.min_doc_freq
            manifest.add_input(args.events)
            manifest.add_input(args.doc_texts)
        if not corpus.documents:
            print("error: corpus is empty (no events with resolvable clicked documents)", file=sys.stderr)
            return 2
        model = train_lda(
            corpus, args.k, alpha=args.alpha, beta=args.beta,
            iterations=args.iterations, seed=args.seed,
            min_doc_freq=min_doc_freq, max_doc_fraction=args.max_doc_fraction,
        )
        topic_map = assign_query_topics(corpus, per_document_topics(model), args.confidence)
        save_model(model, out / "model.npz")

    save_topic_map(topic_map, out / "topic_map.tsv")
    with (out / "topic_popularity.tsv").open("w", encoding="utf-8") as fh:
        for topic_id in sorted(topic_map.popularity):
            fh.write(f"{topic_id}\t{topic_map.popularity[topic_id]}\n")
    print(
        f"assigned {len(topic_map.assignments)} of {topic_map.total_distinct_queries} "
        f"distinct queries across {len(topic_map.popularity)} topics"
    )
    manifest.write(out)
    return 0


def _load_streams(cfg: dict[str, str], seed: int) -> tuple[QueryStream | None, QueryStream]:
    if "synthetic.events" in cfg:
        stream = generate_synthetic_log(
            int(cfg["synthetic.events"]),
            int(cfg.get("synthetic.vocab", "10000")),
            float(cfg.get("synthetic.zipf", "1.0")),
            int(cfg.get("synthetic.topics", "10")),
            profile=cfg.get("synthetic.profile", "uniform"),
            seed=int(cfg.get("seed", seed)),
            burst_prob=float(cfg.get("synthetic.burst_prob", "0.3")),
            burst_window=int(cfg.get("synthetic.burst_window", "700")),
            burst_hot=int(cfg.get("synthetic.burst_hot", "10")),
            burst_universe=int(cfg.get("synthetic.burst_universe", "640")),
            burst_offset=int(cfg.get("synthetic.burst_offset", "100")),
            topic_coverage=float(cfg.get("synthetic.coverage", "1.0")),
        )
        split = float(cfg.get("split", "0.7"))
        return split_stream(stream, split)
    if "events" in cfg:
        stream = load_stream(cfg["events"])
        if "split" in cfg:
            return split_stream(stream, float(cfg["split"]))
        return None, stream
    train = load_stream(cfg["train"], origin="training") if "train" in cfg else None
    if "test" not in cfg:
        raise ConfigError("config must name a test stream ('test'), 'events', or synthetic.* keys")
    return train, load_stream(cfg["test"], origin="test")


def _strip_topics(stream: QueryStream | None) -> QueryStream | None:
    return strip_topics(stream) if stream is not None else None


def _resolve_topic_map(cfg, args, train, manifest) -> tuple[TopicMap | None, QueryStream | None]:
    mode = args.topics or cfg.get("topics", "none")
    if mode == "none":
        return None, None
    if mode == "planted":
        if train is None:
            raise ConfigError("topics = planted needs a training stream")
        return topic_map_from_stream(train), None
    if mode == "map":
        path = args.topic_map or cfg.get("topic_map")
        if not path:
            raise ConfigError("topics = map needs topic_map = <path>")
        manifest.add_input(path)
        return load_topic_map(path), None
    if mode == "lda":
        if train is None or "doc_texts" not in cfg:
            raise ConfigError("topics = lda needs a training stream and doc_texts = <path>")
        texts = load_document_texts(cfg["doc_texts"])
        manifest.add_input(cfg["doc_texts"])
        corpus = build_corpus(train, texts)
        k = int(cfg.get("lda.k", "500"))
        model = train_lda(
            corpus,
            k,
            alpha=float(cfg["lda.alpha"]) if "lda.alpha" in cfg else None,
            beta=float(cfg.get("lda.beta", "0.01")),
            iterations=int(cfg.get("lda.iterations", "1000")),
            seed=args.seed,
            min_doc_freq=int(cfg.get("lda.min_doc_freq", "5")),
            max_doc_fraction=float(cfg.get("lda.max_doc_fraction", "0.5")),
        )
        tm = assign_query_topics(corpus, per_document_topics(model), float(cfg.get("lda.confidence", "0.2")))
        return tm, None
    raise ConfigError(f"unknown topics mode {mode!r}; expected none, planted, map, or lda")


def _grid_from_config(cfg: dict[str, str], args) -> SweepGrid:
    if "sizes" not in cfg:
        raise ConfigError("config must set sizes = <comma-separated cache sizes>")
    variants = tuple(v.strip() for v in cfg.get("variants", "SDC,STD_SDC_VAR_C2").split(","))
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; known: {', '.join(VARIANTS)}")
    admission = args.admission or cfg.get("admission", "none")
    if admission not in ("none", "features", "singleton"):
        raise ConfigError(f"unknown admission policy {admission!r}")
    return SweepGrid(
        sizes=_parse_ints(cfg["sizes"]),
        f_s_values=_parse_floats(cfg.get("f_s", "0.0:0.9:0.1")),
        topic_share=_parse_floats(cfg.get("topic_share", "0.8")),
        f_t_s_values=_parse_floats(cfg.get("f_t_s", "0.4")),
        variants=variants,
        admissions=(admission,),
        x=args.x if args.x is not None else int(cfg.get("admission.x", "3")),
        y=args.y if args.y is not None else int(cfg.get("admission.y", "5")),
        z=args.z if args.z is not None else int(cfg.get("admission.z", "20")),
    )


def _run_grid(args, include_belady: bool) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(args.seed)
    cfg = parse_config(args.config)
    manifest.add_config(args.config)
    for key in ("train", "test", "events"):
        if key in cfg:
            manifest.add_input(cfg[key])

    train, test = _load_streams(cfg, args.seed)
    topic_map, _ = _resolve_topic_map(cfg, args, train, manifest)
    if (args.topics or cfg.get("topics", "none")) == "none":
        train, test = _strip_topics(train), _strip_topics(test)

    grid = _grid_from_config(cfg, args)
    warmup = _parse_bool(cfg.get("warmup", "true"))
    belady = include_belady if "belady" not in cfg else _parse_bool(cfg["belady"])

    reports, gaps = run_sweep(
        grid, train, test, topic_map,
        warmup=warmup,
        jobs=args.jobs,
        singleton_scope=cfg.get("singleton_scope", "full"),
        results_path=out / "results.csv",
        gaps_path=(out / "gaps.csv") if belady else None,
        include_belady=belady,
    )
    if _parse_bool(cfg.get("missdist", "false")):
        from .simulator import make_admission, run_simulation

        traced = []
        for config in grid.configs():
            policy = make_admission(grid.admissions[0], train, test, x=grid.x, y=grid.y, z=grid.z)
            traced.append(run_simulation(config, train, test, topic_map, policy, warmup=warmup, record_trace=True))
        write_missdist_csv(traced, out / "missdist.csv")

    print(f"{len(reports)} grid points -> {out / 'results.csv'}")
    if gaps:
        print(f"{len(gaps)} gap rows -> {out / 'gaps.csv'}")
    manifest.write(out)
    return 0


def cmd_simulate(args) -> int:
    return _run_grid(args, include_belady=False)


def cmd_sweep(args) -> int:
    return _run_grid(args, include_belady=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stdcache", description=__doc__)
    parser.add_argument("--version", action="version", version=f"stdcache {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a raw query log and split it")
    p.add_argument("input")
    p.add_argument("--format", choices=("aol", "msn", "events"), default="aol")
    p.add_argument("--clicks", help="MSN click sidecar TSV (QueryID\\tClickURL)")
    p.add_argument("--split", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic Zipf stream with planted topics")
    p.add_argument("--events", type=int, required=True)
    p.add_argument("--vocab", type=int, default=10000)
    p.add_argument("--zipf", type=float, default=1.0)
    p.add_argument("--n-topics", type=int, default=10)
    p.add_argument("--profile", choices=("uniform", "bursty"), default="uniform")
    p.add_argument("--burst-prob", type=float, default=0.6)
    p.add_argument("--burst-window", type=int, default=500)
    p.add_argument("--split", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("topics", help="train topics or load a precomputed map")
    p.add_argument("--events", help="training events file (with doc texts)")
    p.add_argument("--doc-texts", help="url\\ttext TSV or directory of <sha1>.txt")
    p.add_argument("--load-map", help="bypass training; use this topic-map TSV")
    p.add_argument("--synthetic", type=int, default=0, help="train on N planted documents instead")
    p.add_argument("--k", type=int, default=500)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--min-doc-freq", type=int, default=5)
    p.add_argument("--max-doc-fraction", type=float, default=0.5)
    p.add_argument("--confidence", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_topics)

    for name, func, help_text in (
        ("simulate", cmd_simulate, "run the configured grid points"),
        ("sweep", cmd_sweep, "run the grid and compare bests against the clairvoyant bound"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        p.add_argument("--topics", choices=("none", "planted", "map", "lda"), default=None)
        p.add_argument("--topic-map", default=None)
        p.add_argument("--admission", choices=("none", "features", "singleton"), default=None)
        p.add_argument("--x", type=int, default=None)
        p.add_argument("--y", type=int, default=None)
        p.add_argument("--z", type=int, default=None)
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, QueryLogError, SimulationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
