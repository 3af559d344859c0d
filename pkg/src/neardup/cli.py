"""Command-line interface.

Subcommands cover each pipeline stage (synth, shingle, minhash, pairs,
embed-search, cluster, eval, tune) plus whole-run orchestration (run,
bench). Every subcommand reads and writes only the documented file
formats: corpus JSONL, edge TSV, MHSG signatures, EMBD embeddings,
clustering TSV, and JSON/CSV reports.

Exit codes: 0 success, 1 usage or config error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback

import numpy as np

from ._version import __version__
from .corpus import gold_clustering_labels, load_corpus, shingle_corpus, write_corpus
from .errors import DataError, InternalError, UsageError
from .evalkit import evaluate, report_table, report_to_json, write_curve
from .embedspace import (
    RangeSearchConfig,
    knn_truncation_report,
    load_embeddings,
    range_search,
)
from .graph import (
    Clustering,
    build_graph,
    connected_components,
    load_clustering,
    louvain,
    write_clustering,
)
from .overlap import (
    InvertedIndex,
    candidate_pairs,
    load_edges,
    score_edges,
    write_edges,
)
from .sketch import (
    BandingConfig,
    banded_lsh,
    collision_lsh,
    load_signatures,
    minhash_corpus,
    write_signatures,
)
from . import pipeline as pl
from . import synthgen


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; our contract reserves 2 for data
    # errors, so route parse failures through UsageError (exit 1).
    def error(self, message):
        raise UsageError(message)


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False))


def _add_seed(p) -> None:
    p.add_argument("--seed", type=int, default=0, help="hash/RNG seed (default 0)")


# ---------------------------------------------------------------- synth

def _cmd_synth(args) -> int:
    if args.preset == "ocr-heavy":
        noise = synthgen.OCR_HEAVY
    else:
        noise = synthgen.NoiseModel()
    overrides = {}
    for name in (
        "char_sub_rate",
        "char_del_rate",
        "char_ins_rate",
        "word_drop_rate",
        "abridge_prob",
    ):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        base = {
            "char_sub_rate": noise.char_sub_rate,
            "char_del_rate": noise.char_del_rate,
            "char_ins_rate": noise.char_ins_rate,
            "word_drop_rate": noise.word_drop_rate,
            "abridge_prob": noise.abridge_prob,
            "abridge_keep_frac_range": noise.abridge_keep_frac_range,
            "severity_range": noise.severity_range,
        }
        base.update(overrides)
        noise = synthgen.NoiseModel(**base)
    dist = synthgen.reproduction_distribution(
        mean_reproduced=args.mean_reproduced,
        singleton_frac=args.singleton_frac,
        max_count=args.max_count,
    )
    cfg = synthgen.GeneratorConfig(
        n_sources=args.n_sources,
        reproduction_count_distribution=dist,
        words_per_article_range=(args.words_min, args.words_max),
        seed=args.seed,
    )
    docs = synthgen.generate(cfg, noise)
    write_corpus(docs, args.out)
    if args.noise_report:
        report = synthgen.noise_report(docs, seed=args.seed)
        payload = {
            "version": __version__,
            "n_duplicate_pairs": report.n_duplicate_pairs,
            "empty": report.empty,
            "mean_overlap": {str(k): v for k, v in report.mean_overlap.items()},
            "zero_shared_fraction": {
                str(k): v for k, v in report.zero_shared_fraction.items()
            },
        }
        with open(args.noise_report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"wrote {len(docs)} documents to {args.out}", file=sys.stderr)
    return 0


# -------------------------------------------------------------- shingle

def _cmd_shingle(args) -> int:
    docs = load_corpus(args.input)
    sets = shingle_corpus(docs, n=args.n, seed=args.seed)
    counts = np.array([s.count for s in sets], dtype=np.int64)
    payload = {
        "version": __version__,
        "documents": len(docs),
        "shingle_n": args.n,
        "seed": args.seed,
        "total_shingles": int(counts.sum()),
        "mean_shingles_per_doc": float(counts.mean()) if len(counts) else 0.0,
        "max_shingles_per_doc": int(counts.max()) if len(counts) else 0,
        "empty_documents": int((counts == 0).sum()),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        _print_json(payload)
    return 0


# -------------------------------------------------------------- minhash

def _cmd_minhash(args) -> int:
    docs = load_corpus(args.input)
    sets = shingle_corpus(docs, n=args.n, seed=args.seed)
    sigs = minhash_corpus(sets, k=args.k, seed=args.seed)
    write_signatures(sigs, args.out)
    print(f"wrote {len(sigs)} signatures (k={args.k}) to {args.out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- pairs

def _cmd_pairs(args) -> int:
    if args.method == "ngram_overlap":
        docs = load_corpus(args.input)
        sets = shingle_corpus(docs, n=args.n, seed=args.seed)
        index = InvertedIndex.build(sets)
        cap = None if args.no_cap else args.hot_shingle_cap
        cands = candidate_pairs(index, hot_shingle_cap=cap)
        edges = score_edges(cands, sets, metric=args.metric, threshold=args.threshold)
    elif args.method in ("lsh_collision", "lsh_banded"):
        if not args.signatures:
            raise UsageError(f"method {args.method} needs --signatures")
        sigs = load_signatures(args.signatures)
        if args.method == "lsh_collision":
            edges = collision_lsh(sigs, min_collisions=args.min_collisions)
        else:
            edges = banded_lsh(sigs, BandingConfig(bands=args.bands, rows=args.rows))
    else:
        raise UsageError(f"unknown pairs method {args.method!r}")
    write_edges(edges, args.out)
    print(f"wrote {len(edges)} edges to {args.out}", file=sys.stderr)
    return 0


# --------------------------------------------------------- embed-search

def _cmd_embed_search(args) -> int:
    matrix = load_embeddings(args.embeddings)
    cfg = RangeSearchConfig(
        similarity_threshold=args.tau, knn_k=args.knn_k, mode=args.mode
    )
    edges = range_search(matrix, cfg, threads=args.threads)
    write_edges(edges, args.out)
    if args.truncation_report:
        if cfg.mode != "knn_then_filter":
            raise UsageError("--truncation-report needs --mode knn_then_filter")
        report = knn_truncation_report(matrix, cfg, threads=args.threads)
        with open(args.truncation_report, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "version": __version__,
                    "count": report.count,
                    "doc_ids": list(report.doc_ids),
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
    print(f"wrote {len(edges)} edges to {args.out}", file=sys.stderr)
    return 0


# -------------------------------------------------------------- cluster

def _cmd_cluster(args) -> int:
    docs = load_corpus(args.input)
    edges = load_edges(args.edges)
    graph = build_graph([d.id for d in docs], edges, weighted=args.use_weights)
    if args.clustering == "louvain":
        clustering = louvain(
            graph, resolution=args.resolution, seed=args.seed, use_weights=args.use_weights
        )
    else:
        clustering = connected_components(graph)
    write_clustering(clustering, args.out)
    n_clusters = len(clustering.clusters())
    print(f"wrote {n_clusters} clusters to {args.out}", file=sys.stderr)
    return 0


# ----------------------------------------------------------------- eval

def _cmd_eval(args) -> int:
    pred = load_clustering(args.pred, method_tag=args.method_tag)
    if args.gold:
        gold = load_clustering(args.gold, method_tag="gold")
    elif args.input:
        docs = load_corpus(args.input)
        if not any(d.gold_cluster is not None for d in docs):
            raise DataError(f"corpus {args.input} has no gold_cluster labels")
        gold = Clustering(assignment=gold_clustering_labels(docs), method_tag="gold")
    else:
        raise UsageError("eval needs --gold or --input with gold labels")
    report = evaluate(pred, gold)
    print(report_table(report, method_tag=args.method_tag))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report, method_tag=args.method_tag, seed=args.seed))
            fh.write("\n")
    return 0


# ----------------------------------------------------------------- tune

def _parse_grid(args) -> list:
    if args.grid_values:
        return [float(v) for v in args.grid_values.split(",") if v.strip()]
    if args.grid:
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise UsageError("--grid must be lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise UsageError(f"bad grid range {args.grid!r}")
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 12) for i in range(count) if lo + i * step <= hi + 1e-12]
    raise UsageError("tune needs --grid or --grid-values")


def _cmd_tune(args) -> int:
    grid = _parse_grid(args)
    if args.method == "lsh_collision":
        grid = [int(v) for v in grid]
    spec = pl.PipelineSpec(
        method=args.method,
        input=args.input,
        embeddings=args.embeddings,
        seed=args.seed,
        threads=args.threads,
        shingle_n=args.n,
        minhash_k=args.k,
        bands=args.bands,
        rows=args.rows,
        metric=args.metric,
        clustering=args.clustering,
        resolution=args.resolution,
        knn_k=args.knn_k,
    )
    best, curve = pl.tune(spec, grid, threads=args.threads)
    if args.curve:
        write_curve(curve, args.curve)
    best_ari = max(ari for _, ari in curve)
    _print_json(
        {
            "version": __version__,
            "method": args.method,
            "best_threshold": best,
            "best_ari": best_ari,
            "grid_points": len(curve),
        }
    )
    return 0


# ------------------------------------------------------------ run/bench

_SPEC_OVERRIDES = (
    ("method", str),
    ("input", str),
    ("embeddings", str),
    ("output_dir", str),
    ("seed", int),
    ("threads", int),
    ("shingle_n", int),
    ("minhash_k", int),
    ("bands", int),
    ("rows", int),
    ("min_collisions", int),
    ("metric", str),
    ("threshold", float),
    ("tau", float),
    ("knn_k", int),
    ("search_mode", str),
    ("clustering", str),
    ("resolution", float),
)


def _spec_from_args(args) -> pl.PipelineSpec:
    raw = {}
    if args.config:
        raw = pl.load_spec(args.config).to_dict()
    for name, _ in _SPEC_OVERRIDES:
        value = getattr(args, name)
        if value is not None:
            raw[name] = value
    if args.evaluate is not None:
        raw["evaluate"] = args.evaluate
    return pl.PipelineSpec.from_dict(raw)


def _add_spec_flags(p) -> None:
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--method", choices=pl.METHODS)
    p.add_argument("--input", help="corpus JSONL")
    p.add_argument("--embeddings", help="embedding file for embed_cluster/rerank")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--shingle-n", dest="shingle_n", type=int)
    p.add_argument("--minhash-k", dest="minhash_k", type=int)
    p.add_argument("--bands", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--min-collisions", dest="min_collisions", type=int)
    p.add_argument("--metric", choices=("overlap_min", "jaccard"))
    p.add_argument("--threshold", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--knn-k", dest="knn_k", type=int)
    p.add_argument("--search-mode", dest="search_mode", choices=("exact_range", "knn_then_filter"))
    p.add_argument("--clustering", choices=pl.CLUSTERINGS)
    p.add_argument("--resolution", type=float)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--evaluate", dest="evaluate", action="store_true", default=None)
    group.add_argument("--no-evaluate", dest="evaluate", action="store_false")


def _cmd_run(args) -> int:
    spec = _spec_from_args(args)
    result = pl.run(spec)
    _print_json(result.manifest)
    return 0


def _cmd_bench(args) -> int:
    spec = _spec_from_args(args)
    report = pl.bench(spec)
    _print_json(report)
    return 0


# ----------------------------------------------------------------- main

def build_parser() -> _Parser:
    parser = _Parser(prog="neardup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"neardup {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-sources", type=int, default=1000)
    p.add_argument("--preset", choices=("clean", "ocr-heavy"), default="ocr-heavy")
    p.add_argument("--mean-reproduced", type=float, default=6.3)
    p.add_argument("--singleton-frac", type=float, default=0.83)
    p.add_argument("--max-count", type=int, default=synthgen.MAX_REPRODUCTIONS)
    p.add_argument("--words-min", type=int, default=60)
    p.add_argument("--words-max", type=int, default=350)
    for name in ("char-sub-rate", "char-del-rate", "char-ins-rate", "word-drop-rate", "abridge-prob"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float, default=None)
    p.add_argument("--noise-report", help="write duplicate-overlap statistics JSON here")
    _add_seed(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("shingle", help="shingle a corpus and report statistics")
    p.add_argument("--input", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--out", help="write the stats JSON here instead of stdout")
    _add_seed(p)
    p.set_defaults(func=_cmd_shingle)

    p = sub.add_parser("minhash", help="write MinHash signatures for a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=3)
    _add_seed(p)
    p.set_defaults(func=_cmd_minhash)

    p = sub.add_parser("pairs", help="emit scored candidate-pair edges")
    p.add_argument("--method", choices=("ngram_overlap", "lsh_collision", "lsh_banded"), default="ngram_overlap")
    p.add_argument("--input", help="corpus JSONL (ngram_overlap)")
    p.add_argument("--signatures", help="MHSG file (lsh methods)")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--metric", choices=("overlap_min", "jaccard"), default="overlap_min")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--hot-shingle-cap", type=int, default=10_000)
    p.add_argument("--no-cap", action="store_true", help="disable the hot-shingle cap")
    p.add_argument("--min-collisions", type=int, default=1)
    p.add_argument("--bands", type=int, default=15)
    p.add_argument("--rows", type=int, default=2)
    _add_seed(p)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("embed-search", help="cosine range search over an embedding file")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=0.92)
    p.add_argument("--knn-k", dest="knn_k", type=int, default=900)
    p.add_argument("--mode", choices=("exact_range", "knn_then_filter"), default="knn_then_filter")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--truncation-report", help="write the kNN truncation report JSON here")
    p.set_defaults(func=_cmd_embed_search)

    p = sub.add_parser("cluster", help="cluster an edge file into duplicate groups")
    p.add_argument("--input", required=True, help="corpus JSONL (defines the node set)")
    p.add_argument("--edges", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clustering", choices=("components", "louvain"), default="louvain")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--use-weights", action="store_true")
    _add_seed(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("eval", help="score a clustering against gold labels")
    p.add_argument("--pred", required=True, help="predicted clustering TSV")
    p.add_argument("--input", help="corpus JSONL carrying gold_cluster labels")
    p.add_argument("--gold", help="gold clustering TSV (alternative to --input)")
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--method-tag", default="")
    _add_seed(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("tune", help="grid-tune a method threshold by ARI")
    p.add_argument("--input", required=True, help="labeled validation corpus JSONL")
    p.add_argument("--method", choices=pl.METHODS, default="ngram_overlap")
    p.add_argument("--embeddings")
    p.add_argument("--grid", help="lo:hi:step (inclusive)")
    p.add_argument("--grid-values", help="comma-separated explicit grid")
    p.add_argument("--curve", help="write the threshold,ari CSV here")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=10, help="minhash k for lsh_collision")
    p.add_argument("--bands", type=int, default=15)
    p.add_argument("--rows", type=int, default=2)
    p.add_argument("--metric", choices=("overlap_min", "jaccard"), default="overlap_min")
    p.add_argument("--clustering", choices=("components", "louvain"), default="louvain")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--knn-k", dest="knn_k", type=int, default=900)
    p.add_argument("--threads", type=int, default=1)
    _add_seed(p)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("run", help="run one full pipeline and write artifacts")
    _add_spec_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bench", help="run once and report stage timings")
    _add_spec_flags(p)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        return 0
    except OSError as exc:
        # unreadable input or unwritable output path
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
