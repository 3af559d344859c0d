"""End-to-end tests for the command-line interface.

Every subcommand runs in-process through main(argv) against temporary
files, and the exit-code contract (0 ok, 1 usage, 2 data, 3 internal)
is checked on representative failures.
"""

import json

import numpy as np
import pytest

from neardup.cli import main
from neardup.corpus import load_corpus, shingle_corpus, write_corpus
from neardup.embedspace import write_embeddings
from neardup.graph import load_clustering
from neardup.overlap import (
    InvertedIndex,
    candidate_pairs,
    load_edges,
    score_edges,
    write_edges,
)
from neardup.sketch import load_signatures
from neardup.synthgen import GeneratorConfig, NoiseModel, generate
from neardup.vectorize import char_ngram_vectors


def _corpus_file(tmp_path, name="corpus.jsonl", n_sources=12, seed=0, noise=None):
    probs = np.zeros(3)
    probs[0], probs[2] = 0.4, 0.6
    cfg = GeneratorConfig(
        n_sources=n_sources, reproduction_count_distribution=probs, seed=seed
    )
    docs = generate(cfg, noise or NoiseModel())
    path = tmp_path / name
    write_corpus(docs, path)
    return path, docs


def _embeddings_file(tmp_path, docs, name="vecs.embd"):
    path = tmp_path / name
    write_embeddings(char_ngram_vectors(docs), path)
    return path


class TestSynth:
    def test_writes_labeled_corpus(self, tmp_path):
        out = tmp_path / "synth.jsonl"
        rc = main([
            "synth", "--out", str(out), "--n-sources", "20", "--seed", "3",
        ])
        assert rc == 0
        docs = load_corpus(out)
        assert len(docs) >= 20
        assert all(d.gold_cluster for d in docs)

    def test_deterministic_given_seed(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert main(["synth", "--out", str(out), "--n-sources", "15", "--seed", "9"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_noise_report_written(self, tmp_path):
        out = tmp_path / "synth.jsonl"
        report = tmp_path / "noise.json"
        rc = main([
            "synth", "--out", str(out), "--n-sources", "30", "--seed", "1",
            "--noise-report", str(report),
        ])
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["n_duplicate_pairs"] > 0
        assert set(payload["mean_overlap"]) == {"3", "4", "5", "10", "15"}

    def test_clean_preset_rate_override(self, tmp_path):
        out = tmp_path / "synth.jsonl"
        rc = main([
            "synth", "--out", str(out), "--n-sources", "10", "--preset", "clean",
            "--word-drop-rate", "0.5", "--seed", "2",
        ])
        assert rc == 0

    def test_missing_out_is_usage_error(self, capsys):
        assert main(["synth", "--n-sources", "5"]) == 1
        assert "error" in capsys.readouterr().err


class TestShingle:
    def test_stats_to_stdout(self, tmp_path, capsys):
        corpus, docs = _corpus_file(tmp_path)
        rc = main(["shingle", "--input", str(corpus), "--n", "3"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["documents"] == len(docs)
        sets = shingle_corpus(docs, n=3, seed=0)
        assert payload["total_shingles"] == sum(s.count for s in sets)

    def test_stats_to_file(self, tmp_path):
        corpus, _ = _corpus_file(tmp_path)
        out = tmp_path / "stats.json"
        assert main(["shingle", "--input", str(corpus), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["shingle_n"] == 3

    def test_missing_corpus_is_usage_error(self, tmp_path):
        assert main(["shingle", "--input", str(tmp_path / "nope.jsonl")]) == 1


class TestMinhash:
    def test_writes_signature_file(self, tmp_path):
        corpus, docs = _corpus_file(tmp_path)
        out = tmp_path / "sigs.mhsg"
        rc = main(["minhash", "--input", str(corpus), "--out", str(out), "--k", "8"])
        assert rc == 0
        sigs = load_signatures(out)
        assert len(sigs) == len(docs)
        assert all(s.k == 8 and len(s.minima) == 8 for s in sigs)

    def test_corrupt_corpus_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a", "text": "x"}\nnot json\n')
        out = tmp_path / "sigs.mhsg"
        assert main(["minhash", "--input", str(bad), "--out", str(out)]) == 2
        assert "data error" in capsys.readouterr().err


class TestPairs:
    def test_ngram_overlap_matches_library(self, tmp_path):
        corpus, docs = _corpus_file(tmp_path)
        out = tmp_path / "edges.tsv"
        rc = main([
            "pairs", "--input", str(corpus), "--out", str(out),
            "--threshold", "0.1",
        ])
        assert rc == 0
        sets = shingle_corpus(docs, n=3, seed=0)
        cands = candidate_pairs(InvertedIndex.build(sets), hot_shingle_cap=10_000)
        want = score_edges(cands, sets, metric="overlap_min", threshold=0.1)
        ref = tmp_path / "ref.tsv"
        write_edges(want, ref)
        assert out.read_bytes() == ref.read_bytes()

    def test_banded_lsh_from_signatures(self, tmp_path):
        corpus, docs = _corpus_file(tmp_path)
        sigs = tmp_path / "sigs.mhsg"
        assert main(["minhash", "--input", str(corpus), "--out", str(sigs), "--k", "30"]) == 0
        out = tmp_path / "edges.tsv"
        rc = main([
            "pairs", "--method", "lsh_banded", "--signatures", str(sigs),
            "--out", str(out), "--bands", "15", "--rows", "2",
        ])
        assert rc == 0
        assert len(load_edges(out)) > 0

    def test_lsh_without_signatures_is_usage_error(self, tmp_path, capsys):
        out = tmp_path / "edges.tsv"
        assert main(["pairs", "--method", "lsh_collision", "--out", str(out)]) == 1
        assert "--signatures" in capsys.readouterr().err


class TestEmbedSearch:
    def test_exact_range(self, tmp_path):
        _, docs = _corpus_file(tmp_path)
        vecs = _embeddings_file(tmp_path, docs)
        out = tmp_path / "edges.tsv"
        rc = main([
            "embed-search", "--embeddings", str(vecs), "--out", str(out),
            "--mode", "exact_range", "--tau", "0.95",
        ])
        assert rc == 0
        edges = load_edges(out)
        assert all(e.score >= 0.95 - 1e-6 for e in edges)
        assert len(edges) > 0

    def test_knn_mode_with_truncation_report(self, tmp_path):
        _, docs = _corpus_file(tmp_path)
        vecs = _embeddings_file(tmp_path, docs)
        out = tmp_path / "edges.tsv"
        report = tmp_path / "trunc.json"
        rc = main([
            "embed-search", "--embeddings", str(vecs), "--out", str(out),
            "--mode", "knn_then_filter", "--tau", "0.95",
            "--truncation-report", str(report),
        ])
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["count"] == len(payload["doc_ids"])

    def test_truncation_report_requires_knn_mode(self, tmp_path):
        _, docs = _corpus_file(tmp_path)
        vecs = _embeddings_file(tmp_path, docs)
        rc = main([
            "embed-search", "--embeddings", str(vecs),
            "--out", str(tmp_path / "e.tsv"), "--mode", "exact_range",
            "--truncation-report", str(tmp_path / "t.json"),
        ])
        assert rc == 1

    def test_corrupt_embedding_file_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.embd"
        bad.write_bytes(b"NOPE" + b"\x00" * 32)
        rc = main(["embed-search", "--embeddings", str(bad), "--out", str(tmp_path / "e.tsv")])
        assert rc == 2


class TestCluster:
    def test_cluster_roundtrip(self, tmp_path):
        corpus, docs = _corpus_file(tmp_path)
        edges = tmp_path / "edges.tsv"
        assert main(["pairs", "--input", str(corpus), "--out", str(edges), "--threshold", "0.5"]) == 0
        out = tmp_path / "clusters.tsv"
        rc = main([
            "cluster", "--input", str(corpus), "--edges", str(edges),
            "--out", str(out),
        ])
        assert rc == 0
        clustering = load_clustering(out)
        assert set(clustering.assignment) == {d.id for d in docs}

    def test_components_option(self, tmp_path):
        corpus, _ = _corpus_file(tmp_path)
        edges = tmp_path / "edges.tsv"
        assert main(["pairs", "--input", str(corpus), "--out", str(edges), "--threshold", "0.5"]) == 0
        out = tmp_path / "clusters.tsv"
        assert main([
            "cluster", "--input", str(corpus), "--edges", str(edges),
            "--out", str(out), "--clustering", "components",
        ]) == 0

    def test_edge_with_unknown_node_is_data_error(self, tmp_path):
        corpus, _ = _corpus_file(tmp_path)
        edges = tmp_path / "edges.tsv"
        edges.write_text("ghost-a\tghost-b\t1.0\toverlap_min\n")
        rc = main([
            "cluster", "--input", str(corpus), "--edges", str(edges),
            "--out", str(tmp_path / "c.tsv"),
        ])
        assert rc == 2


class TestEval:
    def _clusters(self, tmp_path):
        corpus, docs = _corpus_file(tmp_path)
        edges = tmp_path / "edges.tsv"
        main(["pairs", "--input", str(corpus), "--out", str(edges), "--threshold", "0.99"])
        pred = tmp_path / "pred.tsv"
        main(["cluster", "--input", str(corpus), "--edges", str(edges), "--out", str(pred)])
        return corpus, pred

    def test_eval_against_corpus_gold(self, tmp_path, capsys):
        corpus, pred = self._clusters(tmp_path)
        out = tmp_path / "report.json"
        rc = main([
            "eval", "--pred", str(pred), "--input", str(corpus),
            "--out", str(out), "--method-tag", "ngram",
        ])
        assert rc == 0
        table = capsys.readouterr().out
        assert "ari" in table
        payload = json.loads(out.read_text())
        # clean corpus at a strict threshold: exact recovery
        assert payload["metrics"]["ari"] == 1.0
        assert payload["method"] == "ngram"

    def test_eval_against_gold_file(self, tmp_path):
        corpus, pred = self._clusters(tmp_path)
        rc = main(["eval", "--pred", str(pred), "--gold", str(pred)])
        assert rc == 0

    def test_eval_without_gold_is_usage_error(self, tmp_path):
        _, pred = self._clusters(tmp_path)
        assert main(["eval", "--pred", str(pred)]) == 1

    def test_unlabeled_corpus_is_data_error(self, tmp_path):
        corpus, pred = self._clusters(tmp_path)
        plain = tmp_path / "plain.jsonl"
        rows = [json.loads(line) for line in open(corpus, encoding="utf-8")]
        with open(plain, "w", encoding="utf-8") as fh:
            for row in rows:
                row.pop("gold_cluster", None)
                fh.write(json.dumps(row) + "\n")
        assert main(["eval", "--pred", str(pred), "--input", str(plain)]) == 2


class TestTune:
    def test_grid_values(self, tmp_path, capsys):
        corpus, _ = _corpus_file(tmp_path, n_sources=10)
        curve = tmp_path / "curve.csv"
        rc = main([
            "tune", "--input", str(corpus), "--grid-values", "0.2,0.5,0.9",
            "--curve", str(curve),
        ])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["grid_points"] == 3
        assert payload["best_threshold"] in (0.2, 0.5, 0.9)
        lines = curve.read_text().splitlines()
        assert lines[0] == "threshold,ari"
        assert len(lines) == 4

    def test_grid_range_expansion(self, tmp_path, capsys):
        corpus, _ = _corpus_file(tmp_path, n_sources=8)
        rc = main(["tune", "--input", str(corpus), "--grid", "0.2:0.8:0.2"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["grid_points"] == 4

    def test_bad_grid_is_usage_error(self, tmp_path):
        corpus, _ = _corpus_file(tmp_path, n_sources=5)
        assert main(["tune", "--input", str(corpus), "--grid", "0.9:0.1:0.2"]) == 1
        assert main(["tune", "--input", str(corpus)]) == 1


class TestRunAndBench:
    def _config(self, tmp_path, corpus, **extra):
        cfg = {
            "method": "ngram_overlap",
            "input": str(corpus),
            "output_dir": str(tmp_path / "out"),
            "threshold": 0.5,
            "evaluate": True,
        }
        cfg.update(extra)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_run_writes_artifacts(self, tmp_path, capsys):
        corpus, _ = _corpus_file(tmp_path)
        cfg = self._config(tmp_path, corpus)
        rc = main(["run", "--config", str(cfg)])
        assert rc == 0
        manifest = json.loads(capsys.readouterr().out)
        out_dir = tmp_path / "out"
        for name in ("clusters.tsv", "edges.tsv", "report.json", "manifest.json"):
            assert (out_dir / name).exists()
        assert manifest["spec"]["threshold"] == 0.5
        assert manifest["metrics"]["ari"] is not None

    def test_flags_override_config(self, tmp_path, capsys):
        corpus, _ = _corpus_file(tmp_path)
        cfg = self._config(tmp_path, corpus)
        rc = main(["run", "--config", str(cfg), "--threshold", "0.9", "--clustering", "components"])
        assert rc == 0
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["spec"]["threshold"] == 0.9
        assert manifest["spec"]["clustering"] == "components"

    def test_run_without_config_uses_flags(self, tmp_path, capsys):
        corpus, _ = _corpus_file(tmp_path)
        rc = main([
            "run", "--method", "ngram_overlap", "--input", str(corpus),
            "--output-dir", str(tmp_path / "o2"), "--threshold", "0.4",
            "--evaluate",
        ])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["spec"]["threshold"] == 0.4

    def test_run_missing_input_is_usage_error(self, tmp_path):
        rc = main([
            "run", "--method", "ngram_overlap",
            "--input", str(tmp_path / "missing.jsonl"),
            "--output-dir", str(tmp_path / "o3"),
        ])
        assert rc == 1

    def test_bench_reports_grouped_stages(self, tmp_path, capsys):
        corpus, _ = _corpus_file(tmp_path, n_sources=20)
        rc = main([
            "bench", "--method", "lsh_banded", "--input", str(corpus),
            "--no-evaluate",
        ])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload["stages"]) >= {"hash_articles", "compute_similarity", "build_graph", "community_detection"}
        assert payload["total_seconds"] > 0
        assert payload["peak_rss_kb"] > 0

    def test_internal_failure_exits_three(self, tmp_path, capsys, monkeypatch):
        corpus, _ = _corpus_file(tmp_path, n_sources=5)
        import neardup.cli as cli_mod

        def boom(spec):
            raise RuntimeError("unexpected")

        monkeypatch.setattr(cli_mod.pl, "run", boom)
        rc = main([
            "run", "--method", "ngram_overlap", "--input", str(corpus),
            "--output-dir", str(tmp_path / "o4"),
        ])
        assert rc == 3


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "neardup" in capsys.readouterr().out

    def test_unknown_subcommand_is_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag_is_usage_error(self):
        assert main(["shingle", "--input", "x", "--bogus"]) == 1
