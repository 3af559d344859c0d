"""MinHash sketches, collision-count LSH, banded LSH, signature files."""

import itertools

import numpy as np
import pytest

from neardup.corpus import Document, ShingleSet, shingle_corpus
from neardup.errors import DataError
from neardup.hashing import minhash_salts, mix64
from neardup.sketch import (
    EMPTY_SENTINEL,
    BandingConfig,
    banded_lsh,
    collision_fraction,
    collision_lsh,
    load_signatures,
    minhash,
    minhash_corpus,
    s_curve,
    write_signatures,
)


def _set_with(doc_id, values):
    arr = np.unique(np.asarray(list(values), dtype=np.uint64))
    return ShingleSet(doc_id=doc_id, n=3, hashes=arr)


def _pair_with_jaccard(rng, shared, a_only, b_only):
    """Two sets with exact Jaccard shared/(shared+a_only+b_only)."""
    total = shared + a_only + b_only
    values = np.unique(rng.integers(0, 2**64, size=total * 2, dtype=np.uint64))
    rng.shuffle(values)  # unique() sorted them; decorrelate the split
    values = values[:total]
    assert len(values) == total
    common = values[:shared]
    a = _set_with("a", np.concatenate([common, values[shared : shared + a_only]]))
    b = _set_with("b", np.concatenate([common, values[shared + a_only :]]))
    return a, b


class TestMinhash:
    def test_per_coordinate_oracle(self):
        rng = np.random.default_rng(1)
        for trial in range(20):
            values = rng.integers(0, 2**64, size=int(rng.integers(1, 40)), dtype=np.uint64)
            s = _set_with("d", values)
            k, seed = 16, trial
            sig = minhash(s, k=k, seed=seed)
            salts = minhash_salts(seed, k)
            for i in range(k):
                want = min(mix64(int(v) ^ int(salts[i])) for v in s.hashes.tolist())
                assert int(sig.minima[i]) == want

    def test_empty_set_sentinel(self):
        sig = minhash(_set_with("d", []), k=8, seed=0)
        assert sig.is_empty
        assert all(int(v) == EMPTY_SENTINEL for v in sig.minima)

    def test_invalid_k(self):
        with pytest.raises(DataError):
            minhash(_set_with("d", [1]), k=0, seed=0)

    def test_deterministic(self):
        s = _set_with("d", [5, 6, 7])
        a = minhash(s, k=32, seed=3)
        b = minhash(s, k=32, seed=3)
        assert np.array_equal(a.minima, b.minima)


class TestCollisionFraction:
    def test_equals_mean_coordinate_agreement(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            a, b = _pair_with_jaccard(
                rng, int(rng.integers(0, 10)), int(rng.integers(1, 10)), int(rng.integers(1, 10))
            )
            sa, sb = minhash(a, 64, 0), minhash(b, 64, 0)
            want = float(np.mean(sa.minima == sb.minima))
            assert collision_fraction(sa, sb) == want

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        a, b = _pair_with_jaccard(rng, 4, 3, 2)
        sa, sb = minhash(a, 32, 0), minhash(b, 32, 0)
        assert collision_fraction(sa, sb) == collision_fraction(sb, sa)

    def test_width_mismatch(self):
        s = _set_with("d", [1])
        with pytest.raises(DataError):
            collision_fraction(minhash(s, 8, 0), minhash(s, 16, 0))

    def test_empty_pairs_never_agree(self):
        ea = minhash(_set_with("a", []), 16, 0)
        eb = minhash(_set_with("b", []), 16, 0)
        assert collision_fraction(ea, eb) == 0.0

    def test_unbiased_estimate_small(self):
        # Smaller sibling of the acceptance check: 200 pairs, k=256.
        rng = np.random.default_rng(8)
        errors = []
        for _ in range(200):
            shared = int(rng.integers(0, 30))
            a_only = int(rng.integers(1, 30))
            b_only = int(rng.integers(1, 30))
            a, b = _pair_with_jaccard(rng, shared, a_only, b_only)
            j = shared / (shared + a_only + b_only)
            est = collision_fraction(minhash(a, 256, 0), minhash(b, 256, 0))
            errors.append(est - j)
        assert abs(float(np.mean(errors))) <= 0.02


class TestCollisionLSH:
    def _brute(self, sigs, min_collisions):
        out = []
        for sa, sb in itertools.combinations(sigs, 2):
            agree = int(
                np.count_nonzero(
                    (sa.minima == sb.minima) & (sa.minima != np.uint64(EMPTY_SENTINEL))
                )
            )
            if agree >= min_collisions:
                a, b = sorted([sa.doc_id, sb.doc_id])
                out.append((a, b, agree / sa.k))
        return sorted(out)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        vocab = [f"w{i}" for i in range(25)]
        docs = [
            Document(
                id=f"d{i}",
                text=" ".join(vocab[int(rng.integers(0, 25))] for _ in range(int(rng.integers(0, 20)))),
            )
            for i in range(30)
        ]
        sets = shingle_corpus(docs, n=2, seed=0)
        sigs = minhash_corpus(sets, k=16, seed=0)
        for m in (1, 2, 5):
            got = [(e.id_a, e.id_b, e.score) for e in collision_lsh(sigs, m)]
            assert got == self._brute(sigs, m)

    def test_empty_signatures_excluded(self):
        sigs = minhash_corpus(
            [_set_with("a", []), _set_with("b", []), _set_with("c", [1, 2])], k=8, seed=0
        )
        assert collision_lsh(sigs, 1) == []

    def test_min_collisions_bounds(self):
        sigs = minhash_corpus([_set_with("a", [1])], k=8, seed=0)
        with pytest.raises(DataError):
            collision_lsh(sigs, 0)
        with pytest.raises(DataError):
            collision_lsh(sigs, 9)

    def test_mixed_seed_rejected(self):
        a = minhash(_set_with("a", [1]), 8, 0)
        b = minhash(_set_with("b", [1]), 8, 1)
        with pytest.raises(DataError):
            collision_lsh([a, b], 1)


class TestBandedLSH:
    def _brute(self, sigs, cfg):
        out = []
        for sa, sb in itertools.combinations(sigs, 2):
            if sa.is_empty or sb.is_empty:
                continue
            bands_hit = 0
            for b in range(cfg.bands):
                lo, hi = b * cfg.rows, (b + 1) * cfg.rows
                if np.array_equal(sa.minima[lo:hi], sb.minima[lo:hi]):
                    bands_hit += 1
            if bands_hit:
                a_id, b_id = sorted([sa.doc_id, sb.doc_id])
                out.append((a_id, b_id, bands_hit / cfg.bands))
        return sorted(out)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(6)
        vocab = [f"w{i}" for i in range(15)]
        docs = [
            Document(
                id=f"d{i}",
                text=" ".join(vocab[int(rng.integers(0, 15))] for _ in range(int(rng.integers(2, 15)))),
            )
            for i in range(40)
        ]
        cfg = BandingConfig(bands=5, rows=2)
        sets = shingle_corpus(docs, n=2, seed=1)
        sigs = minhash_corpus(sets, k=10, seed=1)
        got = [(e.id_a, e.id_b, e.score) for e in banded_lsh(sigs, cfg)]
        assert got == self._brute(sigs, cfg)

    def test_identical_docs_always_collide(self):
        docs = [Document(id=f"d{i}", text="same exact words repeated here") for i in range(5)]
        sigs = minhash_corpus(shingle_corpus(docs, n=3, seed=0), k=30, seed=0)
        edges = banded_lsh(sigs, BandingConfig(bands=15, rows=2))
        assert len(edges) == 10  # all pairs
        assert all(e.score == 1.0 for e in edges)

    def test_empty_signatures_excluded(self):
        sigs = minhash_corpus([_set_with("a", []), _set_with("b", [])], k=30, seed=0)
        assert banded_lsh(sigs, BandingConfig()) == []

    def test_banding_must_fit_k(self):
        cfg = BandingConfig(bands=15, rows=2)
        with pytest.raises(DataError):
            cfg.validate(29)
        cfg.validate(30)


class TestSCurve:
    def test_pinned_midpoint(self):
        assert s_curve(0.5, BandingConfig(bands=15, rows=2)) == pytest.approx(
            0.9866365389898419, abs=1e-15
        )

    def test_endpoints(self):
        cfg = BandingConfig(bands=15, rows=2)
        assert s_curve(0.0, cfg) == 0.0
        assert s_curve(1.0, cfg) == 1.0

    def test_monotone(self):
        cfg = BandingConfig(bands=15, rows=2)
        grid = [s_curve(s, cfg) for s in np.linspace(0, 1, 50)]
        assert all(b >= a for a, b in zip(grid, grid[1:]))

    def test_domain_error(self):
        with pytest.raises(DataError):
            s_curve(1.5)

    def test_empirical_collision_rate(self):
        # Loose spot check; the acceptance suite runs the full version.
        rng = np.random.default_rng(11)
        cfg = BandingConfig(bands=15, rows=2)
        for s_target in (0.3, 0.7):
            hits = 0
            trials = 400
            for t in range(trials):
                shared = 30
                extra = int(round(shared * (1 - s_target) / s_target / 2))
                a, b = _pair_with_jaccard(rng, shared, extra, extra)
                j = shared / (shared + 2 * extra)
                sa = minhash(a, 30, seed=t)
                sb = minhash(b, 30, seed=t)
                if banded_lsh([sa, sb], cfg):
                    hits += 1
            assert abs(hits / trials - s_curve(j, cfg)) < 0.1


class TestSignatureFile:
    def test_round_trip(self, tmp_path):
        sets = [
            _set_with("plain", [1, 2, 3]),
            _set_with("ünïcode-идентификатор", [4, 5]),
            _set_with("empty", []),
        ]
        sigs = minhash_corpus(sets, k=12, seed=99)
        path = tmp_path / "sigs.mhsg"
        write_signatures(sigs, path)
        loaded = load_signatures(path)
        assert [s.doc_id for s in loaded] == [s.doc_id for s in sigs]
        for a, b in zip(sigs, loaded):
            assert a.k == b.k and a.seed == b.seed
            assert np.array_equal(a.minima, b.minima)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "sigs.mhsg"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(DataError, match="magic"):
            load_signatures(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "sigs.mhsg"
        sigs = minhash_corpus([_set_with("a", [1, 2])], k=4, seed=0)
        write_signatures(sigs, path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(DataError):
            load_signatures(path)

    def test_wrong_version(self, tmp_path):
        path = tmp_path / "sigs.mhsg"
        sigs = minhash_corpus([_set_with("a", [1])], k=2, seed=0)
        write_signatures(sigs, path)
        raw = bytearray(path.read_bytes())
        raw[4] = 0xFE  # version field little-endian low byte
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="version"):
            load_signatures(path)
