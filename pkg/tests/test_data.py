"""Benchmark loading and the epoch batch sampler."""

import numpy as np
import pytest

from rsmatch.data import EpochSampler, load_benchmark
from rsmatch.errors import BenchmarkError


class TestLoadBenchmark:
    def test_splits_and_shapes(self, benchmark):
        b = benchmark
        assert b.num_classes == 4
        assert b.image_size == 16
        assert b.labeled_images.shape == (len(b.labeled_labels), 16, 16, 3)
        assert b.labeled_images.dtype == np.uint8
        assert len(b.unlabeled_ids) == len(b.unlabeled_images)
        assert len(set(b.unlabeled_ids)) == len(b.unlabeled_ids)
        assert b.test_images.shape[0] == len(b.test_labels)
        assert set(np.unique(b.labeled_labels)) <= set(range(4))

    def test_class_names_come_from_metadata(self, benchmark):
        assert benchmark.class_names == benchmark.metadata["class_names"]
        assert len(benchmark.class_names) == benchmark.num_classes

    def test_sidecar_covers_all_unlabeled(self, benchmark):
        for rid in benchmark.unlabeled_ids:
            assert rid in benchmark.sidecar
        origins = {
            benchmark.sidecar.origin_of(rid, "test.setup")
            for rid in benchmark.unlabeled_ids
        }
        assert origins == {"real", "synthetic"}

    def test_contamination_fraction_matches_metadata(self, benchmark):
        n_synth = sum(
            1 for rid in benchmark.unlabeled_ids
            if benchmark.sidecar.origin_of(rid, "test.setup") == "synthetic"
        )
        expected = sum(v["synthetic"] for v in benchmark.metadata["per_class"].values())
        assert n_synth == expected
        assert benchmark.metadata["alpha"] == 0.5

    def test_clean_benchmark_has_no_synthetic(self, clean_benchmark):
        for rid in clean_benchmark.unlabeled_ids:
            assert clean_benchmark.sidecar.origin_of(rid, "test.setup") == "real"

    def test_missing_manifest_rejected(self, tmp_path):
        with pytest.raises(BenchmarkError, match="manifest"):
            load_benchmark(tmp_path)


class TestEpochSampler:
    def test_epoch_is_a_permutation(self):
        s = EpochSampler(12, 4, np.random.default_rng(0))
        seen = np.concatenate([s.next_batch() for _ in range(3)])
        assert sorted(seen.tolist()) == list(range(12))

    def test_short_tail_is_dropped_and_reshuffled(self):
        s = EpochSampler(10, 4, np.random.default_rng(0))
        first = [s.next_batch() for _ in range(2)]  # 8 of 10 used
        third = s.next_batch()  # tail of 2 dropped, fresh epoch
        assert all(len(b) == 4 for b in first + [third])

    def test_deterministic_given_seed(self):
        a = EpochSampler(20, 6, np.random.default_rng(3))
        b = EpochSampler(20, 6, np.random.default_rng(3))
        for _ in range(10):
            np.testing.assert_array_equal(a.next_batch(), b.next_batch())

    def test_batch_larger_than_pool_rejected(self):
        with pytest.raises(BenchmarkError, match="cannot draw"):
            EpochSampler(3, 4, np.random.default_rng(0))

    def test_state_roundtrip_resumes_bit_exactly(self):
        src = EpochSampler(17, 5, np.random.default_rng(8))
        for _ in range(4):
            src.next_batch()
        state = src.state_dict()

        fresh = EpochSampler(17, 5, np.random.default_rng(999))
        fresh.load_state_dict(state)
        for _ in range(20):
            np.testing.assert_array_equal(src.next_batch(), fresh.next_batch())

    def test_state_dict_snapshot_is_insulated_from_later_draws(self):
        s = EpochSampler(9, 3, np.random.default_rng(1))
        state = s.state_dict()
        perm_before = state["perm"].copy()
        for _ in range(6):
            s.next_batch()
        np.testing.assert_array_equal(state["perm"], perm_before)
        assert state["cursor"] == 0
