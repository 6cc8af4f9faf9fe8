"""Training engine: stepping, schedule, reproducibility, checkpoints, runs."""

import json

import numpy as np
import pytest
import torch

from rsmatch.config import TrainConfig, config_hash
from rsmatch.engine import (
    CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
    Trainer,
    checkpoint_manifest,
    read_checkpoint,
    run_training,
)
from rsmatch.errors import CheckpointError, ConfigError, NonFiniteLossError

# frozen from lr * cos(7/16 * pi * progress) at progress 0.5 and 1.0, lr=0.03
LR_MIDPOINT = 0.02319031360088211
LR_FINAL = 0.00585270966048385


def small_config(**overrides):
    base = dict(num_classes=4, arch="tiny-cnn", method="rsmatch",
                labeled_batch=4, unlabeled_ratio=3, total_iterations=64,
                eval_every=32, lr=0.03, seed=7)
    base.update(overrides)
    return TrainConfig(**base)


def params_of(module):
    return [p.detach().clone() for p in module.parameters()]


def assert_params_equal(a, b):
    assert len(a) == len(b)
    for pa, pb in zip(a, b):
        assert torch.equal(pa, pb)


class TestSchedule:
    def test_cosine_values_frozen(self, benchmark):
        t = Trainer(small_config(total_iterations=1024), benchmark)
        assert t.learning_rate(0) == pytest.approx(0.03, rel=1e-12)
        assert t.learning_rate(512) == pytest.approx(LR_MIDPOINT, rel=1e-12)
        assert t.learning_rate(1024) == pytest.approx(LR_FINAL, rel=1e-12)

    def test_warmup_ramps_linearly(self, benchmark):
        t = Trainer(small_config(warmup_iterations=5), benchmark)
        assert t.learning_rate(0) == pytest.approx(0.006)
        assert t.learning_rate(2) == pytest.approx(0.018)
        assert t.learning_rate(5) == pytest.approx(0.03)

    def test_monotone_decay_after_warmup(self, benchmark):
        t = Trainer(small_config(total_iterations=100), benchmark)
        values = [t.learning_rate(i) for i in range(101)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] > 0


class TestStep:
    def test_report_fields(self, benchmark):
        trainer = Trainer(small_config(), benchmark)
        report = trainer.step()
        assert report.iteration == 1
        assert report.lr == pytest.approx(0.03)
        assert set(report.losses) == {
            "sup", "unsup_real", "unsup_dummy", "det_sup", "det_unsup", "total"}
        assert report.losses["sup"] > 0
        assert 0.0 <= report.mask_rate <= 1.0
        assert report.real_gated + report.synth_gated <= trainer.unlabeled_batch
        assert len(report.queue_per_class) == 4
        assert report.queue_total == sum(report.queue_per_class)

    def test_detector_terms_absent_for_baseline(self, benchmark):
        trainer = Trainer(small_config(method="fixmatch"), benchmark)
        report = trainer.step()
        assert report.losses["det_sup"] is None
        assert report.losses["det_unsup"] is None
        assert report.losses["unsup_dummy"] == 0.0
        assert report.queue_total == 0 and report.queue_per_class == []
        assert trainer.detector is None and trainer.queue is None

    def test_detector_supervised_term_needs_a_nonempty_queue(self, benchmark):
        trainer = Trainer(small_config(), benchmark)
        report = trainer.step()
        if report.queue_total == 0:
            assert report.losses["det_sup"] is None
        else:
            assert report.losses["det_sup"] is not None

    def test_baseline_never_touches_dummy_head(self, benchmark):
        trainer = Trainer(small_config(method="fixmatch"), benchmark)
        before = params_of(trainer.classifier.dummy_head)
        for _ in range(3):
            trainer.step()
        assert_params_equal(before, params_of(trainer.classifier.dummy_head))

    def test_no_dummy_head_reports_zero_usage(self, benchmark):
        trainer = Trainer(small_config(no_dummy_head=True), benchmark)
        before = params_of(trainer.classifier.dummy_head)
        reports = [trainer.step() for _ in range(5)]
        assert all(r.dummy_used == 0 for r in reports)
        assert all(r.losses["unsup_dummy"] == 0.0 for r in reports)
        assert_params_equal(before, params_of(trainer.classifier.dummy_head))

    def test_same_seed_reproduces_reports_and_weights(self, benchmark):
        a = Trainer(small_config(), benchmark)
        b = Trainer(small_config(), benchmark)
        for _ in range(8):
            ra, rb = a.step(), b.step()
            assert ra == rb
        assert_params_equal(params_of(a.classifier), params_of(b.classifier))
        assert_params_equal(params_of(a.detector), params_of(b.detector))

    def test_different_seeds_diverge(self, benchmark):
        a = Trainer(small_config(seed=1), benchmark)
        b = Trainer(small_config(seed=2), benchmark)
        a.step()
        b.step()
        same = all(torch.equal(x, y)
                   for x, y in zip(params_of(a.classifier), params_of(b.classifier)))
        assert not same

    def test_shared_detector_uses_single_optimizer(self, benchmark):
        trainer = Trainer(small_config(shared_detector=True), benchmark)
        assert trainer.detector_opt is None
        head_before = params_of(trainer.detector)
        for _ in range(3):
            trainer.step()
        changed = any(not torch.equal(x, y)
                      for x, y in zip(head_before, params_of(trainer.detector)))
        assert changed

    def test_non_finite_loss_raises_with_context(self, benchmark):
        trainer = Trainer(small_config(), benchmark)
        with torch.no_grad():
            trainer.classifier.real_head.weight.fill_(float("inf"))
        with pytest.raises(NonFiniteLossError) as err:
            trainer.step()
        assert err.value.iteration == 0
        assert err.value.term in ("sup", "unsup_real", "total")

    def test_training_never_reads_the_sidecar(self, benchmark):
        trainer = Trainer(small_config(), benchmark)
        for _ in range(6):
            trainer.step()
        trainer.evaluate_test()
        assert benchmark.sidecar.access_log() == []

    def test_num_classes_mismatch_rejected(self, benchmark):
        with pytest.raises(ConfigError, match="num_classes"):
            Trainer(small_config(num_classes=7, classes_per_update=None), benchmark)


class TestInference:
    def test_classifier_probs_shape_and_normalization(self, benchmark):
        trainer = Trainer(small_config(), benchmark)
        probs = trainer.classifier_probs(benchmark.test_images)
        assert probs.shape == (len(benchmark.test_labels), 4)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-5)

    def test_detector_scores_bounds(self, benchmark):
        trainer = Trainer(small_config(), benchmark)
        scores = trainer.detector_scores(benchmark.unlabeled_images[:16])
        assert scores.shape == (16,)
        assert (scores >= 0).all() and (scores <= 1).all()

    def test_baseline_has_no_detector_scores(self, benchmark):
        trainer = Trainer(small_config(method="fixmatch"), benchmark)
        with pytest.raises(ConfigError, match="detector"):
            trainer.detector_scores(benchmark.unlabeled_images[:4])

    def test_eval_leaves_training_mode_intact(self, benchmark):
        trainer = Trainer(small_config(), benchmark)
        trainer.evaluate_test()
        assert trainer.classifier.training
        trainer.detector_scores(benchmark.unlabeled_images[:4])
        assert trainer.detector.training


class TestCheckpointing:
    def test_resume_is_bit_exact(self, benchmark, tmp_path):
        straight = Trainer(small_config(), benchmark)
        for _ in range(10):
            straight.step()

        first = Trainer(small_config(), benchmark)
        for _ in range(6):
            first.step()
        first.save_checkpoint(tmp_path / "mid.pt")

        resumed = Trainer.restore(tmp_path / "mid.pt", benchmark)
        assert resumed.iteration == 6
        for _ in range(4):
            r_resumed = resumed.step()
            r_straight = first.step()
            assert r_resumed == r_straight
        assert_params_equal(params_of(straight.classifier), params_of(resumed.classifier))
        assert_params_equal(params_of(straight.detector), params_of(resumed.detector))

    def test_manifest_lists_both_models(self, benchmark, tmp_path):
        trainer = Trainer(small_config(), benchmark)
        trainer.step()
        trainer.save_checkpoint(tmp_path / "ck.pt")
        manifest = checkpoint_manifest(tmp_path / "ck.pt")
        names = {m["name"] for m in manifest}
        assert any(n.startswith("classifier.encoder") for n in names)
        assert any(n.startswith("classifier.real_head") for n in names)
        assert any(n.startswith("classifier.dummy_head") for n in names)
        assert any(n.startswith("detector.") for n in names)
        for m in manifest:
            assert isinstance(m["shape"], list)  # scalars report []
            assert m["dtype"]

    def test_payload_format_and_version(self, benchmark, tmp_path):
        trainer = Trainer(small_config(), benchmark)
        trainer.save_checkpoint(tmp_path / "ck.pt")
        payload = read_checkpoint(tmp_path / "ck.pt")
        assert payload["format"] == CHECKPOINT_FORMAT
        assert payload["version"] == CHECKPOINT_VERSION
        assert payload["config"]["num_classes"] == 4

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(CheckpointError, match="no checkpoint"):
            read_checkpoint(tmp_path / "absent.pt")

    def test_foreign_payload_rejected(self, tmp_path):
        torch.save({"weights": [1, 2, 3]}, tmp_path / "alien.pt")
        with pytest.raises(CheckpointError, match="not a recognized"):
            read_checkpoint(tmp_path / "alien.pt")

    def test_future_version_rejected(self, benchmark, tmp_path):
        trainer = Trainer(small_config(), benchmark)
        trainer.save_checkpoint(tmp_path / "ck.pt")
        payload = torch.load(tmp_path / "ck.pt", weights_only=False)
        payload["version"] = CHECKPOINT_VERSION + 1
        torch.save(payload, tmp_path / "ck.pt")
        with pytest.raises(CheckpointError, match="version"):
            read_checkpoint(tmp_path / "ck.pt")

    def test_corrupt_file_rejected(self, tmp_path):
        (tmp_path / "junk.pt").write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError, match="cannot read"):
            read_checkpoint(tmp_path / "junk.pt")


class TestRunTraining:
    @pytest.fixture(scope="class")
    def run(self, bench_dir, tmp_path_factory):
        from rsmatch.data import load_benchmark

        out = tmp_path_factory.mktemp("run")
        config = small_config(total_iterations=32, eval_every=16)
        summary = run_training(config, load_benchmark(bench_dir), out, log_every=8)
        return config, out, summary

    def test_summary_contents(self, run):
        config, out, summary = run
        assert summary["iterations"] == 32
        assert summary["config_hash"] == config_hash(config.resolved())
        assert 0.0 <= summary["best_test_accuracy"] <= 1.0
        assert summary["final_test_accuracy"] is not None
        assert summary["dummy_utilization"] >= 0.0
        on_disk = json.loads((out / "summary.json").read_text())
        assert on_disk == summary

    def test_artifacts_on_disk(self, run):
        _, out, _ = run
        assert (out / "config.yaml").exists()
        assert (out / "checkpoints" / "best.pt").exists()
        assert (out / "checkpoints" / "last.pt").exists()
        assert (out / "metrics.jsonl").exists()

    def test_metrics_log_structure(self, run):
        _, out, _ = run
        rows = [json.loads(line) for line in
                (out / "metrics.jsonl").read_text().splitlines() if line.strip()]
        kinds = {r["kind"] for r in rows}
        assert kinds == {"eval", "train"}
        train_rows = [r for r in rows if r["kind"] == "train"]
        assert [r["iteration"] for r in train_rows] == [8, 16, 24, 32]
        assert all("loss_total" in r for r in train_rows)
        eval_rows = [r for r in rows if r["kind"] == "eval"]
        assert [r["iteration"] for r in eval_rows] == [0, 16, 32]

    def test_last_checkpoint_resumes_at_final_iteration(self, run, benchmark):
        _, out, _ = run
        trainer = Trainer.restore(out / "checkpoints" / "last.pt", benchmark)
        assert trainer.iteration == 32

    def test_hooks_observe_but_do_not_perturb(self, benchmark, tmp_path):
        seen = []

        def hook(trainer, iteration):
            seen.append(iteration)
            return {"note": "ok"}

        config = small_config(total_iterations=16, eval_every=8)
        summary_hooked = run_training(config, benchmark, tmp_path / "a", hooks=[hook])
        summary_plain = run_training(config, benchmark, tmp_path / "b")
        assert seen == [0, 8, 16]
        assert summary_hooked["final_test_accuracy"] == summary_plain["final_test_accuracy"]
        rows = [json.loads(line) for line in
                (tmp_path / "a" / "metrics.jsonl").read_text().splitlines()]
        hook_rows = [r for r in rows if r["kind"] == "hook"]
        assert all(r["note"] == "ok" for r in hook_rows)
