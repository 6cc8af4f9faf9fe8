import numpy as np
import pytest

from rsmatch.benchgen import build_benchmark, render_real_dataset
from rsmatch.data import load_benchmark


@pytest.fixture(scope="session")
def real_dataset_dir(tmp_path_factory):
    """Small procedural real dataset: 4 classes, 40 train + 12 test each."""
    root = tmp_path_factory.mktemp("real")
    render_real_dataset(root, num_classes=4, per_class=40, test_per_class=12,
                        image_size=16, seed=900)
    return root


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory, real_dataset_dir):
    """Contaminated benchmark over the small real dataset (alpha=0.5)."""
    out = tmp_path_factory.mktemp("bench")
    build_benchmark(real_dataset_dir / "manifest.jsonl", out, alpha=0.5,
                    labeled_per_class=8, seed=901, prompts_per_class=5)
    return out


@pytest.fixture(scope="session")
def clean_bench_dir(tmp_path_factory, real_dataset_dir):
    """Same real dataset, zero contamination (alpha=0)."""
    out = tmp_path_factory.mktemp("bench_clean")
    build_benchmark(real_dataset_dir / "manifest.jsonl", out, alpha=0.0,
                    labeled_per_class=8, seed=902, prompts_per_class=5)
    return out


@pytest.fixture()
def benchmark(bench_dir):
    return load_benchmark(bench_dir)


@pytest.fixture()
def clean_benchmark(clean_bench_dir):
    return load_benchmark(clean_bench_dir)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
