"""Shared fixtures and dataset builders."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from dxml import Dataset, LabelSet, SparseVector


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running end-to-end checks")


def random_dataset(
    rng: np.random.Generator,
    n: int = 30,
    d: int = 12,
    L: int = 6,
    max_labels: int = 3,
    allow_unlabeled: bool = False,
) -> Dataset:
    """Random sparse dataset with nonzero values and valid indices."""
    points = []
    for _ in range(n):
        nnz = int(rng.integers(0, min(d, 6) + 1))
        idx = np.sort(rng.choice(d, size=nnz, replace=False)).astype(np.int32)
        val = rng.standard_normal(nnz)
        val[val == 0.0] = 1.0
        low = 0 if allow_unlabeled else 1
        n_labels = int(rng.integers(low, max_labels + 1))
        labels = rng.choice(L, size=n_labels, replace=False)
        points.append(
            (SparseVector(idx, val), LabelSet.from_iterable(labels.tolist()))
        )
    return Dataset(num_points=n, num_features=d, num_labels=L, points=points)


def planted_dataset(n: int, L: int, seed: int, noise_features: int = 6) -> Dataset:
    """Labels are recoverable: label j owns features 2j and 2j+1."""
    rng = np.random.default_rng(seed)
    d = 2 * L + noise_features
    points = []
    for _ in range(n):
        labels = sorted(rng.choice(L, size=int(rng.integers(1, 4)), replace=False).tolist())
        feats: dict[int, float] = {}
        for j in labels:
            feats[2 * j] = 1.0
            feats[2 * j + 1] = 1.0
        feats[2 * L + int(rng.integers(noise_features))] = 0.5
        points.append(
            (
                SparseVector.from_pairs(sorted(feats.items())),
                LabelSet.from_iterable(labels),
            )
        )
    return Dataset(num_points=n, num_features=d, num_labels=L, points=points)


def _benchmark_paths(name: str) -> tuple[Path, Path] | None:
    train = os.environ.get(f"DXML_{name.upper()}_TRAIN")
    test = os.environ.get(f"DXML_{name.upper()}_TEST")
    if train and test and Path(train).is_file() and Path(test).is_file():
        return Path(train), Path(test)
    root = os.environ.get("DXML_DATA_DIR")
    if root:
        train_p = Path(root) / f"{name}_train.txt"
        test_p = Path(root) / f"{name}_test.txt"
        if train_p.is_file() and test_p.is_file():
            return train_p, test_p
    return None


@pytest.fixture(scope="session")
def data_files(tmp_path_factory):
    """Planted-structure train/test files shared by the command-line tests."""
    from dxml import save_repo_file

    root = tmp_path_factory.mktemp("data")
    train = str(root / "train.txt")
    test = str(root / "test.txt")
    save_repo_file(planted_dataset(n=60, L=6, seed=0), train)
    save_repo_file(planted_dataset(n=20, L=6, seed=1), test)
    return train, test


@pytest.fixture(scope="session")
def bibtex_files():
    paths = _benchmark_paths("bibtex")
    if paths is None:
        pytest.skip(
            "Bibtex benchmark files not found; set DXML_DATA_DIR or "
            "DXML_BIBTEX_TRAIN/DXML_BIBTEX_TEST"
        )
    return paths


@pytest.fixture(scope="session")
def mediamill_files():
    paths = _benchmark_paths("mediamill")
    if paths is None:
        pytest.skip(
            "MediaMill benchmark files not found; set DXML_DATA_DIR or "
            "DXML_MEDIAMILL_TRAIN/DXML_MEDIAMILL_TEST"
        )
    return paths
