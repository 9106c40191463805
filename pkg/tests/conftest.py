"""Shared fixtures."""

from __future__ import annotations

from pathlib import Path

import pytest

from tvrank.evaluation import EvaluationSettings
from tvrank.ingestion import Catalog, Dataset, ViewLog, dataset_origin
from tvrank.ltr import LambdaMartParams
from tvrank.synthgen import SynthData, generate, synthesize
from tvrank.wrmf import WrmfParams

from .common import SMALL_SYNTH, tiny_catalog, tiny_events


@pytest.fixture
def catalog() -> Catalog:
    """Return the hand-made catalog."""
    return tiny_catalog()


@pytest.fixture
def dataset(catalog: Catalog) -> Dataset:
    """Return the hand-made two-week dataset."""
    log = ViewLog(tuple(tiny_events()))
    return Dataset(catalog, log, dataset_origin(catalog, log))


@pytest.fixture(scope="session")
def synth_data() -> SynthData:
    """Return the small synthetic dataset in memory."""
    return synthesize(SMALL_SYNTH)


@pytest.fixture(scope="session")
def synth_files(tmp_path_factory: pytest.TempPathFactory) -> tuple[Path, Path, Path]:
    """Write the small synthetic dataset to disk."""
    return generate(SMALL_SYNTH, tmp_path_factory.mktemp("synth"))


@pytest.fixture(scope="session")
def synth_dataset(synth_files: tuple[Path, Path, Path]) -> Dataset:
    """Return the small synthetic dataset as ingested from disk."""
    epg, views, _ = synth_files
    return Dataset.load(epg, views)


@pytest.fixture
def fast_settings() -> EvaluationSettings:
    """Return evaluation settings with small models."""
    return EvaluationSettings(
        wrmf=WrmfParams(factors=8, iterations=4),
        funk_svd={"factors": 4, "epochs": 3},
        lambdamart=LambdaMartParams(rounds=8, min_samples_leaf=5, max_leaves=6),
        seed=5,
    )
