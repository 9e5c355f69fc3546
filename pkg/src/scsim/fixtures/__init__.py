"""Bundled desk-scale models, datasets and golden vectors.

Weights are fixed constants checked into the repository (training is out
of scope); every golden output was produced by the integer oracle and
cross-checked bit-exactly against the SC datapath before freezing.
Regenerate with tools/make_fixtures.py.
"""

from importlib import resources
from pathlib import Path

from ..netsim import Dataset, ModelGraph, load_dataset, load_model

MODELS = ("tiny_mlp", "tiny_cnn", "tiny_resnet")


def fixture_path(name: str) -> Path:
    path = resources.files(__package__).joinpath(name)
    return Path(str(path))


def load_fixture_model(name: str) -> ModelGraph:
    return load_model(fixture_path(f"{name}.model.json"))


def load_fixture_dataset(name: str) -> Dataset:
    return load_dataset(fixture_path(f"{name}.dataset.json"))
