"""Counterfactual explanations for regression models.

Thin wrapper over the native ``_core`` module. Queries are dicts of raw
feature values (or lists holding an already encoded row); results are
plain dicts.
"""

from __future__ import annotations

import json
from os import PathLike
from typing import Any, Mapping, Sequence, Union

from . import _core
from ._core import DataError, ModelFormatError

__version__ = _core.__version__

Query = Union[Mapping[str, Any], Sequence[float]]

__all__ = [
    "DataError",
    "Model",
    "ModelFormatError",
    "make_synthetic",
    "train_ce",
    "train_regressor",
]


def _config(config: Mapping[str, Any] | None) -> str:
    return json.dumps(config) if config else ""


def make_synthetic(n: int, out: str | PathLike, seed: int = 0, noise: float = 0.05) -> None:
    """Write the synthetic table with known latent factors to a CSV file."""
    _core.make_synthetic(n, seed, noise, str(out))


def train_regressor(data: str | PathLike, out: str | PathLike, target: str = "",
                    config: Mapping[str, Any] | None = None) -> None:
    _core.train_regressor(str(data), str(out), target, _config(config))


def train_ce(data: str | PathLike, model: str | PathLike, out: str | PathLike, with_gdl: bool = True,
             config: Mapping[str, Any] | None = None) -> None:
    _core.train_ce(str(data), str(model), str(out), with_gdl, _config(config))


class Model:
    """A trained model file opened for prediction and generation."""

    def __init__(self, path: str | PathLike):
        self._model = _core.Model(str(path))

    @property
    def fingerprint(self) -> str:
        return self._model.fingerprint

    @property
    def methods(self) -> list[str]:
        return ["ours", "gdl"] if self._model.has_gdl else ["ours"]

    @property
    def schema(self) -> dict:
        return json.loads(self._model.schema_json())

    def encode(self, query: Query) -> list[float]:
        return self._model.encode(json.dumps(_plain(query)))

    def predict(self, query: Query) -> float:
        """Model prediction in scaled label units, unclamped."""
        return self._model.predict(json.dumps(_plain(query)))

    def generate(self, query: Query, target: float, tolerance: float = 0.05, steps: int = 50,
                 method: str = "ours", timing: bool = False) -> dict:
        out = self._model.generate(json.dumps(_plain(query)), target, tolerance, steps, method, timing)
        return json.loads(out)


def _plain(query: Query) -> Any:
    if isinstance(query, Mapping):
        return dict(query)
    return [float(v) for v in query]
