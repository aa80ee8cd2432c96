"""Wind power curve modelling from scatter images.

Configurations are plain dictionaries with the same layout as the JSON run
configuration printed by ``wpcm show-config``; omitted keys keep their defaults.
"""

import json as _json

import numpy as _np

from . import _core
from ._core import ConfigError, CorruptFile, DomainError, ExtractionFailure

__all__ = [
    "ConfigError",
    "CorruptFile",
    "DomainError",
    "ExtractionFailure",
    "Model",
    "default_config",
    "desk_profile",
    "eval_curve",
    "eval_wpc",
    "evaluate",
    "extract",
    "fit_benchmark",
    "marker_size_for_test",
    "predict_benchmark",
    "render_curve",
    "render_scatter",
    "sample_wpc_function",
    "synthesize_sample",
]


def _dump(cfg):
    return "" if cfg is None else _json.dumps(cfg)


def default_config():
    return _json.loads(_core.default_config())


def desk_profile():
    return _json.loads(_core.desk_profile())


def sample_wpc_function(seed):
    """Draw a ground-truth curve; returns ``(family, params)``."""
    return _core.sample_wpc_function(seed)


def eval_wpc(family, params, x):
    return _core.eval_wpc(family, list(params), _np.asarray(x, dtype=float))


def synthesize_sample(seed, config=None):
    """One synthetic SCADA scatter with labels and its generating curve."""
    return _core.synthesize_sample(seed, _dump(config))


def render_scatter(x, y, raster=None, marker_size=None):
    return _core.render_scatter(_np.asarray(x, dtype=float), _np.asarray(y, dtype=float), _dump(raster), marker_size)


def render_curve(family, params, raster=None):
    return _core.render_curve(family, list(params), _dump(raster))


def marker_size_for_test(n_data, raster=None):
    return _core.marker_size_for_test(n_data, _dump(raster))


def extract(image, raster=None, extraction=None):
    """Piecewise curve record (dict) from a neat curve image of shape (H, W, 3)."""
    return _json.loads(_core.extract(_np.asarray(image, dtype=_np.float32), _dump(raster), _dump(extraction)))


def eval_curve(curve, x):
    return _core.eval_curve(_json.dumps(curve), _np.asarray(x, dtype=float))


def evaluate(pred, truth, speed, cws, alphas=(0.05, 0.10, 0.15)):
    report = _core.evaluate(
        _np.asarray(pred, dtype=float), _np.asarray(truth, dtype=float), _np.asarray(speed, dtype=float), cws, list(alphas)
    )
    return _json.loads(report)


def fit_benchmark(kind, x, y, config=None):
    """Fit one of ``de``, ``ade``, ``plf4``, ``plf5``, ``snn`` or ``spline``; returns a model record."""
    return _json.loads(_core.fit_benchmark(kind, _np.asarray(x, dtype=float), _np.asarray(y, dtype=float), _dump(config)))


def predict_benchmark(model, x):
    return _core.predict_benchmark(_json.dumps(model), _np.asarray(x, dtype=float))


class Model:
    """A trained generator loaded from a checkpoint."""

    def __init__(self, path):
        self._m = _core.Model.load(str(path))

    @property
    def config(self):
        return _json.loads(self._m.config)

    @property
    def parameter_count(self):
        return self._m.parameter_count

    @property
    def trained(self):
        return self._m.trained

    def infer(self, image):
        return self._m.infer(_np.asarray(image, dtype=_np.float32))

    def model_curve(self, x, y, raster=None, extraction=None):
        """Render, translate and extract; returns the curve record."""
        out = self._m.model_curve(
            _np.asarray(x, dtype=float), _np.asarray(y, dtype=float), _dump(raster), _dump(extraction)
        )
        return _json.loads(out)
