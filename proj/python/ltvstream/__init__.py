"""Online Bayesian lifetime-value regression over mini-batch streams."""

import json

from . import _core
from ._core import (
    CapacityExhausted,
    ConfigError,
    IoError,
    LtvError,
    OnlineScaler,
    OrdinalEncoder,
    SamplerError,
    StreamError,
    StreamingOrdinalEncoder,
    check_model_gradient,
    logpdf_normal,
    logpdf_student_t,
    lppd,
    model_dimension,
    model_log_density,
)

__all__ = [
    "CapacityExhausted",
    "ConfigError",
    "IoError",
    "LtvError",
    "OnlineScaler",
    "OrdinalEncoder",
    "SamplerError",
    "StreamError",
    "StreamingOrdinalEncoder",
    "check_model_gradient",
    "default_run_config",
    "demo_spec",
    "generate",
    "logpdf_normal",
    "logpdf_student_t",
    "lppd",
    "model_dimension",
    "model_log_density",
    "run",
]


def demo_spec(name="mixed-tails", seed=1):
    return json.loads(_core.demo_spec(name, seed))


def generate(spec):
    """Rows of a synthetic spec (dict or JSON text) as (categories, targets)."""
    if not isinstance(spec, str):
        spec = json.dumps(spec)
    return _core.generate(spec)


def default_run_config():
    return json.loads(_core.default_run_config())


def run(config, verbose=False):
    """Run the online pipeline. `config` uses the manifest schema; missing
    keys take their defaults."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return _core.run(config, verbose)
