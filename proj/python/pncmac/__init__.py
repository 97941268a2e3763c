"""Python front end of the PNC-MAC simulator."""
import json

from . import _core
from ._core import (
    ConfigError,
    DecodeError,
    ber_dbpsk_chip,
    ber_despread,
    ber_dnf_chip,
    decode_frame,
    encode_frame,
    frame_airtime_us,
    per_threshold_dbm,
    q_function,
)


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def run(config, seed=1, trace=False):
    """One run of `config` (dict or JSON text). Returns the summary as a dict."""
    return _core.run(_text(config), seed, trace)


def run_scenario(config):
    """All seeds of `config`, as CSV text with a header row."""
    return _core.run_scenario_csv(_text(config))


def effective_config(config):
    return json.loads(_core.effective_config(_text(config)))


__all__ = [
    "ConfigError", "DecodeError", "run", "run_scenario", "effective_config",
    "q_function", "ber_dbpsk_chip", "ber_dnf_chip", "ber_despread", "per_threshold_dbm",
    "encode_frame", "decode_frame", "frame_airtime_us",
]
