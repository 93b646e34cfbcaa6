"""Symbolic quantification of cache side-channel leakage in small programs."""

from .cacheconfig import CacheConfig, Policy, parse_cache_spec
from .observers import Observation, Observer, constrain, observe
from .program import MiniProgram, bundled, load_program, parse_program
from .quantify import LeakReport, Mode, QuantifyConfig, quantify
from .simulate import histogram, simulate
from .solver import BackendConfig, BackendKind, EnumerateBackend, SmtBackend, Verdict

__version__ = "0.1.0"

__all__ = [
    "BackendConfig", "BackendKind", "CacheConfig", "EnumerateBackend", "LeakReport", "MiniProgram",
    "Mode", "Observation", "Observer", "Policy", "QuantifyConfig", "SmtBackend", "Verdict",
    "bundled", "constrain", "histogram", "load_program", "observe", "parse_cache_spec",
    "parse_program", "quantify", "simulate",
]
