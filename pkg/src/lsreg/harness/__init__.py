"""Phantoms, noise, configuration, file I/O, experiments and the command line."""

from .config import Config, ConfigError, load_config, parse_config
from .experiment import build_setup, check_stability, run_experiment, sweep_noise
from .noise import NoiseSpec, add_noise
from .phantom import Law, PhantomSpec, make_phantom, reference_phantom

__all__ = [
    "Config",
    "ConfigError",
    "Law",
    "NoiseSpec",
    "PhantomSpec",
    "add_noise",
    "build_setup",
    "check_stability",
    "load_config",
    "make_phantom",
    "parse_config",
    "reference_phantom",
    "run_experiment",
    "sweep_noise",
]
