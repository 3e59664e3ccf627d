"""Python front end for the IPDG Stokes-Brinkman eigenvalue solver.

Configs are plain dicts with the same keys as the CLI JSON files.
"""

import json

from . import _core
from ._core import NothingToMark, SingularShiftError, dorfler_mark, fit_rate

__all__ = [
    "NothingToMark",
    "SingularShiftError",
    "adapt",
    "check",
    "converge",
    "dorfler_mark",
    "fit_rate",
    "normalize_config",
    "solve",
    "sweep",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def normalize_config(config):
    return json.loads(_core.normalize_config(_text(config)))


def solve(config, out_dir=""):
    return _core.solve(_text(config), str(out_dir))


def sweep(config, out_dir="", threads=1):
    return _core.sweep(_text(config), str(out_dir), threads)


def converge(config, out_dir="", threads=1):
    return _core.converge(_text(config), str(out_dir), threads)


def adapt(config, out_dir=""):
    return _core.adapt(_text(config), str(out_dir))


def check(criteria=(), threads=1):
    return _core.check(list(criteria), threads)
