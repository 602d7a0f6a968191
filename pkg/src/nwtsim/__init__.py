"""Discrete nondeterministic simulation of mass-action reaction networks.

Engines: :mod:`nwtsim.nwt` (nondeterministic waiting time),
:mod:`nwtsim.ssa` (Gillespie direct method) and :mod:`nwtsim.ode`
(RK4 on the mass-action ODEs).
"""

from importlib import resources

from .ingest import parse_native, parse_sbml_subset, write_native
from .model import AVOGADRO, MembraneSystem, ModelError, prepare

__version__ = "0.1.0"

BUNDLED_MODELS = ("decay", "table2", "lotka", "circadian")


def bundled_model_text(name):
    name = name[:-6] if name.endswith(".model") else name
    if name not in BUNDLED_MODELS:
        raise KeyError(f"no bundled model named {name!r}")
    return resources.files(__package__).joinpath("models", f"{name}.model").read_text()


def load_bundled(name):
    return parse_native(bundled_model_text(name))


__all__ = ["AVOGADRO", "BUNDLED_MODELS", "MembraneSystem", "ModelError", "bundled_model_text",
           "load_bundled", "parse_native", "parse_sbml_subset", "prepare", "write_native"]
