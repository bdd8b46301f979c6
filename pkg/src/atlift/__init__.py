"""Exact workbench for connections, Atiyah cocycles and the L-infinity lift
of the first semiregularity map on finite complexes of free modules."""

from atlift.bga import BGA, BGAElement, canned_model, validate
from atlift.connection import Connection, CyclicForm, atiyah_cocycle, nabla
from atlift.homcomplex import FreeComplex, HomForm, SectionForm
from atlift.linfty import LInftyMorphism, build_g

__all__ = [
    "BGA",
    "BGAElement",
    "canned_model",
    "validate",
    "FreeComplex",
    "HomForm",
    "SectionForm",
    "Connection",
    "CyclicForm",
    "atiyah_cocycle",
    "nabla",
    "LInftyMorphism",
    "build_g",
]

__version__ = "0.1.0"
