"""Body-brain evolution of modular robots with Lamarckian or Darwinian inheritance of learned CPG weights."""

from .brain import BrainGenotype, express, writeback
from .cppn import CppnGenome
from .evolution import DARWINIAN, LAMARCKIAN, EvolutionConfig, evolve
from .learner import RevDeConfig, learn
from .morphology import ModuleTree, develop
from .simulation import SurrogateParams, TaskSpec, evaluate, simulate

__version__ = "0.1.0"

__all__ = [
    "BrainGenotype",
    "CppnGenome",
    "DARWINIAN",
    "EvolutionConfig",
    "LAMARCKIAN",
    "ModuleTree",
    "RevDeConfig",
    "SurrogateParams",
    "TaskSpec",
    "develop",
    "evaluate",
    "evolve",
    "express",
    "learn",
    "simulate",
    "writeback",
]
