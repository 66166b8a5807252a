"""Runners for the three scenario modes."""

from runners.counterexample_runner import CounterexampleRunner
from runners.crosscheck_runner import CrosscheckRunner
from runners.evolve_runner import EvolveRunner

__all__ = ["CounterexampleRunner", "CrosscheckRunner", "EvolveRunner"]
