"""Projector loop-representation QMC for bipartite Heisenberg models, with exact oracles."""

__version__ = "0.1.0"

from .hamiltonian import (
    AFM,
    FM,
    VERTEX,
    BipartiteModel,
    OperatorSlot,
    complete_bipartite_model,
    cycle_model,
    load_model,
    norm_bound,
    operator_alphabet,
    path_model,
    required_B,
    star_model,
    validate,
)
from .loopcfg import decompose
from .chain import ChainParams, run, run_arrays
from .estimators import estimate_energy, estimate_neel

__all__ = [
    "AFM", "FM", "VERTEX", "BipartiteModel", "ChainParams", "OperatorSlot", "complete_bipartite_model",
    "cycle_model", "decompose", "estimate_energy", "estimate_neel", "load_model", "norm_bound",
    "operator_alphabet", "path_model", "required_B", "run", "run_arrays", "star_model", "validate",
]
