"""Second-quantized simulation of linear-optical circuits."""

from .algebra import (FockPolyState, ModeId, ModeLinearMap, Monomial, Polarization,
                      inner_product, mode, norm, product, substitute, superpose)
from .dsl import Circuit, bind, parse, pretty_print, validate
from .elements import (CoherentState, Element, basis_map, bs_map, coherent_apply,
                       hwp_map, pbs_map, pr_map)
from .engine import evolve_coherent, evolve_fock, simulate
from .expr import eval_expr
from .measurement import click_prob, coincidence_prob, mean_photons, report
from .oracle import compare, lift_to_fock, mode_unitary, oracle_simulate

__version__ = "0.1.0"

__all__ = [
    "Circuit", "CoherentState", "Element", "FockPolyState", "ModeId", "ModeLinearMap",
    "Monomial", "Polarization", "basis_map", "bind", "bs_map", "click_prob", "coherent_apply",
    "coincidence_prob", "compare", "eval_expr", "evolve_coherent", "evolve_fock", "hwp_map",
    "inner_product", "lift_to_fock", "mean_photons", "mode", "mode_unitary", "norm",
    "oracle_simulate", "parse", "pbs_map", "pr_map", "pretty_print", "product", "report",
    "simulate", "substitute", "superpose", "validate",
]
