"""Stage constructions: deterministic, inspectable, replayable."""

from .runtime import (ConstructionState, EventLog, FreshSource, RecordedSet,
                      SimulatedHaltOracle, config_hash, parse_config)
from .slftj import slftj_extract, serialize_collapses, private_element_check
from .hhsimple import hhsimple_witness
from .ea_double import ea_double_jump_reduction, family_extension
from .dark_minimal import dark_minimal_build, trivial_probe
from .high2 import high2_dark_minimal_build
from .pi2_chain import pi2_chain, chain_closures
from .sigma2_dark import sigma2_dark_build
from .dce import dce_diagonalize, audit_mind_changes, odd_block_element
from .notation_diag import notation_diagonalize

__all__ = [
    "ConstructionState", "EventLog", "FreshSource", "RecordedSet",
    "SimulatedHaltOracle", "config_hash", "parse_config",
    "slftj_extract", "serialize_collapses", "private_element_check",
    "hhsimple_witness", "ea_double_jump_reduction", "family_extension",
    "dark_minimal_build", "trivial_probe", "high2_dark_minimal_build",
    "pi2_chain", "chain_closures", "sigma2_dark_build",
    "dce_diagonalize", "audit_mind_changes", "odd_block_element",
    "notation_diagonalize",
]
