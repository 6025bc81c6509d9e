"""Mechanism programs, their game semantics and an SPE Hoare-triple verifier."""

from .config import interpretation_from_dict, load_interpretation
from .equilibrium import (SupportTable, Witness, deviation_outcomes, find_spe_with_outcome,
                          is_nash, is_spe, supportable_outcomes, wpre)
from .hoare import (Derivation, HoareTriple, InexactError, SocialChoiceSpec, Verdict,
                    check_derivation, check_partial_correctness_embedding,
                    check_spe_implementation, check_validity, derive)
from .interpretation import (BOTTOM, BoolSort, EnumSort, EPredicate, Interpretation, IntRange,
                             Pairs, Predicate, TupleSort, Utility, eval_bool, eval_term,
                             extension, is_functional, lift_predicate, mix_intersect, predicate,
                             substitute, validate_interpretation, with_preferences)
from .semantics import Config, GameTree, NonTerminationError, build_game_tree, run_of, step, subgame_roots
from .syntax import (MPLSyntaxError, classify, parse_formula, parse_mechanism, parse_term,
                     show_bool, show_mechanism)

__all__ = [
    "BOTTOM", "BoolSort", "Config", "Derivation", "EPredicate", "EnumSort", "GameTree",
    "HoareTriple", "InexactError", "IntRange", "Interpretation", "MPLSyntaxError",
    "NonTerminationError", "Pairs", "Predicate", "SocialChoiceSpec", "SupportTable",
    "TupleSort", "Utility", "Verdict", "Witness", "build_game_tree", "check_derivation",
    "check_partial_correctness_embedding", "check_spe_implementation", "check_validity",
    "classify", "derive", "deviation_outcomes", "eval_bool", "eval_term", "extension",
    "find_spe_with_outcome", "interpretation_from_dict", "is_functional", "is_nash", "is_spe",
    "lift_predicate", "load_interpretation", "mix_intersect", "parse_formula",
    "parse_mechanism", "parse_term", "predicate", "run_of", "show_bool", "show_mechanism",
    "step", "subgame_roots", "substitute", "supportable_outcomes", "validate_interpretation",
    "with_preferences", "wpre",
]
