"""Relational correctness of small finite-state programs.

Programs are compared against specifications by competence domain, and
ordered by relative correctness; reliability follows from the ordering."""

from .correctness import (competence_domain, hasse, is_correct, more_correct,
                          more_correct_det, order_chain, projection, refines,
                          refinement_equiv_bruteforce, strictly_more_correct,
                          strictly_more_correct_det)
from .minilang import exec_prog, extract, extract_function, is_deterministic_prog, parse_prog
from .relalg import Relation, from_pairs, from_state_pairs
from .reliability import Distribution, chain_report, exact_reliability, mc_reliability
from .space import Space, StateSet, VarDecl
from .speclang import as_relation, check_domain_claim, eval_pred, parse_spec
from .workspace import Workspace, load_files

__version__ = "0.1.0"

__all__ = [
    "Distribution", "Relation", "Space", "StateSet", "VarDecl", "Workspace",
    "as_relation", "chain_report", "check_domain_claim", "competence_domain", "eval_pred",
    "exact_reliability", "exec_prog", "extract", "extract_function", "from_pairs",
    "from_state_pairs", "hasse", "is_correct", "is_deterministic_prog", "load_files",
    "mc_reliability", "more_correct", "more_correct_det", "order_chain", "parse_prog",
    "parse_spec", "projection", "refinement_equiv_bruteforce", "refines",
    "strictly_more_correct", "strictly_more_correct_det",
]
