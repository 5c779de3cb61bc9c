"""Weighted grammars and the push-down machines they compile to."""
from .grammar import (BUNDLED, CnfGrammar, Rule, bundled_grammar, inside_table,
                      load_grammar, parse_grammar, recognize, resolve_grammar)
from .machine import (EmissionRun, PostselectionResult, Transition, WeightedPda,
                      accepted_weight, compile_to_pda, exact_superposition,
                      motzkin_grammar, pda_channel, postselection_rate,
                      push_pop_schedule, sample_emission, tilted_probabilities)

__all__ = [
    "BUNDLED", "CnfGrammar", "Rule", "bundled_grammar", "inside_table", "load_grammar",
    "parse_grammar", "recognize", "resolve_grammar", "EmissionRun", "PostselectionResult",
    "Transition", "WeightedPda", "accepted_weight", "compile_to_pda", "exact_superposition",
    "motzkin_grammar", "pda_channel", "postselection_rate", "push_pop_schedule",
    "sample_emission", "tilted_probabilities",
]
