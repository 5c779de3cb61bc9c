import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqgen.channel import sequential_generate
from seqgen.errors import EmptySupportError, GrammarError, UnknownSymbolError
from seqgen.motzkin import enumerate_walks
from seqgen.qpda import (BUNDLED, accepted_weight, bundled_grammar, compile_to_pda,
                         exact_superposition, motzkin_grammar, parse_grammar, pda_channel,
                         postselection_rate, push_pop_schedule, recognize, sample_emission,
                         tilted_probabilities)
from seqgen.seeding import derive_rng

SPIN1 = {"u": 1, "d": -1, "f": 0}


def balanced(s):
    return s.count("0") == s.count("1")


def catlike(s):
    return s.count("0") == s.count("1") or s.count("0") == s.count("2")


def is_motzkin(s):
    h = 0
    for c in s:
        h += {"u": 1, "d": -1, "f": 0}[c]
        if h < 0:
            return False
    return h == 0


MEMBERSHIP = {"motzkin1": is_motzkin, "balanced01": balanced, "catlike": catlike}


def test_single_rule_grammar():
    g = parse_grammar("S -> a @ 1.0")
    assert len(g.rules) == 1
    assert recognize(g, "a") == 1.0
    assert recognize(g, "aa") == 0.0
    st_ = exact_superposition(compile_to_pda(g), 1)
    assert st_.amplitude(("a",)) == pytest.approx(1.0)
    run = sample_emission(compile_to_pda(g), 1, 0)
    assert run.emitted == ("a",) and run.accepted


def test_parser_errors():
    with pytest.raises(GrammarError) as e:
        parse_grammar("S -> A B C @ 1.0\nA -> 'a'\nB -> 'b'\nC -> 'c'")
    assert any("Chomsky" in v for v in e.value.violations)
    with pytest.raises(GrammarError):
        parse_grammar("S -> A A @ 1\nA -> S A @ 0.5\nA -> 'a' @ 0.5")
    with pytest.raises(GrammarError):
        parse_grammar("S -> 'a' @ 0.7")
    with pytest.raises(GrammarError) as e:
        parse_grammar("start: S\nS -> 'a' @ 1\nthis is not a rule")
    assert e.value.line == 3


def test_unknown_terminal():
    with pytest.raises(UnknownSymbolError):
        recognize(parse_grammar("S -> a @ 1"), "ab")


def parse_tree_sum(rules, sym, s):
    """Brute-force sum over parse trees by recursive splitting (oracle)."""
    total = 0.0
    for lhs, rhs, w in rules:
        if lhs != sym:
            continue
        if len(rhs) == 1:
            total += w if s == rhs else 0.0
        else:
            for k in range(1, len(s)):
                total += w * parse_tree_sum(rules, rhs[0], s[:k]) * parse_tree_sum(rules, rhs[1], s[k:])
    return total


def test_aaa_parse_tree_sum():
    text = "S -> A A @ 0.5\nS -> a @ 0.5\nA -> A A @ 0.5\nA -> a @ 0.5"
    g = parse_grammar(text)
    rules = [("S", ("A", "A"), 0.5), ("S", ("a",), 0.5), ("A", ("A", "A"), 0.5), ("A", ("a",), 0.5)]
    # two trees, S -> (A A) A and S -> A (A A), each 0.5 * 0.5 * 0.5**3
    assert parse_tree_sum(rules, "S", ("a",) * 3) == pytest.approx(2 * 0.5 ** 5)
    assert recognize(g, "aaa") == pytest.approx(2 * 0.5 ** 5)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_grammars_valid(name):
    g = bundled_grammar(name)
    assert g.rules
    back = parse_grammar(g.to_text())
    assert back.restart == g.restart and len(back.rules) == len(g.rules)


@pytest.mark.parametrize("name", BUNDLED)
def test_languages_by_counting(name):
    g = bundled_grammar(name)
    member = MEMBERSHIP[name]
    nmax = 6 if name == "catlike" else 8
    for n in range(1, nmax + 1):
        for s in itertools.product(g.terminals, repeat=n):
            w = recognize(g, s)
            assert (w > 0) == member("".join(s)), s


@pytest.mark.parametrize("name", BUNDLED)
def test_pda_agrees_with_cyk(name):
    g = bundled_grammar(name)
    pda = compile_to_pda(g)
    nmax = 6 if name == "catlike" else 8
    for n in range(1, nmax + 1):
        for s in itertools.product(g.terminals, repeat=n):
            assert accepted_weight(pda, s) == pytest.approx(recognize(g, s), abs=1e-10)


def test_motzkin_grammar_accepts_enumerated_walks():
    g = bundled_grammar("motzkin1")
    inv = {1: "u", -1: "d", 0: "f"}
    for n in range(1, 9):
        walks = {tuple(inv[x] for x in w) for w in enumerate_walks(n, 1)}
        for s in itertools.product("udf", repeat=n):
            assert (recognize(g, s) > 0) == (s in walks)


def test_balanced_support_length4():
    st_ = exact_superposition(compile_to_pda(bundled_grammar("balanced01")), 4)
    expected = {s for s in itertools.product("01", repeat=4) if balanced("".join(s))}
    assert st_.support == expected and len(expected) == 6


def test_motzkin_support_length3():
    st_ = exact_superposition(compile_to_pda(bundled_grammar("motzkin1")), 3)
    assert len(st_.support) == 4


def test_motzkin_pda_matches_motzkin_state():
    from seqgen.motzkin import critical_ensemble, motzkin_state

    pda = compile_to_pda(bundled_grammar("motzkin1"))
    ref = motzkin_state(critical_ensemble(8, 1)).relabel({1: "u", -1: "d", 0: "f"})
    assert exact_superposition(pda, 8).fidelity(ref) > 1 - 1e-12


@pytest.mark.parametrize("name", BUNDLED)
@pytest.mark.parametrize("n", [2, 4, 6])
def test_exact_superposition_equals_channel(name, n):
    pda = compile_to_pda(bundled_grammar(name))
    try:
        ref = exact_superposition(pda, n)
    except EmptySupportError:
        return
    ch, start, final = pda_channel(pda, n)
    gen = sequential_generate(ch, start, n, final)
    assert gen.fidelity(ref) > 1 - 1e-10
    assert gen.success_probability == pytest.approx(ref.success_probability, rel=1e-10)


def test_amplitudes_sum_square_roots():
    # "aa" has one accepted trajectory with weight 0.5 * 0.5 * 0.5 under S -> A A, A -> a
    g = parse_grammar("S -> A A @ 0.5\nS -> a @ 0.5\nA -> a @ 1.0")
    st_ = exact_superposition(compile_to_pda(g), 2)
    assert st_.success_probability == pytest.approx(0.5)


def test_sampling_deterministic_and_weight_product():
    pda = compile_to_pda(bundled_grammar("catlike"))
    a = sample_emission(pda, 6, derive_rng(1, "t"))
    b = sample_emission(pda, 6, derive_rng(1, "t"))
    assert a == b
    for seed in range(50):
        run = sample_emission(pda, 5, seed)
        assert run.weight > 0
        assert run.accepted == (len(run.emitted) == 5 and not run.stack)


def test_motzkin_runs_prefix_monotone():
    pda = compile_to_pda(bundled_grammar("motzkin1"))
    for seed in range(300):
        run = sample_emission(pda, 20, seed)
        h = 0
        for c in run.emitted:
            h += SPIN1[c]
            assert h >= 0


def test_tilt_keeps_stochastic():
    pda = compile_to_pda(bundled_grammar("motzkin1"))
    for var in pda.variables:
        for tilt in ({"u": 1.0}, {"d": 1.0}, {"u": 0.3, "f": 0.7}, None):
            p = tilted_probabilities(pda, var, tilt)
            if p is not None:
                assert abs(np.sum(p) - 1.0) < 1e-12


def test_push_pop_schedule():
    pda = compile_to_pda(bundled_grammar("motzkin1"))
    sched = push_pop_schedule()
    n = 16
    runs = [sample_emission(pda, n, derive_rng(0, "pp", i), bias_schedule=sched) for i in range(2000)]
    assert np.mean([r.accepted for r in runs]) > 0.99
    depth = np.mean([r.depths for r in runs if r.accepted], axis=0)
    heights = np.cumsum([SPIN1[c] for c in runs[0].emitted])
    assert int(np.argmax(heights)) == n // 2 - 1
    assert abs(int(np.argmax(depth)) - (n // 2 - 1)) <= 1


def test_pinned_rate_flat_and_escaping_flagged():
    pinned = compile_to_pda(motzkin_grammar(0.2, 0.4, 0.4, 0.2))
    r = postselection_rate(pinned, [16, 32, 64, 128], 2000, seed=1)
    assert r.rates.min() > 0.4
    assert r.fit is not None and abs(r.fit.exponent) < 0.1
    escaping = compile_to_pda(motzkin_grammar(0.45, 0.15, 0.4, 0.45))
    with pytest.warns(RuntimeWarning):
        r = postselection_rate(escaping, [16, 32, 64, 128], 2000, seed=1)
    assert r.exponential


def test_wilson_intervals_bracket_rate():
    pda = compile_to_pda(bundled_grammar("motzkin1"))
    r = postselection_rate(pda, [8, 16, 32, 64], 400, seed=2)
    assert np.all(r.ci_low <= r.rates) and np.all(r.rates <= r.ci_high)
