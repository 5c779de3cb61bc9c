"""Weighted context-free grammars in Chomsky normal form.

File format, one item per line::

    # comment
    start: S
    restart: true          # optional, reseed S whenever the stack empties
    S -> A B @ 0.5
    A -> 'a' @ 1.0

A right-hand side with one token is a terminal (quotes optional); with two
tokens both are variables.  Weights of each variable's rules must sum to 1.
"""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import GrammarError, UnknownSymbolError

WEIGHT_TOL = 1e-12
BUNDLED = ("motzkin1", "balanced01", "catlike")

_RULE = re.compile(r"^\s*(\S+)\s*->\s*(.*?)\s*(?:@\s*(\S+))?\s*$")
_DIRECTIVE = re.compile(r"^\s*(start|restart)\s*:\s*(\S+)\s*$")


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple
    weight: float

    @property
    def is_terminal(self) -> bool:
        return len(self.rhs) == 1

    def __str__(self):
        rhs = f"'{self.rhs[0]}'" if self.is_terminal else " ".join(self.rhs)
        return f"{self.lhs} -> {rhs} @ {self.weight!r}"


def _violations(start, rules) -> list[str]:
    out = []
    variables = {r.lhs for r in rules}
    if start not in variables:
        out.append(f"start symbol {start!r} has no rules")
    totals = defaultdict(float)
    for r in rules:
        totals[r.lhs] += r.weight
        if not r.weight > 0:
            out.append(f"{r}: weight must be positive")
        if len(r.rhs) not in (1, 2):
            out.append(f"{r}: not in Chomsky normal form (right-hand side of length {len(r.rhs)})")
            continue
        if len(r.rhs) == 2:
            for v in r.rhs:
                if v == start:
                    out.append(f"{r}: start symbol appears on a right-hand side")
                elif v not in variables:
                    out.append(f"{r}: variable {v!r} has no rules")
    for v, t in totals.items():
        if abs(t - 1.0) > WEIGHT_TOL:
            out.append(f"rules of {v} have total weight {t!r}, expected 1")
    return out


@dataclass(frozen=True, eq=False)
class CnfGrammar:
    """Validated weighted CNF grammar."""

    start: str
    rules: tuple
    restart: bool = False

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        bad = _violations(self.start, self.rules)
        if bad:
            raise GrammarError(f"{len(bad)} grammar violation(s): " + "; ".join(bad), violations=bad)

    @property
    def variables(self) -> tuple:
        seen = {}
        for r in self.rules:
            seen.setdefault(r.lhs, None)
        return tuple(seen)

    @property
    def terminals(self) -> tuple:
        return tuple(sorted({r.rhs[0] for r in self.rules if r.is_terminal}))

    def rules_of(self, var) -> tuple:
        return tuple(r for r in self.rules if r.lhs == var)

    def to_text(self) -> str:
        lines = [f"start: {self.start}"]
        if self.restart:
            lines.append("restart: true")
        lines += [str(r) for r in self.rules]
        return "\n".join(lines) + "\n"


def parse_grammar(text: str) -> CnfGrammar:
    """Parse the text format described in the module docstring.

    Raises
    ------
    GrammarError
        On a syntax error (with line number) or when the rule set violates
        CNF, the start-symbol restriction or per-variable normalisation.
    """
    start = None
    restart = False
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DIRECTIVE.match(line)
        if m:
            key, val = m.groups()
            if key == "start":
                start = val
            else:
                if val.lower() not in ("true", "false", "yes", "no", "1", "0"):
                    raise GrammarError(f"bad restart flag {val!r}", line=lineno)
                restart = val.lower() in ("true", "yes", "1")
            continue
        m = _RULE.match(line)
        if not m:
            raise GrammarError(f"cannot parse {raw.strip()!r}", line=lineno)
        lhs, rhs_text, wtext = m.groups()
        tokens = rhs_text.split()
        if not tokens:
            raise GrammarError("empty right-hand side", line=lineno)
        try:
            weight = float(wtext) if wtext is not None else 1.0
        except ValueError:
            raise GrammarError(f"bad weight {wtext!r}", line=lineno) from None
        if len(tokens) == 1:
            tok = tokens[0]
            if len(tok) >= 2 and tok[0] == tok[-1] and tok[0] in "'\"":
                tok = tok[1:-1]
            rhs = (tok,)
        else:
            if any(t[0] in "'\"" for t in tokens):
                raise GrammarError("terminals must appear alone on a right-hand side", line=lineno)
            rhs = tuple(tokens)
        rules.append(Rule(lhs, rhs, weight))
    if not rules:
        raise GrammarError("grammar has no rules")
    if start is None:
        start = "S" if any(r.lhs == "S" for r in rules) else rules[0].lhs
    return CnfGrammar(start, tuple(rules), restart)


def load_grammar(path) -> CnfGrammar:
    return parse_grammar(Path(path).read_text())


def bundled_grammar(name: str) -> CnfGrammar:
    """One of the grammars shipped in ``seqgen/data``."""
    fname = name if name.endswith(".cnf") else f"{name}.cnf"
    text = resources.files("seqgen").joinpath("data", fname).read_text()
    return parse_grammar(text)


def resolve_grammar(spec: str) -> CnfGrammar:
    """A file path, or the name of a bundled grammar."""
    p = Path(spec)
    if p.exists():
        return load_grammar(p)
    try:
        return bundled_grammar(spec)
    except FileNotFoundError:
        raise GrammarError(f"no grammar file or bundled grammar named {spec!r}") from None


def inside_table(grammar: CnfGrammar, string) -> list:
    """CYK inside weights: ``table[i][j][A]`` for the substring ``string[i:j]``."""
    string = tuple(string)
    known = set(grammar.terminals)
    for a in string:
        if a not in known:
            raise UnknownSymbolError(f"unknown terminal {a!r}")
    n = len(string)
    table = [[defaultdict(float) for _ in range(n + 1)] for _ in range(n + 1)]
    unary = defaultdict(list)
    binary = []
    for r in grammar.rules:
        if r.is_terminal:
            unary[r.rhs[0]].append(r)
        else:
            binary.append(r)
    for i, a in enumerate(string):
        for r in unary[a]:
            table[i][i + 1][r.lhs] += r.weight
    for span in range(2, n + 1):
        for i in range(n - span + 1):
            j = i + span
            cell = table[i][j]
            for k in range(i + 1, j):
                left, right = table[i][k], table[k][j]
                if not left or not right:
                    continue
                for r in binary:
                    b, c = r.rhs
                    if b in left and c in right:
                        cell[r.lhs] += r.weight * left[b] * right[c]
    return table


def recognize(grammar: CnfGrammar, string) -> float:
    """Total derivation weight of ``string``; zero outside the language.

    For grammars with ``restart`` the string may be any concatenation of
    strings derived from the start symbol, and the weights of all
    factorisations add.
    """
    string = tuple(string)
    n = len(string)
    if n == 0:
        return 0.0
    table = inside_table(grammar, string)
    S = grammar.start
    if not grammar.restart:
        return float(table[0][n].get(S, 0.0))
    reach = np.zeros(n + 1)
    reach[0] = 1.0
    for j in range(1, n + 1):
        reach[j] = sum(reach[i] * table[i][j].get(S, 0.0) for i in range(j))
    return float(reach[n])
