"""Three-leg lattice running a compiled CNF grammar.

Upper leg: the head marker ``E`` at column ``e`` (column 0 is the wall and
means an empty stack).  Middle leg: stack variables at columns 1..e, plus
the transient symbols ``X``.  Lower leg: conveyor particles, injected fresh
every second cycle.

A cycle has four stages, applied where a fresh particle sits under the head:

1. substitution ``A -> B C`` writes ``C`` at ``e`` and ``B`` at ``e+1``;
   ``A -> a`` writes ``a`` at ``e`` and ``X`` at ``e+1`` (superposed over rules)
2. if ``X`` sits at ``e+1`` the middle cell ``e`` is swapped with the particle
3. ``X`` is reset to 0
4. the head moves right if the particle is still fresh and left otherwise,
   then the belt shifts one column.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..channel import RadiatedState
from ..errors import CycleInvariantError, GeometryError
from ..qpda.grammar import CnfGrammar
from .two_leg import GateStats

FRESH = ("fresh",)
X = ("X",)
INJECT_PERIOD = 2


class ThreeLegConfig(NamedTuple):
    e: int
    middle: tuple       # middle-leg columns 1..len(middle)
    belt: tuple         # (cell, symbol, particle_id)
    harvested: tuple

    def mid(self, col: int):
        return self.middle[col - 1] if 1 <= col <= len(self.middle) else 0

    def lower(self, col: int):
        for cell, sym, pid in self.belt:
            if cell == col:
                return sym, pid
        return None, None


def _set_mid(middle: tuple, col: int, val) -> tuple:
    m = list(middle)
    while len(m) < col:
        m.append(0)
    m[col - 1] = val
    while m and m[-1] == 0:
        m.pop()
    return tuple(m)


def _set_lower(belt: tuple, col: int, val) -> tuple:
    return tuple((c, val if c == col else s, pid) for c, s, pid in belt)


def _rules_by_lhs(grammar: CnfGrammar) -> dict:
    out = defaultdict(list)
    for r in grammar.rules:
        out[r.lhs].append(r)
    return out


def substitution(amps: dict, rules: dict, start: str, restart: bool, log=None, cycle=0) -> dict:
    """Stage 1 on every branch whose head sees a fresh particle."""
    out = defaultdict(complex)
    for cfg, a in amps.items():
        low, pid = cfg.lower(cfg.e)
        if low != FRESH:
            out[cfg] += a
            continue
        if cfg.e == 0:
            if restart:
                # reseed: the start variable appears under the head at column 1
                out[cfg._replace(e=1, middle=_set_mid(cfg.middle, 1, start))] += a
            else:
                out[cfg] += a
            continue
        A = cfg.mid(cfg.e)
        if log is not None:
            log.append((cycle, cfg.e, pid))
        for r in rules[A]:
            amp = a * math.sqrt(r.weight)
            if r.is_terminal:
                m = _set_mid(_set_mid(cfg.middle, cfg.e, r.rhs[0]), cfg.e + 1, X)
            else:
                b, c = r.rhs
                m = _set_mid(_set_mid(cfg.middle, cfg.e, c), cfg.e + 1, b)
            out[cfg._replace(middle=m)] += amp
    return dict(out)


def x_swap(amps: dict) -> dict:
    """Stage 2: move the terminal next to an ``X`` onto the particle below it."""
    out = defaultdict(complex)
    for cfg, a in amps.items():
        e = cfg.e
        if e >= 1 and cfg.mid(e + 1) == X:
            low, _ = cfg.lower(e)
            term = cfg.mid(e)
            cfg = cfg._replace(middle=_set_mid(cfg.middle, e, low if low != FRESH else 0),
                               belt=_set_lower(cfg.belt, e, term))
        out[cfg] += a
    return dict(out)


def reset_x(amps: dict) -> dict:
    """Stage 3: X -> 0, then verify that no X survives."""
    out = defaultdict(complex)
    for cfg, a in amps.items():
        m = tuple(0 if v == X else v for v in cfg.middle)
        while m and m[-1] == 0:
            m = m[:-1]
        out[cfg._replace(middle=m)] += a
    for cfg in out:
        if X in cfg.middle:
            raise CycleInvariantError("X symbol persists after reset")
    return dict(out)


def restore_and_shift(amps: dict, extraction: int) -> dict:
    """Stage 4: move the head, then advect the belt.

    A particle under a nonempty head has just been processed: if it is
    still fresh the rule was a push and the head follows the new top to
    the right, otherwise it carries a terminal and the head steps left.
    """
    out = defaultdict(complex)
    for cfg, a in amps.items():
        e = cfg.e
        low, _ = cfg.lower(e)
        if e >= 1 and low is not None:
            e = e + 1 if low == FRESH else e - 1
        belt, harvested = [], list(cfg.harvested)
        for c, s, pid in cfg.belt:
            if c + 1 >= extraction:
                harvested.append(s)
            else:
                belt.append((c + 1, s, pid))
        out[ThreeLegConfig(e, cfg.middle, tuple(belt), tuple(harvested))] += a
    return dict(out)


@dataclass
class ThreeLegResult:
    state: RadiatedState
    stats: GateStats
    norms: np.ndarray
    pruned_weight: float
    cycles: int


def run_three_leg(grammar: CnfGrammar, n: int, width: int | None = None) -> ThreeLegResult:
    """Full-superposition simulation of the grammar emitting ``n`` terminals."""
    width = n + 4 if width is None else width
    extraction = width - 1
    rules = _rules_by_lhs(grammar)
    if grammar.restart:
        init = ThreeLegConfig(0, (), (), ())
    else:
        init = ThreeLegConfig(1, (grammar.start,), (), ())
    amps = {init: 1.0}
    injected = 0
    cycle = 0
    pruned = 0.0
    norms, ts, gates, widths = [], [], [], []
    while True:
        if cycle % INJECT_PERIOD == 0 and injected < n:
            amps = {c._replace(belt=((0, FRESH, injected),) + c.belt): a for c, a in amps.items()}
            injected += 1
        log = []
        amps = substitution(amps, rules, grammar.start, grammar.restart, log, cycle)
        amps = x_swap(amps)
        amps = reset_x(amps)
        ts.append(cycle)
        gates.append(len({entry[1] for entry in log}))
        es = [c.e for c in amps]
        widths.append(max(es) - min(es) + 1 if es else 0)
        for cfg in amps:
            if cfg.e + 1 >= extraction:
                raise GeometryError(f"head at column {cfg.e} reached the extraction column {extraction}")
        amps = restore_and_shift(amps, extraction)
        keep = {}
        for cfg, a in amps.items():
            fresh = sum(1 for c, s, pid in cfg.belt if s == FRESH) + (n - injected)
            if len(cfg.middle) > fresh:
                pruned += abs(a) ** 2
            else:
                keep[cfg] = a
        amps = keep
        norms.append(math.sqrt(math.fsum(abs(a) ** 2 for a in amps.values()) + pruned))
        cycle += 1
        if injected == n and all(not c.belt for c in amps):
            break
        if not amps:
            break
    final = defaultdict(complex)
    for cfg, a in amps.items():
        if cfg.e == 0 and not cfg.middle and all(s != FRESH for s in cfg.harvested):
            final[cfg.harvested] += a
    prob = math.fsum(abs(a) ** 2 for a in final.values())
    state = RadiatedState(n, grammar.terminals, dict(final), prob)
    stats = GateStats(np.asarray(ts), np.asarray(gates), np.asarray(widths), {"width": width})
    return ThreeLegResult(state, stats, np.asarray(norms), pruned, cycle)
