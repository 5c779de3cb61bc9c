"""Stack machine compiled from a CNF grammar.

The stack holds grammar variables with the top at the end of the tuple.
With variable ``A`` on top the machine either replaces it by ``B C``
(``B`` ends on top, a silent move) or pops it while emitting the terminal
``a``.  Trajectory weights are products of rule weights; coherent
amplitudes are square roots of trajectory weights summed per string.
"""
from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.stats import binomtest

from ..channel import KrausChannel, RadiatedState
from ..errors import EmptySupportError
from ..fitting import FitReport, fit_exponent
from ..seeding import derive_rng
from .grammar import CnfGrammar

PUSH = "push"
EMIT = "emit"


@dataclass(frozen=True)
class Transition:
    action: str
    weight: float
    payload: tuple  # (B, C) for push, (a,) for emit


@dataclass(frozen=True, eq=False)
class WeightedPda:
    start: str
    transitions: dict
    terminals: tuple
    restart: bool = False
    _first: dict = field(init=False, repr=False)

    def __post_init__(self):
        for var, ts in self.transitions.items():
            tot = math.fsum(t.weight for t in ts)
            if abs(tot - 1.0) > 1e-12:
                raise ValueError(f"transitions of {var} sum to {tot!r}")
        object.__setattr__(self, "_first", _first_terminal(self))

    @property
    def variables(self) -> tuple:
        return tuple(self.transitions)

    def first_terminal(self, var) -> dict:
        """Distribution of the next emitted terminal with ``var`` on top."""
        return self._first[var]


def compile_to_pda(grammar: CnfGrammar) -> WeightedPda:
    trans = defaultdict(list)
    for r in grammar.rules:
        if r.is_terminal:
            trans[r.lhs].append(Transition(EMIT, r.weight, r.rhs))
        else:
            trans[r.lhs].append(Transition(PUSH, r.weight, r.rhs))
    return WeightedPda(grammar.start, {k: tuple(v) for k, v in trans.items()},
                       grammar.terminals, grammar.restart)


def _first_terminal(pda: WeightedPda) -> dict:
    # g(A) = sum_emit w e_a + sum_push w g(B): one linear solve per terminal
    vs = list(pda.transitions)
    idx = {v: i for i, v in enumerate(vs)}
    n, m = len(vs), len(pda.terminals)
    tix = {a: j for j, a in enumerate(pda.terminals)}
    P = np.zeros((n, n))
    E = np.zeros((n, m))
    for v, ts in pda.transitions.items():
        for t in ts:
            if t.action == PUSH:
                P[idx[v], idx[t.payload[0]]] += t.weight
            else:
                E[idx[v], tix[t.payload[0]]] += t.weight
    G = np.linalg.lstsq(np.eye(n) - P, E, rcond=None)[0]
    G = np.clip(G, 0.0, None)
    return {v: {a: float(G[idx[v], tix[a]]) for a in pda.terminals} for v in vs}


# -- bias schedules ------------------------------------------------------------

Schedule = Callable[[int, int], dict]


def push_pop_schedule(push="u", pop="d") -> Schedule:
    """Force ``push`` for the first half of the emissions and ``pop`` afterwards."""
    def schedule(t: int, n: int) -> dict:
        return {push: 1.0} if t < n // 2 else {pop: 1.0}
    return schedule


def tilted_probabilities(pda: WeightedPda, var, tilt: dict | None):
    """Transition probabilities from ``var`` under a terminal tilt.

    Each transition is reweighted by the tilt of the next terminal it leads
    to and the result renormalised.  Returns None if every transition is
    suppressed.
    """
    ts = pda.transitions[var]
    w = np.array([t.weight for t in ts])
    if tilt is None:
        return w
    h = np.empty(len(ts))
    for i, t in enumerate(ts):
        if t.action == EMIT:
            h[i] = tilt.get(t.payload[0], 0.0)
        else:
            g = pda.first_terminal(t.payload[0])
            h[i] = sum(g[a] * f for a, f in tilt.items() if a in g)
    q = w * h
    s = q.sum()
    if s <= 0:
        return None
    return q / s


# -- sampling ------------------------------------------------------------------

@dataclass(frozen=True)
class EmissionRun:
    emitted: tuple
    stack: tuple
    weight: float
    steps: int
    accepted: bool
    depths: tuple = ()


def sample_emission(pda: WeightedPda, n: int, rng=None, max_steps: int | None = None,
                    bias_schedule: Schedule | None = None) -> EmissionRun:
    """Run the machine until ``n`` terminals are emitted.

    Accepted runs end with an empty stack.  Runs that halt early (halting
    grammars), exceed ``max_steps`` (default ``64 n``) or meet a schedule
    that suppresses every move are rejected.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    max_steps = 64 * n if max_steps is None else max_steps
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    trans = pda.transitions
    cum = {v: np.cumsum([t.weight for t in ts]) for v, ts in trans.items()}
    stack = [pda.start]
    emitted = []
    depths = []
    logw = 0.0
    steps = 0
    buf = rng.random(256)
    bi = 0
    while steps < max_steps:
        if not stack:
            if pda.restart:
                stack.append(pda.start)
            else:
                break
        top = stack[-1]
        if bias_schedule is None:
            c = cum[top]
            probs = None
        else:
            probs = tilted_probabilities(pda, top, bias_schedule(len(emitted), n))
            if probs is None:
                break
            c = np.cumsum(probs)
        if bi == buf.size:
            buf = rng.random(256)
            bi = 0
        u = buf[bi] * c[-1]
        bi += 1
        k = min(int(np.searchsorted(c, u, side="right")), len(c) - 1)
        t = trans[top][k]
        logw += math.log(t.weight)
        steps += 1
        stack.pop()
        if t.action == PUSH:
            b, cvar = t.payload
            stack.append(cvar)
            stack.append(b)
        else:
            emitted.append(t.payload[0])
            depths.append(len(stack))
            if len(emitted) == n:
                break
    accepted = len(emitted) == n and not stack
    return EmissionRun(tuple(emitted), tuple(stack), math.exp(logw), steps, accepted, tuple(depths))


# -- exact amplitudes ----------------------------------------------------------

def _silent_closure(pda: WeightedPda, stack: tuple, amp: float, budget: int, sqrt: bool):
    """All stacks reachable by silent pushes with depth <= budget, with weights."""
    out = defaultdict(float)
    frontier = {stack: amp}
    while frontier:
        nxt = defaultdict(float)
        for st, a in frontier.items():
            out[st] += a
            if not st:
                continue
            for t in pda.transitions[st[-1]]:
                if t.action != PUSH:
                    continue
                new = st[:-1] + (t.payload[1], t.payload[0])
                if len(new) <= budget:
                    nxt[new] += a * (math.sqrt(t.weight) if sqrt else t.weight)
        frontier = nxt
    return out


def _emit_layers(pda: WeightedPda, n: int, sqrt: bool, target=None):
    layer = {((), (pda.start,)): 1.0}
    for k in range(n):
        remaining = n - k
        nxt = defaultdict(float)
        for (prefix, stack), a in layer.items():
            if not stack:
                if not pda.restart:
                    continue
                stack = (pda.start,)
            for st, b in _silent_closure(pda, stack, a, remaining, sqrt).items():
                if not st:
                    continue
                for t in pda.transitions[st[-1]]:
                    if t.action != EMIT:
                        continue
                    sym = t.payload[0]
                    if target is not None and target[k] != sym:
                        continue
                    rest = st[:-1]
                    if len(rest) > remaining - 1:
                        continue
                    nxt[(prefix + (sym,), rest)] += b * (math.sqrt(t.weight) if sqrt else t.weight)
        layer = nxt
    return {prefix: a for (prefix, stack), a in layer.items() if not stack}


def accepted_weight(pda: WeightedPda, string) -> float:
    """Total weight of trajectories emitting ``string`` and ending empty."""
    string = tuple(string)
    if not string:
        return 0.0
    return float(_emit_layers(pda, len(string), sqrt=False, target=string).get(string, 0.0))


def exact_superposition(pda: WeightedPda, n: int) -> RadiatedState:
    """Post-selected radiated state: amplitude of each string is the sum of
    ``sqrt(weight)`` over its accepting trajectories."""
    if n > 12:
        raise ValueError("exact superposition is limited to n <= 12")
    amps = _emit_layers(pda, n, sqrt=True)
    amps = {k: v for k, v in amps.items() if v > 0}
    if not amps:
        raise EmptySupportError(f"no accepted string of length {n}")
    prob = math.fsum(v * v for v in amps.values())
    return RadiatedState(n, pda.terminals, amps, prob)


def pda_channel(pda: WeightedPda, n: int) -> tuple[KrausChannel, tuple, tuple]:
    """Truncated emitter equivalent to the machine for strings of length ``n``.

    Basis states are stacks of depth <= n reachable from the start; each
    Kraus operator sums the silent closure followed by one emission.
    Returns ``(channel, start_state, final_state)``.

    The operators are not a trace-preserving channel in general: distinct
    stacks with the same silent future (``K`` and ``H H`` when ``K -> H H``)
    map onto the same outputs.  They are still an exact matrix-product
    generator for the post-selected amplitudes, so normalisation is not
    checked.
    """
    # in restart mode the empty stack doubles as the start state
    start = () if pda.restart else (pda.start,)
    basis = {start: 0}
    order = [start]
    entries = defaultdict(list)
    i = 0
    while i < len(order):
        st = order[i]
        i += 1
        src = st if (st or not pda.restart) else (pda.start,)
        if not src:
            continue
        for cl, b in _silent_closure(pda, src, 1.0, n + 1, True).items():
            if not cl:
                continue
            for t in pda.transitions[cl[-1]]:
                if t.action != EMIT:
                    continue
                rest = cl[:-1]
                if len(rest) > n:
                    continue
                if rest not in basis:
                    basis[rest] = len(order)
                    order.append(rest)
                entries[t.payload[0]].append((basis[rest], basis[st], b * math.sqrt(t.weight)))
    if () not in basis:
        basis[()] = len(order)
        order.append(())
    dim = len(order)
    ops = []
    for a in pda.terminals:
        rows, cols, vals = zip(*entries[a]) if entries[a] else ((), (), ())
        ops.append(sp.csr_array((vals, (rows, cols)), shape=(dim, dim)))
    ch = KrausChannel(tuple(ops), pda.terminals, basis=tuple(order), normalization="none")
    return ch, start, ()


# -- post-selection statistics -------------------------------------------------

@dataclass(frozen=True)
class PostselectionResult:
    ns: np.ndarray
    trials: int
    accepted: np.ndarray
    rates: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    fit: FitReport | None
    exponential: bool

    def rows(self):
        for i, n in enumerate(self.ns):
            yield int(n), int(self.accepted[i]), self.trials, float(self.rates[i]), \
                float(self.ci_low[i]), float(self.ci_high[i])


def postselection_rate(pda: WeightedPda, ns, trials: int, seed: int = 0,
                       bias_schedule: Schedule | None = None,
                       max_steps_factor: int = 64) -> PostselectionResult:
    """Empty-stack acceptance rate for each length in ``ns``.

    Each trial has its own stream derived from ``(seed, n, trial)``.  A
    zero count, or a log-linear decay fitting better than a power law,
    sets ``exponential``.
    """
    ns = np.asarray(sorted(int(n) for n in ns))
    if trials < 1:
        raise ValueError("trials must be >= 1")
    acc = np.zeros(ns.size, dtype=int)
    for i, n in enumerate(ns):
        for tr in range(trials):
            rng = derive_rng(seed, "pda", int(n), tr)
            run = sample_emission(pda, int(n), rng, max_steps_factor * int(n), bias_schedule)
            acc[i] += run.accepted
    rates = acc / trials
    lo = np.empty(ns.size)
    hi = np.empty(ns.size)
    for i, k in enumerate(acc):
        ci = binomtest(int(k), trials).proportion_ci(0.95, method="wilson")
        lo[i], hi[i] = ci.low, ci.high
    exponential = bool(np.any(acc == 0))
    fit = None
    if exponential:
        warnings.warn("zero accepted runs at some length: exponential suppression suspected",
                      RuntimeWarning, stacklevel=2)
    elif ns.size >= 4:
        fit = fit_exponent(ns, rates)
        # compare against log-linear decay in N
        lr = np.log(rates)
        c = np.polyfit(ns, lr, 1)
        lin_rss = float(np.sum((lr - np.polyval(c, ns)) ** 2))
        exponential = c[0] < 0 and lin_rss < fit.residual_norm ** 2 and fit.exponent < -1.5
    return PostselectionResult(ns, trials, acc, rates, lo, hi, fit, exponential)


def motzkin_grammar(w_plus: float, w_minus: float, w_zero: float, w_plus_boundary: float) -> CnfGrammar:
    """Spin-1 Motzkin grammar with arbitrary move weights (restart mode)."""
    from .grammar import Rule

    rules = [
        Rule("S", ("f",), 1.0 - w_plus_boundary),
        Rule("S", ("U", "H"), w_plus_boundary),
        Rule("H", ("d",), w_minus),
        Rule("H", ("F", "H"), w_zero),
        Rule("H", ("U", "K"), w_plus),
        Rule("K", ("H", "H"), 1.0),
        Rule("U", ("u",), 1.0),
        Rule("F", ("f",), 1.0),
    ]
    rules = [r for r in rules if r.weight > 0]
    return CnfGrammar("S", tuple(rules), restart=True)
