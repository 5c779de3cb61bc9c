"""Two-leg triangle-gate lattice for coloured Motzkin emitters.

Upper leg: column 0 is the wall, columns 1..e-1 hold the stack colours, the
head marker ``E`` sits at column ``e`` and everything to its right is 0.
Lower leg: conveyor particles.  A fresh particle (symbol 0) is injected at
column 0 every third cycle, moves one column per cycle and is harvested
at the extraction column.

One cycle applies a triangle gate to every triangle (upper p-1, p, p+1 and
lower p) in three sublayers ordered by ``p mod 3``, then advects the belt.
The gate is the identity except on the source states ``|x E 0, 0>`` and
their images, where it carries out a pop, a flat step or a push.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..channel import RadiatedState
from ..errors import AuditError, GeometryError
from ..motzkin import MotzkinEnsemble

E = "E"
INJECT_PERIOD = 3
SUBLAYER_ORDER = (0, 1, 2)
POP, STAY, PUSH = "pop", "stay", "push"


class LadderConfig(NamedTuple):
    """One branch of the lattice.

    ``belt`` lists ``(cell, symbol, particle_id)`` left to right;
    ``harvested`` is the register of extracted symbols.
    """

    e: int
    stack: tuple
    belt: tuple
    harvested: tuple

    def upper(self, col: int):
        if col == self.e:
            return E
        if 1 <= col < self.e:
            return self.stack[col - 1]
        return 0

    def lower(self, col: int):
        for cell, sym, pid in self.belt:
            if cell == col:
                return sym, pid
        return None, None


@dataclass
class BranchState:
    """Sparse superposition of lattice configurations."""

    amplitudes: dict
    width: int
    colors: int
    cycle: int = 0
    injected: int = 0

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(a) ** 2 for a in self.amplitudes.values()))

    def copy_with(self, amps) -> "BranchState":
        return BranchState(amps, self.width, self.colors, self.cycle, self.injected)

    @property
    def extraction(self) -> int:
        return self.width - 1


# -- the gate ------------------------------------------------------------------

def gate_blocks(ens: MotzkinEnsemble) -> dict:
    """Unitary blocks of the triangle gate keyed by source colour ``x``.

    Each value is ``(basis, U)`` with ``basis[0]`` the source state
    ``(x, E, 0, 0)``; ``U[:, 0]`` holds the move amplitudes and the
    remaining columns complete it to an orthogonal matrix.
    """
    s = ens.colors
    blocks = {}
    for x in range(0, s + 1):
        basis = [(x, E, 0, 0)]
        amps = []
        if x == 0:
            amps.append(math.sqrt(ens.w_zero_boundary))
            for k in range(1, s + 1):
                basis.append((x, k, E, k))
                amps.append(math.sqrt(ens.boundary_push_per_color))
        else:
            amps.append(math.sqrt(ens.w_zero))
            basis.append((E, 0, 0, -x))
            amps.append(math.sqrt(ens.w_minus))
            for k in range(1, s + 1):
                basis.append((x, k, E, k))
                amps.append(math.sqrt(ens.w_plus))
        a = np.asarray(amps)
        a = a / np.linalg.norm(a)
        d = a.size
        # complete a to an orthonormal basis; QR of [a | I] keeps a as first column up to sign
        q, _ = np.linalg.qr(np.column_stack([a, np.eye(d)]))
        q = q[:, :d]
        if q[:, 0] @ a < 0:
            q[:, 0] *= -1
        q[:, 0] = a
        if np.abs(q.T @ q - np.eye(d)).max() > 1e-12:
            raise RuntimeError("triangle gate is not unitary")
        blocks[x] = (tuple(basis), q)
    return blocks


def gate_table(ens: MotzkinEnsemble) -> dict:
    """Map from every local state in the gate subspace to its image."""
    table = {}
    for basis, U in gate_blocks(ens).values():
        for j, src in enumerate(basis):
            table[src] = tuple((basis[i], float(U[i, j])) for i in range(len(basis))
                               if abs(U[i, j]) > 1e-15)
    return table


def source_case(local) -> str | None:
    """Which move a gate output represents (None for non-source inputs)."""
    l, m, r, low = local
    if m == E and r == 0 and low == 0:
        return "source"
    return None


def outcome_case(out) -> str:
    l, m, r, low = out
    if l == E:
        return POP
    if r == E:
        return PUSH
    return STAY


def _local(cfg: LadderConfig, p: int):
    low, pid = cfg.lower(p)
    return (cfg.upper(p - 1), cfg.upper(p), cfg.upper(p + 1), low), pid


def _write(cfg: LadderConfig, p: int, out) -> LadderConfig:
    l, m, r, low = out
    top = max(cfg.e, p + 1)
    upper = [cfg.upper(c) for c in range(top + 1)]
    upper[p - 1], upper[p], upper[p + 1] = l, m, r
    es = [c for c, v in enumerate(upper) if v == E]
    if len(es) != 1:
        raise AuditError(f"configuration with {len(es)} head markers")
    e = es[0]
    if any(v != 0 for v in upper[e + 1:]):
        raise AuditError("nonzero stack symbol right of the head")
    if upper[0] != 0:
        raise AuditError("wall cell overwritten")
    belt = tuple((c, low if c == p else sym, pid) for c, sym, pid in cfg.belt)
    return LadderConfig(e, tuple(upper[1:e]), belt, cfg.harvested)


def triangle_gate(state: BranchState, position: int, table: dict, log=None) -> BranchState:
    """Apply the gate on triangle ``position`` to every branch."""
    if position < 1:
        raise GeometryError("triangles start at column 1")
    if position + 1 >= state.extraction:
        raise GeometryError(f"triangle {position} overlaps the extraction column {state.extraction}")
    out = defaultdict(complex)
    for cfg, amp in state.amplitudes.items():
        local, pid = _local(cfg, position)
        img = table.get(local)
        if img is None:
            out[cfg] += amp
            continue
        if log is not None:
            log.append((state.cycle, position, pid, local))
        for new_local, u in img:
            out[_write(cfg, position, new_local)] += amp * u
    return state.copy_with(dict(out))


def advect(state: BranchState) -> BranchState:
    """Shift every belt particle one column right; harvest at the extraction column."""
    out = defaultdict(complex)
    X = state.extraction
    for cfg, amp in state.amplitudes.items():
        belt = []
        harvested = list(cfg.harvested)
        for cell, sym, pid in cfg.belt:
            if cell + 1 >= X:
                harvested.append(sym)
            else:
                belt.append((cell + 1, sym, pid))
        out[cfg._replace(belt=tuple(belt), harvested=tuple(harvested))] += amp
    return state.copy_with(dict(out))


def inject(state: BranchState) -> BranchState:
    pid = state.injected
    amps = {cfg._replace(belt=((0, 0, pid),) + cfg.belt): a for cfg, a in state.amplitudes.items()}
    st = state.copy_with(amps)
    st.injected += 1
    return st


@dataclass
class GateStats:
    t: np.ndarray
    nontrivial_gates: np.ndarray
    active_width: np.ndarray
    meta: dict = field(default_factory=dict)

    def rows(self):
        for i in range(self.t.size):
            yield int(self.t[i]), int(self.nontrivial_gates[i]), int(self.active_width[i])

    @property
    def bulk_mean_gates(self) -> float:
        m = self.nontrivial_gates > 0
        return float(self.nontrivial_gates[m].mean()) if m.any() else 0.0


def default_width(n: int) -> int:
    return max(int(math.ceil(3 * math.sqrt(n))) + 5, n // 2 + 4)


def run_two_leg(n: int, ens: MotzkinEnsemble, width: int | None = None, log=None):
    """Full-superposition simulation emitting ``n`` symbols.

    Returns ``(state, stats, info)`` where ``state`` is the harvested
    register post-selected on an empty stack, ``stats`` counts nontrivial
    gates per cycle and ``info`` records the sublayer order, the norm
    after every layer and the weight of pruned branches.
    """
    width = default_width(n) if width is None else width
    if width < 5:
        raise GeometryError("width must be at least 5")
    table = gate_table(ens)
    st = BranchState({LadderConfig(1, (), (), ()): 1.0}, width, ens.colors)
    norms = []
    pruned = 0.0
    ts, gates, widths = [], [], []
    while True:
        if st.cycle % INJECT_PERIOD == 0 and st.injected < n:
            st = inject(st)
        cycle_log = []
        for r in SUBLAYER_ORDER:
            positions = sorted({p for cfg in st.amplitudes
                                for p in (cfg.e - 1, cfg.e, cfg.e + 1) if p >= 1 and p % 3 == r})
            for p in positions:
                st = triangle_gate(st, p, table, cycle_log)
            norms.append(math.sqrt(st.norm() ** 2 + pruned))
        if log is not None:
            log.extend(cycle_log)
        ts.append(st.cycle)
        gates.append(len({entry[1] for entry in cycle_log}))
        es = [cfg.e for cfg in st.amplitudes]
        widths.append(max(es) - min(es) + 1)
        st = advect(st)
        # drop branches that cannot return to the wall with the particles left
        keep = {}
        for cfg, a in st.amplitudes.items():
            fresh = sum(1 for c, sym, pid in cfg.belt if sym == 0 and c <= cfg.e) + (n - st.injected)
            if cfg.e - 1 > fresh:
                pruned += abs(a) ** 2
            else:
                keep[cfg] = a
        st = st.copy_with(keep)
        st.cycle += 1
        if st.injected == n and all(not cfg.belt for cfg in st.amplitudes):
            break
        if not st.amplitudes:
            break
    amps = defaultdict(complex)
    for cfg, a in st.amplitudes.items():
        if cfg.e == 1 and not cfg.stack:
            amps[cfg.harvested] += a
    prob = math.fsum(abs(a) ** 2 for a in amps.values())
    alphabet = tuple([0] + [k for c in range(1, ens.colors + 1) for k in (c, -c)])
    state = RadiatedState(n, alphabet, dict(amps), prob)
    stats = GateStats(np.asarray(ts), np.asarray(gates), np.asarray(widths),
                      {"sublayer_order": SUBLAYER_ORDER, "width": width})
    # norms include the weight already pruned, so they measure unitarity only
    info = {"norms": np.asarray(norms), "pruned_weight": pruned, "cycles": st.cycle,
            "sublayer_order": SUBLAYER_ORDER}
    return state, stats, info


# -- classical trajectories ----------------------------------------------------

@dataclass
class Trajectory:
    """One sampled unravelling of the two-leg circuit.

    ``events`` holds ``(cycle, triangle, particle, input_local, outcome)``
    for every nontrivial gate; ``heads`` the head column after each cycle.
    """

    n: int
    width: int
    symbols: list
    events: list
    heads: np.ndarray

    @property
    def emitted(self) -> tuple:
        return tuple(self.symbols)


def sample_two_leg(n: int, ens: MotzkinEnsemble, rng=None, width: int | None = None,
                   choices=None, table=None) -> Trajectory:
    """Sample one classical trajectory through the same gates.

    Particle ``i`` is injected at cycle ``3 i`` and sits at column
    ``cycle - 3 i`` during the gate layers.  ``choices`` optionally forces
    the outcome of successive nontrivial gates (``"pop"``, ``"stay"`` or a
    push colour ``k``).
    """
    rng = np.random.default_rng(rng)
    width = int(math.ceil(6 * math.sqrt(n))) + 10 if width is None else width
    X = width - 1
    table = gate_table(ens) if table is None else table
    choices = list(choices) if choices is not None else None
    e = 1
    stack = []
    syms = [None] * n
    events = []
    heads = []
    cycle = 0
    last = INJECT_PERIOD * (n - 1) + X
    while cycle <= last:
        for r in SUBLAYER_ORDER:
            for p in (e - 1, e, e + 1):
                if p < 1 or p % 3 != r:
                    continue
                d = cycle - p
                pid = d // INJECT_PERIOD if d >= 0 and d % INJECT_PERIOD == 0 else -1
                low = syms[pid] if 0 <= pid < n else None
                if pid >= n:
                    low = None
                if 0 <= pid < n and low is None:
                    low = 0
                up = lambda c: E if c == e else (stack[c - 1] if 1 <= c < e else 0)
                local = (up(p - 1), up(p), up(p + 1), low)
                img = table.get(local)
                if img is None:
                    continue
                if p + 1 >= X:
                    raise GeometryError(f"head reached the extraction column {X}")
                outs = [o for o, _ in img]
                probs = np.array([u * u for _, u in img])
                if choices:
                    want = choices.pop(0)
                    k = next(i for i, o in enumerate(outs)
                             if (want == POP and outcome_case(o) == POP)
                             or (want == STAY and outcome_case(o) == STAY)
                             or (isinstance(want, int) and outcome_case(o) == PUSH and o[3] == want))
                else:
                    k = int(rng.choice(len(outs), p=probs / probs.sum()))
                out = outs[k]
                events.append((cycle, p, pid, local, outcome_case(out)))
                l, m, rr, newlow = out
                cells = {p - 1: l, p: m, p + 1: rr}
                top = max(e, p + 1)
                upper = [up(c) for c in range(top + 1)]
                for c, v in cells.items():
                    upper[c] = v
                e = upper.index(E)
                stack = list(upper[1:e])
                syms[pid] = newlow
                break
        heads.append(e)
        cycle += 1
    symbols = [s if s is not None else 0 for s in syms]
    return Trajectory(n, width, symbols, events, np.asarray(heads))


def markovianity_audit(traj: Trajectory) -> dict:
    """Check that each particle took part in exactly one nontrivial gate.

    Returns counts of the three outcomes.  Raises :class:`AuditError`
    naming the first particle seen twice, never seen, or fed to a gate in
    a non-source state.
    """
    seen = defaultdict(int)
    cases = {POP: 0, STAY: 0, PUSH: 0}
    for cycle, p, pid, local, outcome in traj.events:
        seen[pid] += 1
        if seen[pid] > 1:
            raise AuditError(f"particle {pid} met a nontrivial gate twice (cycle {cycle})", pid)
        if source_case(local) != "source":
            raise AuditError(f"particle {pid} entered a gate in state {local}", pid)
        cases[outcome] += 1
    for pid in range(traj.n):
        if seen[pid] != 1:
            raise AuditError(f"particle {pid} never met the head", pid)
    return {"particles": traj.n, **cases}


def sampled_gate_stats(n: int, ens: MotzkinEnsemble, trajectories: int, seed=0,
                       width: int | None = None, coverage: float = 0.99) -> GateStats:
    """Gate usage estimated from an ensemble of sampled trajectories.

    The circuit has to place a gate on every triangle the head can occupy.
    At each cycle ``nontrivial_gates`` counts the triangles touched by the
    central ``coverage`` fraction of head positions, i.e. the quantile
    window of the heads widened by one column on each side; cycles in which
    no trajectory has a nontrivial gate count zero.  ``active_width`` is the
    full spread of the sampled heads.  Unlike a union over trajectories, the
    quantile window converges as the ensemble grows.
    """
    from ..seeding import derive_rng

    if not 0 < coverage <= 1:
        raise ValueError("coverage must lie in (0, 1]")
    table = gate_table(ens)
    active = set()
    heads = []
    for i in range(trajectories):
        tr = sample_two_leg(n, ens, derive_rng(seed, "two-leg", n, i), width, table=table)
        active.update(ev[0] for ev in tr.events)
        heads.append(tr.heads)
    H = np.vstack(heads)
    t = np.arange(H.shape[1])
    lo = np.quantile(H, (1 - coverage) / 2, axis=0, method="lower")
    hi = np.quantile(H, (1 + coverage) / 2, axis=0, method="higher")
    gates = np.where(np.isin(t, list(active)), hi - lo + 3, 0).astype(int)
    widths = H.max(axis=0) - H.min(axis=0) + 1
    return GateStats(t, gates, widths, {"trajectories": trajectories, "n": n, "coverage": coverage})
