"""Iterated quantum channels as sequential state generators.

A :class:`KrausChannel` holds one Kraus operator per emitted symbol.  Running
it forward while recording the symbols and finally projecting the emitter on
a basis state produces a :class:`RadiatedState`; the same channel, evolved in
the Heisenberg picture, gives the entanglement of that state across any cut
without ever writing the state down.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    CutError,
    DegenerateSteadyStateError,
    DimensionError,
    EmptySupportError,
)

COMPLETENESS_TOL = 1e-10
AMPLITUDE_FLOOR = 1e-14


def _dense(op):
    return op.toarray() if sp.issparse(op) else np.asarray(op)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Kraus operators ``K_s`` labelled by emitted symbols ``s``.

    Parameters
    ----------
    kraus : sequence of (chi, chi) arrays or scipy sparse matrices
    symbols : sequence of hashable labels, one per operator
    basis : optional labels for the emitter basis states
    normalization : {"complete", "sub", "none"}
        ``"complete"`` demands ``sum K^dag K = 1``; ``"sub"`` allows
        ``sum K^dag K <= 1`` for truncated emitters whose lost mass is
        tracked by :meth:`leak`; ``"none"`` skips the check, for weighted
        matrix-product generators that are not channels.
    """

    kraus: tuple
    symbols: tuple
    basis: tuple | None = None
    normalization: str = "complete"
    tol: float = COMPLETENESS_TOL
    _index: dict = field(init=False, repr=False)
    _basis_index: dict | None = field(init=False, repr=False)

    def __post_init__(self):
        ops = []
        for k in self.kraus:
            ops.append(sp.csr_array(k, dtype=complex) if sp.issparse(k)
                       else np.asarray(k, dtype=complex))
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        symbols = tuple(self.symbols)
        if len(symbols) != len(ops):
            raise ValueError(f"{len(ops)} Kraus operators but {len(symbols)} symbols")
        if len(set(symbols)) != len(symbols):
            raise ValueError("symbols must be distinct")
        chi = ops[0].shape[0]
        for s, k in zip(symbols, ops):
            if k.ndim != 2 or k.shape != (chi, chi):
                raise DimensionError(f"Kraus operator for {s!r} has shape {k.shape}, expected {(chi, chi)}")
        if self.normalization not in ("complete", "sub", "none"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "kraus", tuple(ops))
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})
        if self.basis is not None:
            basis = tuple(self.basis)
            if len(basis) != chi:
                raise DimensionError(f"{len(basis)} basis labels for emitter dimension {chi}")
            object.__setattr__(self, "basis", basis)
            object.__setattr__(self, "_basis_index", {b: i for i, b in enumerate(basis)})
        else:
            object.__setattr__(self, "_basis_index", None)
        self.check_completeness()

    @property
    def subnormalized(self) -> bool:
        return self.normalization != "complete"

    @property
    def emitter_dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.kraus[0])

    def op(self, symbol) -> np.ndarray:
        return self.kraus[self._index[symbol]]

    def basis_index(self, label) -> int:
        """Index of an emitter basis state given either an int or a basis label."""
        if self._basis_index is not None and label in self._basis_index:
            return self._basis_index[label]
        if isinstance(label, (int, np.integer)) and 0 <= label < self.emitter_dim:
            return int(label)
        raise KeyError(f"unknown emitter basis state {label!r}")

    def gram(self) -> np.ndarray:
        """``sum_s K_s^dag K_s``."""
        g = None
        for k in self.kraus:
            term = k.conj().T @ k
            g = term if g is None else g + term
        return _dense(g)

    def completeness_residual(self) -> float:
        return float(np.abs(self.gram() - np.eye(self.emitter_dim)).max())

    def leak(self) -> np.ndarray:
        """Per-basis-state probability lost in one step (zero for a full channel)."""
        return np.real(1.0 - np.diag(self.gram()))

    def check_completeness(self):
        if self.normalization == "none":
            return
        g = self.gram()
        eye = np.eye(self.emitter_dim)
        if self.normalization == "sub":
            top = np.linalg.eigvalsh((g + g.conj().T) / 2).max()
            if top > 1 + self.tol:
                raise ValueError(f"sum K^dag K has eigenvalue {top:.12g} > 1")
        else:
            res = np.abs(g - eye).max()
            if res > self.tol:
                raise ValueError(f"Kraus completeness residual {res:.3e} exceeds {self.tol:g}")

    def compose(self, other: "KrausChannel") -> "KrausChannel":
        """Channel that applies ``self`` and then ``other``; symbols become pairs."""
        if other.emitter_dim != self.emitter_dim:
            raise DimensionError("cannot compose channels of different emitter dimension")
        ops, syms = [], []
        for s, a in zip(self.symbols, self.kraus):
            for t, b in zip(other.symbols, other.kraus):
                ops.append(b @ a)
                syms.append((s, t))
        return KrausChannel(tuple(ops), tuple(syms), basis=self.basis,
                            normalization=_weaker(self.normalization, other.normalization),
                            tol=max(self.tol, other.tol))

    def transfer_matrix(self) -> np.ndarray:
        """Matrix of the channel acting on row-major ``vec(rho)``."""
        chi = self.emitter_dim
        T = np.zeros((chi * chi, chi * chi), dtype=complex)
        for k in self.kraus:
            k = _dense(k)
            T += np.kron(k, k.conj())
        return T


def _weaker(a: str, b: str) -> str:
    order = ("complete", "sub", "none")
    return order[max(order.index(a), order.index(b))]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian emitter operator.

    ``is_state=True`` additionally demands unit trace and positivity; dual
    evolved measurement operators use ``is_state=False``.
    """

    matrix: np.ndarray
    is_state: bool = True

    def __post_init__(self):
        m = np.array(_dense(self.matrix), dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got {m.shape}")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > 1e-12 * scale:
            raise ValueError("operator is not Hermitian")
        if self.is_state:
            tr = np.trace(m).real
            if abs(tr - 1.0) > 1e-12:
                raise ValueError(f"state has trace {tr!r}")
            if m.shape[0] <= 512 and np.linalg.eigvalsh(m).min() < -1e-10:
                raise ValueError("state is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def basis_state(cls, dim: int, index: int, is_state: bool = True):
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m, is_state)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, DensityOperator) else np.asarray(op, dtype=complex)


def _raw_channel(m: np.ndarray, ch: KrausChannel) -> np.ndarray:
    out = np.zeros_like(m)
    for k in ch.kraus:
        out += _dense(k @ (k @ m).conj().T).conj().T if ch.is_sparse else k @ m @ k.conj().T
    return out


def _raw_dual(m: np.ndarray, ch: KrausChannel) -> np.ndarray:
    out = np.zeros_like(m)
    for k in ch.kraus:
        kd = k.conj().T
        out += _dense(kd @ _dense(kd @ m.conj().T).conj().T) if ch.is_sparse else kd @ m @ k
    return out


def apply_channel(rho, ch: KrausChannel) -> DensityOperator:
    """``sum_s K_s rho K_s^dag``."""
    m = _as_matrix(rho)
    if m.shape != (ch.emitter_dim, ch.emitter_dim):
        raise DimensionError(f"operator of shape {m.shape} for emitter dimension {ch.emitter_dim}")
    out = _raw_channel(m, ch)
    out = (out + out.conj().T) / 2
    is_state = isinstance(rho, DensityOperator) and rho.is_state and not ch.subnormalized
    return DensityOperator(out, is_state=is_state)


def apply_dual(op, ch: KrausChannel) -> DensityOperator:
    """Heisenberg-picture channel ``sum_s K_s^dag O K_s``."""
    m = _as_matrix(op)
    if m.shape != (ch.emitter_dim, ch.emitter_dim):
        raise DimensionError(f"operator of shape {m.shape} for emitter dimension {ch.emitter_dim}")
    out = _raw_dual(m, ch)
    return DensityOperator((out + out.conj().T) / 2, is_state=False)


def evolve_state(ch: KrausChannel, start, steps: int) -> np.ndarray:
    """``E^steps(|start><start|)`` as a dense matrix."""
    m = DensityOperator.basis_state(ch.emitter_dim, ch.basis_index(start)).matrix.copy()
    for _ in range(steps):
        m = _raw_channel(m, ch)
    return (m + m.conj().T) / 2


def evolve_dual(ch: KrausChannel, final, steps: int) -> np.ndarray:
    """``(E*)^steps(|final><final|)`` as a dense matrix."""
    m = DensityOperator.basis_state(ch.emitter_dim, ch.basis_index(final), False).matrix.copy()
    for _ in range(steps):
        m = _raw_dual(m, ch)
    return (m + m.conj().T) / 2


@dataclass(frozen=True, eq=False)
class RadiatedState:
    """Normalised post-selected state of ``length`` emitted symbols.

    ``amplitudes`` maps symbol tuples to complex amplitudes; strings whose
    amplitude falls below ``AMPLITUDE_FLOOR`` are not stored.  The raw
    post-selection probability is kept separately.
    """

    length: int
    alphabet: tuple
    amplitudes: dict
    success_probability: float = 1.0

    def __post_init__(self):
        norm2 = math.fsum(abs(a) ** 2 for a in self.amplitudes.values())
        if not self.amplitudes or norm2 == 0:
            raise EmptySupportError("radiated state has empty support")
        scale = 1.0 / math.sqrt(norm2)
        amps = {tuple(k): complex(v) * scale for k, v in self.amplitudes.items()
                if abs(v) * scale > AMPLITUDE_FLOOR}
        for k in amps:
            if len(k) != self.length:
                raise ValueError(f"string {k!r} does not have length {self.length}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    def __len__(self):
        return len(self.amplitudes)

    @property
    def support(self) -> set:
        return set(self.amplitudes)

    def amplitude(self, string) -> complex:
        return self.amplitudes.get(tuple(string), 0.0)

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(a) ** 2 for a in self.amplitudes.values()))

    def overlap(self, other: "RadiatedState") -> complex:
        return sum(np.conj(a) * other.amplitude(k) for k, a in self.amplitudes.items())

    def fidelity(self, other: "RadiatedState") -> float:
        return float(abs(self.overlap(other)) ** 2)

    def relabel(self, mapping) -> "RadiatedState":
        """Apply a symbol relabelling (dict or callable) to every string."""
        f = mapping.get if isinstance(mapping, dict) else mapping
        amps = {tuple(f(s) for s in k): a for k, a in self.amplitudes.items()}
        return RadiatedState(self.length, tuple(f(s) for s in self.alphabet), amps,
                             self.success_probability)

    def schmidt_matrix(self, cut: int) -> np.ndarray:
        """Amplitude matrix indexed by (prefix, suffix) over the stored support."""
        if not 0 < cut < self.length:
            raise CutError(f"cut {cut} outside 1..{self.length - 1}")
        rows, cols = {}, {}
        entries = []
        for k, a in self.amplitudes.items():
            r = rows.setdefault(k[:cut], len(rows))
            c = cols.setdefault(k[cut:], len(cols))
            entries.append((r, c, a))
        m = np.zeros((len(rows), len(cols)), dtype=complex)
        for r, c, a in entries:
            m[r, c] += a
        return m

    def schmidt_values(self, cut: int) -> np.ndarray:
        """Squared singular values across ``cut`` (descending, sum to 1)."""
        s = np.linalg.svd(self.schmidt_matrix(cut), compute_uv=False)
        return s * s

    def to_vector(self) -> np.ndarray:
        """Dense vector in the product basis ordered by ``alphabet``."""
        d = len(self.alphabet)
        pos = {s: i for i, s in enumerate(self.alphabet)}
        v = np.zeros(d ** self.length, dtype=complex)
        for k, a in self.amplitudes.items():
            idx = 0
            for s in k:
                idx = idx * d + pos[s]
            v[idx] = a
        return v


def renyi_from_spectrum(p: np.ndarray, order) -> float:
    """Rényi entropy (natural log) of a probability vector; ``order=1`` is von Neumann."""
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    if order == 1:
        return float(-np.sum(p * np.log(p)))
    if order == np.inf:
        return float(-np.log(p.max()))
    return float(np.log(np.sum(p ** order)) / (1.0 - order))


def _reachability(ch: KrausChannel, final: int, steps: int) -> list[np.ndarray]:
    """reach[k][i] is True when basis state i can end in ``final`` after k steps."""
    pattern = None
    for k in ch.kraus:
        nz = (abs(k) > 0)
        nz = sp.csr_array(nz, dtype=np.int8) if sp.issparse(k) else sp.csr_array(nz.astype(np.int8))
        pattern = nz if pattern is None else pattern + nz
    pattern_t = (pattern > 0).astype(np.int8).T.tocsr()
    reach = [np.zeros(ch.emitter_dim, dtype=bool)]
    reach[0][final] = True
    for _ in range(steps):
        prev = reach[-1].astype(np.int8)
        reach.append((pattern_t @ prev) > 0)
    return reach


def sequential_generate(ch: KrausChannel, start, n: int, final) -> RadiatedState:
    """Emit ``n`` symbols from ``start`` and post-select the emitter on ``final``.

    Amplitudes are ``<final| K_{s_n} ... K_{s_1} |start>``; prefixes whose
    emitter vector can no longer reach ``final`` are dropped on the fly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    chi = ch.emitter_dim
    i0, f = ch.basis_index(start), ch.basis_index(final)
    reach = _reachability(ch, f, n)
    v0 = np.zeros(chi, dtype=complex)
    v0[i0] = 1.0
    if not reach[n][i0]:
        raise EmptySupportError("final state is unreachable from start in n steps")
    layer = {(): v0}
    for step in range(n):
        allowed = reach[n - step - 1]
        nxt = {}
        for prefix, v in layer.items():
            for s, k in zip(ch.symbols, ch.kraus):
                w = k @ v
                w = np.where(allowed, w, 0)
                if np.abs(w).max(initial=0.0) > AMPLITUDE_FLOOR:
                    nxt[prefix + (s,)] = w
        layer = nxt
    amps = {k: v[f] for k, v in layer.items() if abs(v[f]) > AMPLITUDE_FLOOR}
    prob = math.fsum(abs(a) ** 2 for a in amps.values())
    if prob == 0:
        raise EmptySupportError("post-selection probability is zero")
    return RadiatedState(n, ch.symbols, amps, prob)


def cut_spectrum(ch: KrausChannel, start, final, n: int, cut: int) -> np.ndarray:
    """Schmidt probabilities across ``cut`` computed from the channel alone.

    The nonzero eigenvalues of ``rho_cut O`` (equivalently of
    ``sqrt(rho) O sqrt(rho)``) normalised to unit trace.
    """
    if not 1 <= cut < n:
        raise CutError(f"cut {cut} outside 1..{n - 1}")
    rho = evolve_state(ch, start, cut)
    obs = evolve_dual(ch, final, n - cut)
    a, v = np.linalg.eigh(rho)
    a = np.clip(a, 0, None)
    r = np.sqrt(a)[:, None] * (v.conj().T @ obs @ v) * np.sqrt(a)[None, :]
    ev = np.linalg.eigvalsh((r + r.conj().T) / 2)
    ev = np.clip(ev, 0, None)
    tr = ev.sum()
    if tr <= 1e-300:
        raise EmptySupportError("Tr(rho O) vanishes: post-selection impossible")
    return np.sort(ev / tr)[::-1]


def renyi_entropy_channel(ch: KrausChannel, start, final, n: int, cut: int,
                          order=2) -> float:
    """Rényi entropy of the radiated state across ``cut``, from the channel only."""
    if order != 1 and order < 1:
        raise ValueError("order must be >= 1")
    return renyi_from_spectrum(cut_spectrum(ch, start, final, n, cut), order)


def steady_state_of_channel(ch: KrausChannel, gap_tol: float = 1e-8) -> DensityOperator:
    """Unique fixed point of the channel from the transfer-matrix spectrum."""
    chi = ch.emitter_dim
    w, v = np.linalg.eig(ch.transfer_matrix())
    k = int(np.argmin(np.abs(w - 1.0)))
    others = np.delete(w, k)
    if others.size and np.min(np.abs(others - 1.0)) < gap_tol:
        raise DegenerateSteadyStateError("leading transfer eigenvalue is not simple")
    rho = v[:, k].reshape(chi, chi)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho)
    resid = np.abs(_raw_channel(rho, ch) - rho).max()
    if resid > 1e-10:
        # polish with a few power steps; the eigen-solver is only accurate to ~1e-12 * cond
        for _ in range(50):
            rho = _raw_channel(rho, ch)
            rho = (rho + rho.conj().T) / 2
            rho /= np.trace(rho)
    return DensityOperator(rho)


def steady_state_power(ch: KrausChannel, tol: float = 1e-13, max_iter: int = 100000) -> np.ndarray:
    """Fixed point by repeated application from the maximally mixed state."""
    chi = ch.emitter_dim
    rho = np.eye(chi, dtype=complex) / chi
    for _ in range(max_iter):
        nxt = _raw_channel(rho, ch)
        nxt /= np.trace(nxt)
        if np.abs(nxt - rho).max() < tol:
            return nxt
        rho = nxt
    raise DegenerateSteadyStateError("power iteration did not converge")


def mps_discarded_weight(state: RadiatedState, rank: int) -> list[float]:
    """Squared-singular-value weight dropped at each cut when truncating to ``rank``."""
    out = []
    for cut in range(1, state.length):
        p = state.schmidt_values(cut)
        out.append(float(p[rank:].sum()))
    return out


# -- standard channels -------------------------------------------------------

def identity_channel(dim: int, symbol=0) -> KrausChannel:
    return KrausChannel((np.eye(dim),), (symbol,))


def amplitude_damping(gamma: float) -> KrausChannel:
    k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]])
    k1 = np.array([[0, math.sqrt(gamma)], [0, 0]])
    return KrausChannel((k0, k1), (0, 1))


def depolarizing(dim: int, p: float = 1.0) -> KrausChannel:
    """``rho -> (1-p) rho + p Tr(rho) 1/dim`` via generalised Pauli operators."""
    omega = np.exp(2j * np.pi / dim)
    X = np.roll(np.eye(dim), 1, axis=0)
    Z = np.diag(omega ** np.arange(dim))
    ops, syms = [], []
    for a in range(dim):
        for b in range(dim):
            w = p / dim ** 2 + (1 - p if a == b == 0 else 0.0)
            if w > 0:
                ops.append(math.sqrt(w) * np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b))
                syms.append((a, b))
    return KrausChannel(tuple(ops), tuple(syms))


def random_channel(dim: int, n_symbols: int, rng=None) -> KrausChannel:
    """Haar-like random channel: slices of a random isometry."""
    rng = np.random.default_rng(rng)
    g = rng.normal(size=(dim * n_symbols, dim)) + 1j * rng.normal(size=(dim * n_symbols, dim))
    q, _ = np.linalg.qr(g)
    ops = tuple(q[i * dim:(i + 1) * dim, :] for i in range(n_symbols))
    return KrausChannel(ops, tuple(range(n_symbols)))


def ghz_channel() -> KrausChannel:
    """Two-state emitter that copies its state into each emitted qubit."""
    k0 = np.array([[1, 0], [0, 0]])
    k1 = np.array([[0, 0], [0, 1]])
    return KrausChannel((k0, k1), (0, 1))


# -- JSON serialisation ------------------------------------------------------

def channel_to_json(ch: KrausChannel, **extra) -> str:
    doc = {
        "emitter_dim": ch.emitter_dim,
        "symbols": list(ch.symbols),
        "kraus": [
            {"real": _dense(k).real.tolist(), "imag": _dense(k).imag.tolist()}
            for k in ch.kraus
        ],
    }
    if ch.normalization != "complete":
        doc["normalization"] = ch.normalization
    if ch.basis is not None:
        doc["basis"] = [list(b) if isinstance(b, tuple) else b for b in ch.basis]
    doc.update(extra)
    return json.dumps(doc)


def channel_from_json(text: str) -> tuple[KrausChannel, dict]:
    """Parse a channel document; returns the channel and the remaining keys."""
    doc = json.loads(text)
    chi = int(doc["emitter_dim"])
    ops = []
    for entry in doc["kraus"]:
        re_part = np.asarray(entry["real"], dtype=float)
        im_part = np.asarray(entry.get("imag", np.zeros_like(re_part)), dtype=float)
        m = (re_part + 1j * im_part).reshape(chi, chi)
        ops.append(m)
    symbols = [tuple(s) if isinstance(s, list) else s for s in doc["symbols"]]
    basis = doc.get("basis")
    if basis is not None:
        basis = [tuple(b) if isinstance(b, list) else b for b in basis]
    ch = KrausChannel(tuple(ops), tuple(symbols), basis=basis,
                      normalization=doc.get("normalization", "complete"))
    rest = {k: v for k, v in doc.items()
            if k not in {"emitter_dim", "symbols", "kraus", "basis", "normalization"}}
    return ch, rest
