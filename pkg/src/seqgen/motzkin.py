"""Coloured Motzkin ensembles.

A walk of length N over ``s`` colours is a string of steps ``+k`` (push
colour k), ``-k`` (pop, must match the colour on top) and ``0`` (flat) that
never drops below height zero and ends there.  The ensemble assigns each
walk the product of its move weights; the radiated state has amplitudes
equal to the square roots of these weights.

Because every cut splits a walk into a prefix leaving a stack ``sigma`` and a
suffix that must close exactly ``sigma``, the Schmidt decomposition is block
diagonal in ``sigma`` with one rank-one block per stack.  All blocks with the
same height share one coefficient, so a height-resolved dynamic programme
gives the full spectrum for N in the thousands.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import KrausChannel, RadiatedState
from .errors import CutError, InsufficientDataError, SizeLimitError
from .fitting import FitReport, fit_exponent, fit_log_law, fit_power_law

ENUMERATION_LIMIT = 14
NORM_TOL = 1e-12


@dataclass(frozen=True)
class MotzkinEnsemble:
    """Move weights of an ``s``-coloured Motzkin walk of length ``n``.

    ``w_plus`` is the bulk push weight per colour, ``w_minus`` the pop weight
    of the colour on top, ``w_zero`` the bulk flat weight.  From the empty
    stack each colour is pushed with ``w_plus_boundary / colors`` and the walk
    stays with ``1 - w_plus_boundary``.
    """

    n: int
    colors: int
    w_plus: float
    w_minus: float
    w_zero: float
    w_plus_boundary: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.colors < 1:
            raise ValueError("need at least one colour")
        ws = (self.w_plus, self.w_minus, self.w_zero, self.w_plus_boundary)
        if min(ws) < 0:
            raise ValueError("weights must be nonnegative")
        bulk = self.colors * self.w_plus + self.w_minus + self.w_zero
        if abs(bulk - 1.0) > NORM_TOL:
            raise ValueError(f"bulk weights sum to {bulk!r}, not 1")
        if self.w_plus_boundary > 1 + NORM_TOL:
            raise ValueError("boundary push weight exceeds 1")

    @property
    def w_zero_boundary(self) -> float:
        return max(0.0, 1.0 - self.w_plus_boundary)

    @property
    def boundary_push_per_color(self) -> float:
        return self.w_plus_boundary / self.colors

    @property
    def drift(self) -> float:
        """Expected height change per bulk step; zero at the unbiased point."""
        return self.colors * self.w_plus - self.w_minus

    def with_length(self, n: int) -> "MotzkinEnsemble":
        return MotzkinEnsemble(n, self.colors, self.w_plus, self.w_minus,
                               self.w_zero, self.w_plus_boundary)

    @classmethod
    def from_weights(cls, n: int, colors: int, weights) -> "MotzkinEnsemble":
        """Build from ``(w+, w-, w0[, w0b])``; ``w0b`` defaults to ``w0 + w-``
        (a boundary where the pop weight is redirected to staying)."""
        weights = [float(w) for w in weights]
        if len(weights) == 3:
            wp, wm, w0 = weights
            w0b = w0 + wm
        elif len(weights) == 4:
            wp, wm, w0, w0b = weights
        else:
            raise ValueError("weights must be w+,w-,w0 or w+,w-,w0,w0b")
        return cls(n, colors, wp, wm, w0, 1.0 - w0b)


def critical_ensemble(n: int, colors: int) -> MotzkinEnsemble:
    """Unbiased weights used throughout the scaling checks.

    s = 1: all three bulk moves 1/3.  s >= 2: ``s w+ = w-`` and
    ``w'+ = s w+ + w-`` leave a one-parameter family ``w0 = 1 - 2 w-``; we
    take the member without flat steps (largest step variance).
    """
    if colors == 1:
        return MotzkinEnsemble(n, 1, 1 / 3, 1 / 3, 1 / 3, 1 / 3)
    if colors == 2:
        return MotzkinEnsemble(n, 2, 0.25, 0.5, 0.0, 1.0)
    wp = 1.0 / (2 * colors)
    return MotzkinEnsemble(n, colors, wp, 0.5, 0.0, 1.0)


def pinned_ensemble(n: int, colors: int, bias: float = 0.5) -> MotzkinEnsemble:
    """Pop-dominated weights: push total is ``bias`` times the pop weight."""
    wm = 0.4
    wp = bias * wm / colors
    w0 = 1.0 - colors * wp - wm
    return MotzkinEnsemble(n, colors, wp, wm, w0, colors * wp)


# -- combinatorics -----------------------------------------------------------

def _legal(string, colors: int) -> bool:
    stack = []
    for step in string:
        if step == 0:
            continue
        if step > 0:
            if step > colors:
                return False
            stack.append(step)
        else:
            if not stack or stack[-1] != -step:
                return False
            stack.pop()
    return not stack


def enumerate_walks(n: int, colors: int) -> list[tuple]:
    """All legal coloured Motzkin strings of length ``n`` (n <= 14)."""
    if n > ENUMERATION_LIMIT:
        raise SizeLimitError(f"exhaustive enumeration is limited to n <= {ENUMERATION_LIMIT}")
    if n < 0:
        raise ValueError("n must be >= 0")
    out = []

    def rec(prefix, stack):
        remaining = n - len(prefix)
        if len(stack) > remaining:
            return
        if remaining == 0:
            out.append(tuple(prefix))
            return
        prefix.append(0)
        rec(prefix, stack)
        prefix.pop()
        for k in range(1, colors + 1):
            prefix.append(k)
            stack.append(k)
            rec(prefix, stack)
            stack.pop()
            prefix.pop()
        if stack:
            k = stack.pop()
            prefix.append(-k)
            rec(prefix, stack)
            prefix.pop()
            stack.append(k)

    rec([], [])
    return out


def walk_count(n: int, colors: int) -> int:
    """Number of coloured Motzkin walks of length ``n`` (exact integer)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    counts = [1] + [0] * (n + 1)
    for _ in range(n):
        nxt = [0] * (n + 2)
        for h, c in enumerate(counts):
            if not c:
                continue
            nxt[h] += c
            if h + 1 <= n:
                nxt[h + 1] += c * colors
            if h > 0:
                nxt[h - 1] += c
        counts = nxt
    return counts[0]


def brute_force_count(n: int, colors: int) -> int:
    """Count by filtering all ``(2s+1)**n`` strings; independent of both routines above."""
    steps = [0] + list(range(1, colors + 1)) + [-k for k in range(1, colors + 1)]
    return sum(_legal(s, colors) for s in itertools.product(steps, repeat=n))


# -- weighted ensemble ---------------------------------------------------------

def walk_weight(ens: MotzkinEnsemble, string) -> float:
    """Product of move weights along ``string``; 0 for illegal strings."""
    if len(string) != ens.n or not _legal(string, ens.colors):
        return 0.0
    w = 1.0
    h = 0
    for step in string:
        if h == 0:
            w *= ens.w_zero_boundary if step == 0 else ens.boundary_push_per_color
        else:
            w *= ens.w_zero if step == 0 else (ens.w_plus if step > 0 else ens.w_minus)
        h += 1 if step > 0 else (-1 if step < 0 else 0)
    return w


def _prefix_step(a: np.ndarray, ens: MotzkinEnsemble) -> np.ndarray:
    out = np.zeros_like(a)
    out[0] += a[0] * ens.w_zero_boundary
    out[1] += a[0] * ens.w_plus_boundary
    out[1:-1] += a[1:-1] * ens.w_zero
    out[2:] += a[1:-1] * ens.colors * ens.w_plus
    out[:-1] += a[1:] * ens.w_minus
    return out


def _suffix_step(b: np.ndarray, ens: MotzkinEnsemble) -> np.ndarray:
    out = np.zeros_like(b)
    out[0] = ens.w_zero_boundary * b[0] + ens.w_plus_boundary * b[1]
    out[1:-1] = ens.w_minus * b[:-2] + ens.w_zero * b[1:-1] + ens.colors * ens.w_plus * b[2:]
    out[-1] = ens.w_minus * b[-2]
    return out


def log_partition(ens: MotzkinEnsemble) -> float:
    """``log Z``, the total weight of all legal walks."""
    a = np.zeros(ens.n + 2)
    a[0] = 1.0
    logscale = 0.0
    for _ in range(ens.n):
        a = _prefix_step(a, ens)
        c = a.sum()
        if c == 0:
            return -math.inf
        a /= c
        logscale += math.log(c)
    return math.log(a[0]) + logscale if a[0] > 0 else -math.inf


def amplitude(ens: MotzkinEnsemble, string) -> float:
    """Normalised amplitude ``sqrt(w(string) / Z)``."""
    w = walk_weight(ens, tuple(string))
    if w == 0:
        return 0.0
    return math.exp(0.5 * (math.log(w) - log_partition(ens)))


def motzkin_state(ens: MotzkinEnsemble) -> RadiatedState:
    """Radiated state built by exhaustive enumeration (n <= 14)."""
    amps = {}
    for s in enumerate_walks(ens.n, ens.colors):
        w = walk_weight(ens, s)
        if w > 0:
            amps[s] = math.sqrt(w)
    alphabet = tuple([0] + [k for c in range(1, ens.colors + 1) for k in (c, -c)])
    return RadiatedState(ens.n, alphabet, amps)


def motzkin_channel(ens: MotzkinEnsemble, max_height: int) -> KrausChannel:
    """Truncated emitter whose basis states are stacks of height <= ``max_height``.

    Pushes from the top layer are folded into staying so the channel stays
    trace preserving.  Strings that return to the empty stack are generated
    exactly when ``max_height >= n // 2 + 1``.
    """
    s = ens.colors
    stacks = [()]
    for h in range(1, max_height + 1):
        stacks += [tuple(c) for c in itertools.product(range(1, s + 1), repeat=h)]
    index = {st: i for i, st in enumerate(stacks)}
    dim = len(stacks)
    symbols = [0] + [k for c in range(1, s + 1) for k in (c, -c)]
    ops = {sym: np.zeros((dim, dim)) for sym in symbols}
    for st, i in index.items():
        if not st:
            ops[0][i, i] = math.sqrt(ens.w_zero_boundary)
            if max_height >= 1:
                for c in range(1, s + 1):
                    ops[c][index[(c,)], i] = math.sqrt(ens.boundary_push_per_color)
            continue
        ops[-st[-1]][index[st[:-1]], i] = math.sqrt(ens.w_minus)
        if len(st) < max_height:
            ops[0][i, i] = math.sqrt(ens.w_zero)
            for c in range(1, s + 1):
                ops[c][index[st + (c,)], i] = math.sqrt(ens.w_plus)
        else:
            ops[0][i, i] = math.sqrt(ens.w_zero + s * ens.w_plus)
    return KrausChannel(tuple(ops[k] for k in symbols), tuple(symbols), basis=tuple(stacks))


# -- Schmidt spectra -----------------------------------------------------------

@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt coefficients grouped by unmatched height.

    ``coefficients[i]`` is the squared Schmidt value shared by the
    ``multiplicities[i] = s**heights[i]`` stacks of that height.
    """

    cut: int
    heights: np.ndarray
    coefficients: np.ndarray
    multiplicities: np.ndarray
    log_coefficients: np.ndarray

    @property
    def height_probabilities(self) -> np.ndarray:
        return self.coefficients * self.multiplicities

    def total(self) -> float:
        return float(np.sum(self.height_probabilities))

    def entropy(self, order=1) -> float:
        p = self.height_probabilities
        lam = self.log_coefficients
        if order == 1:
            return float(-np.sum(p * lam))
        if order == np.inf:
            return float(-lam.max())
        # log sum_m mult * lambda^n evaluated in log space
        terms = np.log(self.multiplicities) + order * lam
        top = terms.max()
        return float((top + math.log(np.exp(terms - top).sum())) / (1 - order))

    def mean_height(self) -> float:
        return float(np.sum(self.heights * self.height_probabilities))

    def expanded(self) -> np.ndarray:
        """Every Schmidt coefficient listed with its multiplicity (descending)."""
        vals = np.repeat(self.coefficients, self.multiplicities.astype(int))
        return np.sort(vals)[::-1]


def _spectra(ens: MotzkinEnsemble, cuts) -> dict[int, SchmidtSpectrum]:
    n = ens.n
    cuts = sorted(set(int(c) for c in cuts))
    for c in cuts:
        if not 1 <= c < n:
            raise CutError(f"cut {c} outside 1..{n - 1}")
    size = n + 2
    want_prefix = set(cuts)
    want_suffix = {n - c for c in cuts}
    a = np.zeros(size)
    a[0] = 1.0
    la = 0.0
    prefixes = {}
    for k in range(1, max(cuts) + 1):
        a = _prefix_step(a, ens)
        c = a.sum()
        a /= c
        la += math.log(c)
        if k in want_prefix:
            prefixes[k] = a.copy()
    b = np.zeros(size)
    b[0] = 1.0
    suffixes = {}
    for k in range(1, max(want_suffix) + 1):
        b = _suffix_step(b, ens)
        b /= b.max()
        if k in want_suffix:
            suffixes[k] = b.copy()
    out = {}
    heights_all = np.arange(size)
    log_s = math.log(ens.colors)
    for c in cuts:
        joint = prefixes[c] * suffixes[n - c]
        keep = joint > 0
        if not keep.any():
            raise CutError(f"no walk crosses cut {c}")
        p = joint[keep] / joint[keep].sum()
        m = heights_all[keep]
        mult = np.asarray([float(ens.colors) ** int(h) for h in m])
        loglam = np.log(p) - m * log_s
        out[c] = SchmidtSpectrum(c, m, np.exp(loglam), mult, loglam)
    return out


def schmidt_spectrum(ens: MotzkinEnsemble, cut: int) -> SchmidtSpectrum:
    """Schmidt spectrum of the weighted Motzkin state across ``cut``."""
    return _spectra(ens, [cut])[cut]


def entropy_profile(ens: MotzkinEnsemble, cuts):
    """``(S1, S2, mean_height)`` arrays over ``cuts`` from a single DP sweep."""
    specs = _spectra(ens, cuts)
    cuts = [int(c) for c in cuts]
    s1 = np.array([specs[c].entropy(1) for c in cuts])
    s2 = np.array([specs[c].entropy(2) for c in cuts])
    hm = np.array([specs[c].mean_height() for c in cuts])
    return s1, s2, hm


@dataclass(frozen=True)
class EntropyScaling:
    cuts: np.ndarray
    entropies: np.ndarray
    power_fit: FitReport
    log_fit: tuple
    power_rss: float
    preferred: str
    saturated: bool

    def __str__(self):
        a, b, rss = self.log_fit
        return (f"power: {self.power_fit}\n"
                f"log-law: S = {a:.4f} + {b:.4f} log l (rss {rss:.3e}); power rss {self.power_rss:.3e}\n"
                f"preferred: {self.preferred}; saturated: {self.saturated}")


def entropy_scaling(ens: MotzkinEnsemble, cuts, saturation_tol: float = 1e-3) -> EntropyScaling:
    """Fit the von Neumann entropy against cut position.

    Cuts must satisfy ``l <= n/4`` so the far boundary does not matter.  The
    power-law fit reports the exponent; the log law and a linear-space power
    law are compared by residual sum of squares; ``saturated`` flags a
    relative change below ``saturation_tol`` over the last two cuts.
    """
    cuts = np.asarray(sorted(set(int(c) for c in cuts)))
    if cuts.size < 4:
        raise InsufficientDataError("entropy scaling needs at least 4 cut positions")
    if cuts.max() > ens.n // 4:
        raise CutError(f"cuts must satisfy l <= n/4 = {ens.n // 4}")
    s1, _, _ = entropy_profile(ens, cuts)
    power = fit_exponent(cuts, s1)
    log_fit = fit_log_law(cuts, s1)
    _, _, prss = fit_power_law(cuts, s1)
    preferred = "log" if log_fit[2] < prss else "power"
    saturated = abs(s1[-1] - s1[-2]) <= saturation_tol * max(abs(s1[-1]), 1e-300)
    return EntropyScaling(cuts, s1, power, log_fit, prss, preferred, bool(saturated))
