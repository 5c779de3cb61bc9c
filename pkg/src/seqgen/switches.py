"""Switch-controlled and disordered walks of the Motzkin head.

The head performs a reflected walk with drift ``b`` whose sign is flipped
every time an auxiliary walker returns to its origin.  Only the return
events of the auxiliary walker matter, so it is modelled by its return
statistics.  The random-rate variant replaces the switch by quenched traps
with heavy-tailed waiting times.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom, binomtest

from .errors import InsufficientDataError
from .fitting import FitReport, fit_exponent
from .seeding import derive_rng

KINDS = ("diffusive1d", "ballistic1d", "diffusive2d", "pinned")
MIN_PROXY_TRACES = 1000


@dataclass(frozen=True)
class AuxWalkerModel:
    """Auxiliary walker driving the switch.

    diffusive1d: simple random walk on Z.
    ballistic1d: velocity drawn once from U[-1, 1], position round(v t).
    diffusive2d: simple random walk on Z^2.
    pinned: never leaves the origin.
    """

    kind: str = "diffusive1d"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown auxiliary walker {self.kind!r}; choose from {KINDS}")

    def return_probability(self, t) -> np.ndarray:
        """Probability of sitting at the origin at time(s) ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=np.int64))
        if self.kind == "pinned":
            return np.ones(t.shape)
        if self.kind == "ballistic1d":
            # |v t| < 1/2 for v ~ U[-1, 1]
            return np.minimum(1.0, 1.0 / (2.0 * np.maximum(t, 1)))
        p1 = np.where(t % 2 == 0, binom.pmf(t // 2, t, 0.5), 0.0)
        if self.kind == "diffusive1d":
            return p1
        # rotated coordinates make the square-lattice walk two independent 1d walks
        return p1 * p1

    def sample_positions(self, t: int, size: int, rng) -> np.ndarray:
        """Positions at time ``t``; shape ``(size,)`` or ``(size, 2)`` for 2d."""
        if self.kind == "pinned":
            return np.zeros(size, dtype=np.int64)
        if self.kind == "ballistic1d":
            v = rng.uniform(-1.0, 1.0, size)
            return np.rint(v * t).astype(np.int64)
        if self.kind == "diffusive1d":
            return 2 * rng.binomial(t, 0.5, size) - t
        u = 2 * rng.binomial(t, 0.5, size) - t
        w = 2 * rng.binomial(t, 0.5, size) - t
        return np.column_stack([(u + w) // 2, (u - w) // 2])

    def at_origin(self, pos) -> np.ndarray:
        pos = np.asarray(pos)
        return np.all(pos == 0, axis=1) if pos.ndim == 2 else pos == 0


@dataclass
class SwitchedWalkTrace:
    """Ensemble of head trajectories.

    ``x`` has shape ``(traces, len(times))``.  For the first few traces the
    full flip record and the auxiliary return events are kept for audit.
    """

    T: int
    times: np.ndarray
    x: np.ndarray
    flips: np.ndarray
    min_x: np.ndarray
    flip_times: list = field(default_factory=list)
    return_times: list = field(default_factory=list)
    final_aux: np.ndarray | None = None
    flips_mean: np.ndarray | None = None   # ensemble mean flip count at each sample time

    @property
    def mean_x(self) -> np.ndarray:
        return self.x.mean(axis=0)

    @property
    def msd(self) -> np.ndarray:
        return (self.x.astype(float) ** 2).mean(axis=0)

    def displacement_fit(self, tmin=None, **kw) -> FitReport:
        """Power-law fit of ``<x(t)>`` with ensemble bootstrap."""
        tmin = self.times[len(self.times) // 2] if tmin is None else tmin
        return fit_exponent(self.times, self.mean_x, window=(tmin, self.T),
                            samples=self.x.astype(float), **kw)

    def rows(self):
        mx, ms = self.mean_x, self.msd
        fl = self.flips_mean if self.flips_mean is not None else np.zeros(self.times.size)
        for i, t in enumerate(self.times):
            yield int(t), float(mx[i]), float(ms[i]), float(fl[i])


def _sample_times(T: int, k: int = 30) -> np.ndarray:
    return np.unique(np.geomspace(1, T, k).astype(np.int64))


def levy_trace(aux: AuxWalkerModel, T: int, drift: float, seed: int = 0,
               traces: int = 10000, mode: str = "annealed", record: int = 4,
               times=None) -> SwitchedWalkTrace:
    """Reflected head walk whose drift sign flips at auxiliary returns.

    ``mode="annealed"`` draws an independent return event at each step with
    probability ``aux.return_probability(t)``; ``mode="renewal"`` simulates
    the auxiliary walker explicitly (1d kinds only) so that successive
    flights are correlated.

    The head starts at 0 with drift pointing away from the wall and steps
    +1 with probability ``(1 + sign * drift) / 2``, else -1, reflecting at 0.
    """
    if not 0 <= drift <= 1:
        raise ValueError("drift must lie in [0, 1]")
    if mode not in ("annealed", "renewal"):
        raise ValueError("mode must be 'annealed' or 'renewal'")
    if mode == "renewal" and aux.kind == "diffusive2d":
        raise ValueError("renewal mode supports 1d auxiliary walkers only")
    times = _sample_times(T) if times is None else np.asarray(times, dtype=np.int64)
    rng = derive_rng(seed, "levy", traces)
    M = traces
    x = np.zeros(M, dtype=np.int64)
    sign = np.ones(M, dtype=np.int64)
    flips = np.zeros(M, dtype=np.int64)
    min_x = np.zeros(M, dtype=np.int64)
    out = np.zeros((M, times.size), dtype=np.int64)
    flips_at = np.zeros(times.size)
    rec = min(record, M)
    flip_times = [[] for _ in range(rec)]
    return_times = [[] for _ in range(rec)]
    if mode == "renewal":
        if aux.kind == "ballistic1d":
            vel = rng.uniform(-1.0, 1.0, M)
        a = np.zeros(M, dtype=np.int64)
    p0 = aux.return_probability(np.arange(1, T + 1)) if mode == "annealed" else None
    k = 0
    for t in range(1, T + 1):
        if mode == "annealed":
            ret = rng.random(M) < p0[t - 1]
        else:
            if aux.kind == "diffusive1d":
                a += 2 * (rng.random(M) < 0.5) - 1
            elif aux.kind == "ballistic1d":
                a = np.rint(vel * t).astype(np.int64)
            ret = a == 0
        if ret.any():
            sign[ret] *= -1
            flips += ret
            for j in np.flatnonzero(ret[:rec]):
                flip_times[j].append(t)
                return_times[j].append(t)
        step = np.where(rng.random(M) < 0.5 * (1 + sign * drift), 1, -1)
        x = np.abs(x + step)
        np.minimum(min_x, x, out=min_x)
        if t == times[k]:
            out[:, k] = x
            flips_at[k] = flips.mean()
            k += 1
            if k == times.size:
                break
    final_aux = a if mode == "renewal" else None
    return SwitchedWalkTrace(T, times, out, flips, min_x, [np.asarray(f) for f in flip_times],
                             [np.asarray(r) for r in return_times], final_aux, flips_at)


@dataclass(frozen=True)
class OverheadResult:
    ns: np.ndarray
    trials: int
    hits: np.ndarray
    rates: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    fit: FitReport | None


def conditioned_overhead(aux: AuxWalkerModel, ns, trials: int, seed: int = 0) -> OverheadResult:
    """Empirical probability that the auxiliary walker is back at its origin at time N."""
    ns = np.asarray(sorted(int(n) for n in ns))
    hits = np.zeros(ns.size, dtype=int)
    for i, n in enumerate(ns):
        rng = derive_rng(seed, "overhead", int(n))
        hits[i] = int(aux.at_origin(aux.sample_positions(int(n), trials, rng)).sum())
    rates = hits / trials
    lo = np.empty(ns.size)
    hi = np.empty(ns.size)
    for i, h in enumerate(hits):
        ci = binomtest(int(h), trials).proportion_ci(0.95, method="wilson")
        lo[i], hi[i] = ci.low, ci.high
    fit = None
    if np.any(hits == 0):
        warnings.warn("no returns observed at some N", RuntimeWarning, stacklevel=2)
    elif ns.size >= 4 and np.ptp(rates) > 0:
        fit = fit_exponent(ns, rates)
    return OverheadResult(ns, trials, hits, rates, lo, hi, fit)


# -- quenched traps --------------------------------------------------------------

def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class RandomRateField:
    """Per-site hop rates ``gamma_L(i) = gamma_R(i) = p_i / 2``.

    ``kind="trap"``: ``p_i = u_i ** (1/mu)`` with ``u_i`` uniform on (0, 1],
    so the mean waiting time ``1/p_i`` has tail index ``mu``.
    ``kind="uniform"``: ``p_i = 1``.  The field is a pure function of
    ``(seed, realization, site)``.
    """

    seed: int
    mu: float = 0.5
    kind: str = "trap"

    def __post_init__(self):
        if self.kind not in ("trap", "uniform"):
            raise ValueError("kind must be 'trap' or 'uniform'")
        if self.kind == "trap" and not self.mu > 0:
            raise ValueError("trap tail index must be positive")

    def uniforms(self, site, realization=0) -> np.ndarray:
        site = np.asarray(site, dtype=np.int64).astype(np.uint64)
        real = np.asarray(realization, dtype=np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            h = _splitmix(_splitmix(np.uint64(self.seed) ^ (real * np.uint64(1000003))) + site)
        return ((h >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0 ** 53

    def hop_probability(self, site, realization=0) -> np.ndarray:
        if self.kind == "uniform":
            return np.ones(np.shape(site))
        return self.uniforms(site, realization) ** (1.0 / self.mu)

    def rates(self, site, realization=0):
        p = self.hop_probability(site, realization)
        return p / 2, p / 2


def subdiffusive_trace(rates: RandomRateField, T: int, seed: int = 0, traces: int = 10000,
                       times=None) -> SwitchedWalkTrace:
    """Head walk in quenched traps, one disorder realisation per trace.

    Event driven: at site ``i`` the walker waits a geometric number of
    steps with success probability ``p_i`` and then hops to ``i +- 1``
    (staying at the wall when the hop would leave the half-line).
    """
    times = _sample_times(T, 20) if times is None else np.asarray(times, dtype=np.int64)
    times = times[times >= 1]
    rng = derive_rng(seed, "traps", traces)
    M = traces
    real = np.arange(M)
    x = np.zeros(M, dtype=np.int64)
    t = np.zeros(M, dtype=np.int64)
    out = np.zeros((M, times.size), dtype=np.int64)
    alive = np.ones(M, dtype=bool)
    while alive.any():
        idx = np.flatnonzero(alive)
        p = rates.hop_probability(x[idx], real[idx])
        wait = rng.geometric(np.clip(p, 1e-300, 1.0))
        tn = t[idx] + wait
        # the walker sits at x during [t, t + wait): record sample times in there
        lo = np.searchsorted(times, t[idx], side="left")
        hi = np.searchsorted(times, tn, side="left")
        for j in np.flatnonzero(hi > lo):
            out[idx[j], lo[j]:hi[j]] = x[idx[j]]
        step = np.where(rng.random(idx.size) < 0.5, 1, -1)
        x[idx] = np.maximum(x[idx] + step, 0)
        t[idx] = tn
        alive[idx] = tn <= times[-1]
    flips = np.zeros(M, dtype=np.int64)
    return SwitchedWalkTrace(int(times[-1]), times, out, flips, out.min(axis=1))


def trap_exponent(mu: float) -> float:
    """Displacement exponent of the one-dimensional trap model."""
    return mu / (1.0 + mu) if mu < 1 else 0.5


# -- entanglement proxy --------------------------------------------------------------

def _proxy(heights: np.ndarray, log_s: float) -> np.ndarray:
    out = np.empty(heights.shape[1])
    for j in range(heights.shape[1]):
        h = heights[:, j]
        _, counts = np.unique(h, return_counts=True)
        p = counts / counts.sum()
        out[j] = h.mean() * log_s - np.sum(p * np.log(p))
    return out


@dataclass(frozen=True)
class ProxyResult:
    cuts: np.ndarray
    entropy: np.ndarray
    fit: FitReport


def entanglement_proxy(trace: SwitchedWalkTrace, colors: int, cuts=None, n_boot: int = 200,
                       seed: int = 0) -> ProxyResult:
    """Height-based entropy estimate ``<m> log s + H(m)`` and its growth exponent.

    Heuristic: only the exponent is meaningful.  ``cuts`` selects sample
    times of the trace (default: the later half).
    """
    if colors < 2:
        raise ValueError("entanglement proxy needs s >= 2: with one colour only the height "
                         "entropy H(m) survives and the estimator carries no stack information")
    M = trace.x.shape[0]
    if M < MIN_PROXY_TRACES:
        raise InsufficientDataError(f"proxy needs at least {MIN_PROXY_TRACES} traces, got {M}")
    times = trace.times
    if cuts is None:
        sel = np.arange(len(times) // 2, len(times))
    else:
        sel = np.flatnonzero(np.isin(times, np.asarray(cuts)))
    if sel.size < 4:
        raise InsufficientDataError("need at least 4 cut positions")
    H = trace.x[:, sel]
    ls = math.log(colors)
    S = _proxy(H, ls)
    base = fit_exponent(times[sel], S, n_boot=n_boot)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(max(n_boot, 200)):
        Sb = _proxy(H[rng.integers(0, M, M)], ls)
        if np.all(Sb > 0):
            boots.append(np.polyfit(np.log(times[sel]), np.log(Sb), 1)[0])
    lo, hi = np.quantile(boots, [0.025, 0.975])
    fit = FitReport(base.exponent, base.intercept, (float(min(lo, base.exponent)), float(max(hi, base.exponent))),
                    base.residual_norm, base.window, base.n_points)
    return ProxyResult(times[sel], S, fit)
