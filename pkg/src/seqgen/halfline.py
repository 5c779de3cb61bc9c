"""Single walker on the half-line with a reflecting wall.

The walker hops left with probability ``gamma_left`` and right with
probability ``gamma_right`` from every site i >= 1; from the wall (i = 0)
it hops right with probability ``gamma_boundary`` and otherwise stays.
Populations are kept on a truncated lattice 0..n_max and every evolution
monitors the mass that reaches the last site.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PhaseError, TruncationLeakError

CRITICAL_TOL = 1e-12
DEFAULT_LEAK_TOL = 1e-9


@dataclass(frozen=True)
class TransitionSpec:
    """Hop probabilities per step.

    ``gamma_boundary`` defaults to ``gamma_right`` so that the pinned
    steady state is exactly geometric.
    """

    gamma_left: float
    gamma_right: float
    gamma_boundary: float | None = None

    def __post_init__(self):
        if self.gamma_boundary is None:
            object.__setattr__(self, "gamma_boundary", self.gamma_right)
        gl, gr, g0 = self.gamma_left, self.gamma_right, self.gamma_boundary
        if min(gl, gr, g0) < 0:
            raise ValueError("hop probabilities must be nonnegative")
        if gl + gr > 1 + 1e-15:
            raise ValueError(f"gamma_left + gamma_right = {gl + gr} exceeds 1")
        if g0 > 1 + 1e-15:
            raise ValueError(f"gamma_boundary = {g0} exceeds 1")

    def delta(self) -> float:
        if self.gamma_left <= 0:
            raise PhaseError("delta is undefined for gamma_left = 0")
        return self.gamma_right / self.gamma_left - 1.0


class Phase(enum.Enum):
    PINNED = "pinned"
    CRITICAL = "critical"
    ESCAPING = "escaping"


@dataclass(frozen=True)
class HalfLineDist:
    """Populations on sites 0..n_max."""

    probabilities: np.ndarray
    leak_tol: float = field(default=DEFAULT_LEAK_TOL)

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("need a 1-d population vector with at least two sites")
        if np.any(p < 0):
            raise ValueError("populations must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"populations sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def n_max(self) -> int:
        return self.probabilities.size - 1

    @classmethod
    def point(cls, n_max: int, site: int = 0, leak_tol: float = DEFAULT_LEAK_TOL):
        p = np.zeros(n_max + 1)
        p[site] = 1.0
        return cls(p, leak_tol)

    @property
    def edge_mass(self) -> float:
        return float(self.probabilities[-1])

    def mean(self) -> float:
        return float(np.arange(self.n_max + 1) @ self.probabilities)

    def second_moment(self) -> float:
        i = np.arange(self.n_max + 1)
        return float((i * i) @ self.probabilities)


def _step(p: np.ndarray, spec: TransitionSpec) -> np.ndarray:
    # Outflow convention; the last site cannot hop right (leak is monitored instead).
    gl, gr, g0 = spec.gamma_left, spec.gamma_right, spec.gamma_boundary
    out = np.empty_like(p)
    stay = np.full(p.size, 1.0 - gl - gr)
    stay[0] = 1.0 - g0
    stay[-1] = 1.0 - gl
    out[:] = stay * p
    out[1] += g0 * p[0]
    out[2:] += gr * p[1:-1]
    out[:-1] += gl * p[1:]
    return out


def evolve(dist: HalfLineDist, spec: TransitionSpec, steps: int) -> HalfLineDist:
    """Apply ``steps`` updates of the half-line Markov chain.

    Raises
    ------
    TruncationLeakError
        If at any step the mass on the last site exceeds ``dist.leak_tol``.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    p = np.array(dist.probabilities)
    for t in range(steps):
        p = _step(p, spec)
        if p[-1] > dist.leak_tol:
            raise TruncationLeakError(
                f"mass {p[-1]:.3e} at site {p.size - 1} after {t + 1} steps"
            )
    # re-normalise away rounding drift only; the update itself is stochastic
    p /= math.fsum(p)
    return HalfLineDist(p, dist.leak_tol)


def classify_phase(spec: TransitionSpec) -> Phase:
    """Sign of delta: negative pins the walker to the wall, positive lets it escape."""
    d = spec.delta()
    if abs(d) < CRITICAL_TOL:
        return Phase.CRITICAL
    return Phase.PINNED if d < 0 else Phase.ESCAPING


def auto_n_max(spec: TransitionSpec, horizon: int, leak_tol: float = DEFAULT_LEAK_TOL) -> int:
    """Truncation large enough that a walker started at the wall stays below
    ``leak_tol`` at the last site for ``horizon`` steps."""
    drift = max(0.0, spec.gamma_right - spec.gamma_left)
    spread = math.sqrt(max(spec.gamma_left + spec.gamma_right, 1e-300) * horizon)
    # Gaussian tail exp(-z^2/2) < leak_tol, with a safety factor of 2 on z
    z = 2.0 * math.sqrt(2.0 * math.log(1.0 / leak_tol))
    return int(math.ceil(drift * horizon + z * spread)) + 10


def walk_moments(spec: TransitionSpec, horizon: int, n_max: int | None = None,
                 leak_tol: float = DEFAULT_LEAK_TOL):
    """Return ``(t, p0, mean, msd)`` arrays for t = 1..horizon, starting at the wall."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if n_max is None:
        n_max = auto_n_max(spec, horizon, leak_tol)
    p = HalfLineDist.point(n_max, 0, leak_tol).probabilities.copy()
    sites = np.arange(n_max + 1, dtype=float)
    p0 = np.empty(horizon)
    mean = np.empty(horizon)
    msd = np.empty(horizon)
    for t in range(horizon):
        p = _step(p, spec)
        if p[-1] > leak_tol:
            raise TruncationLeakError(f"mass {p[-1]:.3e} at site {n_max} after {t + 1} steps")
        p0[t] = p[0]
        mean[t] = sites @ p
        msd[t] = (sites * sites) @ p
    return np.arange(1, horizon + 1), p0, mean, msd


def return_probability_series(spec: TransitionSpec, horizon: int,
                              n_max: int | None = None) -> np.ndarray:
    """Probability of finding the walker at the wall after t = 1..horizon steps."""
    return walk_moments(spec, horizon, n_max)[1]


def confinement_length_of(spec: TransitionSpec) -> float:
    """Decay length of the geometric pinned steady state, ``-1/log(gamma_R/gamma_L)``."""
    if classify_phase(spec) is not Phase.PINNED:
        raise PhaseError("confinement length only exists in the pinned phase")
    if spec.gamma_right == 0:
        return 0.0
    return -1.0 / math.log(spec.gamma_right / spec.gamma_left)


def steady_state(spec: TransitionSpec, n_max: int | None = None,
                 leak_tol: float = DEFAULT_LEAK_TOL) -> HalfLineDist:
    """Stationary distribution of the truncated chain (pinned phase only).

    The null vector of ``P - 1`` is found with a dense eigen-solve, so the
    result does not rely on the birth-death structure of the chain.
    """
    phase = classify_phase(spec)
    if phase is not Phase.PINNED:
        raise PhaseError(f"no normalisable steady state in the {phase.value} phase")
    if n_max is None:
        xi = confinement_length_of(spec)
        n_max = int(math.ceil(xi * math.log(1.0 / leak_tol))) + 10
    size = n_max + 1
    # column-stochastic matrix: P[j, i] = prob(i -> j)
    P = np.empty((size, size))
    for i in range(size):
        e = np.zeros(size)
        e[i] = 1.0
        P[:, i] = _step(e, spec)
    w, v = np.linalg.eig(P)
    k = int(np.argmin(np.abs(w - 1.0)))
    p = np.real(v[:, k])
    p = np.abs(p) / np.abs(p).sum()
    p[p < 1e-300] = 0.0
    p /= math.fsum(p)
    if p[-1] > leak_tol:
        raise TruncationLeakError(f"steady state puts {p[-1]:.3e} on site {n_max}")
    return HalfLineDist(p, leak_tol)


def fitted_confinement_length(dist: HalfLineDist, floor: float = 1e-200) -> float:
    """Decay length extracted from a log-linear fit to the tail ``p_i, i >= 1``."""
    p = dist.probabilities
    i = np.arange(p.size)
    mask = (i >= 1) & (p > floor)
    if mask.sum() < 2:
        return 0.0
    slope = np.polyfit(i[mask], np.log(p[mask]), 1)[0]
    return -1.0 / slope


def walk_channel(spec: TransitionSpec, n_max: int):
    """Kraus channel on sites 0..n_max whose emitted symbol records each move.

    Symbols: ``+1`` for a hop away from the wall, ``-1`` for a hop towards it
    and ``0`` for staying.  At the last site the outward hop is folded into
    the stay amplitude so that the channel remains trace preserving; the
    diagonal of ``E(|i><i|)`` then coincides with one step of :func:`evolve`.
    """
    from .channel import KrausChannel

    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    gl, gr, g0 = spec.gamma_left, spec.gamma_right, spec.gamma_boundary
    size = n_max + 1
    up = np.zeros((size, size))
    down = np.zeros((size, size))
    stay = np.zeros((size, size))
    up[1, 0] = math.sqrt(g0)
    stay[0, 0] = math.sqrt(1.0 - g0)
    for i in range(1, size):
        down[i - 1, i] = math.sqrt(gl)
        if i < n_max:
            up[i + 1, i] = math.sqrt(gr)
            stay[i, i] = math.sqrt(max(0.0, 1.0 - gl - gr))
        else:
            stay[i, i] = math.sqrt(max(0.0, 1.0 - gl))
    return KrausChannel((up, down, stay), (1, -1, 0), basis=tuple(range(size)))
