"""Bundled reproduction scripts for the headline scaling exponents.

Each claim is a function ``(seed, quick) -> list[(label, FitReport, target, tol)]``.
``quick`` trades statistics for speed and is meant for smoke tests only.
"""
from __future__ import annotations

import numpy as np

from .fitting import fit_exponent
from .halfline import TransitionSpec, return_probability_series
from .motzkin import critical_ensemble, entropy_scaling

ENTROPY_CUTS = (16, 24, 32, 48, 64, 96, 128, 192, 256)


def motzkin_sqrt(seed=0, quick=False):
    n = 1024 if quick else 2048
    cuts = [c for c in ENTROPY_CUTS if c <= n // 4]
    sc = entropy_scaling(critical_ensemble(n, 2), cuts)
    return [("s=2 entropy vs l", sc.power_fit, 0.5, 0.1)]


def return_sqrt(seed=0, quick=False):
    horizon = 1024 if quick else 4096
    p0 = return_probability_series(TransitionSpec(0.25, 0.25), horizon)
    t = np.arange(1, horizon + 1)
    return [("p0(t)", fit_exponent(t, p0, window=(horizon // 2, horizon)), -0.5, 0.05)]


def pda_overhead(seed=0, quick=False):
    from .qpda import bundled_grammar, compile_to_pda, postselection_rate

    pda = compile_to_pda(bundled_grammar("motzkin1"))
    ns = (16, 32, 64, 128, 256)
    res = postselection_rate(pda, ns, 500 if quick else 10_000, seed)
    return [("empty-stack acceptance", res.fit, -0.5, 0.1)]


def gate_sqrt(seed=0, quick=False):
    from .conveyor import sampled_gate_stats

    ens = critical_ensemble(2, 2)
    ns = (64, 128, 256, 512, 1024)
    trajectories = 40 if quick else 200
    g = [sampled_gate_stats(n, ens.with_length(n), trajectories, seed).bulk_mean_gates for n in ns]
    return [("gates per cycle", fit_exponent(ns, g), 0.5, 0.15)]


def levy(seed=0, quick=False):
    from .switches import AuxWalkerModel, levy_trace

    T = 10_000 if quick else 100_000
    tr = levy_trace(AuxWalkerModel("diffusive1d"), T, 1.0, seed, 2000 if quick else 10_000)
    return [("switched head <x(t)>", tr.displacement_fit(), 0.75, 0.05)]


def traps(seed=0, quick=False):
    from .switches import RandomRateField, subdiffusive_trace, trap_exponent

    out = []
    for mu in (1 / 3, 2 / 3):
        tr = subdiffusive_trace(RandomRateField(seed, mu), 10_000 if quick else 100_000, seed,
                                2000 if quick else 10_000)
        out.append((f"traps mu={mu:.3f}", tr.displacement_fit(), trap_exponent(mu), 0.07))
    return out


CLAIMS = {
    "motzkin-sqrt": motzkin_sqrt,
    "return-sqrt": return_sqrt,
    "pda-overhead": pda_overhead,
    "gate-sqrt": gate_sqrt,
    "levy": levy,
    "traps": traps,
}


def run_claim(name: str, seed=0, quick=False):
    if name not in CLAIMS:
        raise KeyError(name)
    return CLAIMS[name](seed, quick)
