"""Command-line entry point ``seqgen``.

Every subcommand validates its flags before doing any work, writes one CSV
file and a ``<stem>.manifest.json`` next to it.  Exit codes: 0 on success,
2 on usage errors, 1 on domain errors raised by the library.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SeqgenError
from .io import write_csv, write_manifest

MAX_SEED = 2 ** 64 - 1


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _require(cond, msg):
    if not cond:
        raise UsageError(msg)


# -- subcommands -----------------------------------------------------------------
# each cmd_* takes the namespace, checks it, returns (columns, rows, extra) or None


def cmd_walk(a):
    from .halfline import TransitionSpec, walk_moments

    _require(a.horizon >= 1, "--horizon must be >= 1")
    _require(a.steps >= 1, "--steps must be >= 1")
    for name in ("gamma_l", "gamma_r"):
        _require(0 <= getattr(a, name) <= 1, f"--{name.replace('_', '-')} must lie in [0, 1]")
    _require(a.gamma_l + a.gamma_r <= 1, "--gamma-l + --gamma-r must not exceed 1")
    _require(a.gamma_0 is None or 0 <= a.gamma_0 <= 1, "--gamma-0 must lie in [0, 1]")
    spec = TransitionSpec(a.gamma_l, a.gamma_r, a.gamma_0)
    t, p0, mean, msd = walk_moments(spec, a.horizon)
    rows = [(int(t[i]), float(p0[i]), float(mean[i]), float(msd[i]))
            for i in range(a.steps - 1, t.size, a.steps)]
    return ("t", "p0", "mean", "msd"), rows, {}


def cmd_channel(a):
    from .channel import channel_from_json, renyi_entropy_channel, sequential_generate

    path = Path(a.file)
    if not path.is_file():
        # fall back to a bundled example channel
        from importlib import resources

        bundled = resources.files("seqgen").joinpath("data", f"{a.file}.json")
        _require(bundled.is_file(), f"--file {a.file}: no such file or bundled channel")
        path = bundled
    _require(a.n >= 2, "--n must be >= 2")
    _require(a.cut is None or 1 <= a.cut < a.n, f"--cut must lie in 1..{a.n - 1}")
    _require(a.order == "inf" or _is_order(a.order), "--order must be 1, a number > 1, or inf")
    ch, rest = channel_from_json(path.read_text())
    start = _label(rest.get("start", ch.basis[0] if ch.basis else 0))
    final = _label(rest.get("final", start))
    order = math.inf if a.order == "inf" else float(a.order)
    if math.isfinite(order) and order == int(order):
        order = int(order)
    prob = sequential_generate(ch, start, a.n, final).success_probability if a.n <= 12 else float("nan")
    cuts = [a.cut] if a.cut is not None else range(1, a.n)
    rows = [(c, renyi_entropy_channel(ch, start, final, a.n, c, order)) for c in cuts]
    return ("l", "renyi"), rows, {"success_probability": prob, "start": start, "final": final}


def _is_order(text):
    try:
        v = float(text)
    except ValueError:
        return False
    return v >= 1


def _label(v):
    return tuple(v) if isinstance(v, list) else v


def cmd_motzkin(a):
    from .motzkin import MotzkinEnsemble, critical_ensemble, entropy_profile

    _require(a.n >= 2, "--n must be >= 2")
    _require(a.colors >= 1, "--colors must be >= 1")
    _require(a.cut is None or 1 <= a.cut < a.n, f"--cut must lie in 1..{a.n - 1}")
    if a.weights is None:
        ens = critical_ensemble(a.n, a.colors)
    else:
        _require(len(a.weights) in (3, 4), "--weights takes w+,w-,w0[,w0b]")
        try:
            ens = MotzkinEnsemble.from_weights(a.n, a.colors, a.weights)
        except ValueError as exc:
            raise UsageError(f"--weights: {exc}")
    cuts = [a.cut] if a.cut is not None else list(range(1, a.n))
    s1, s2, hm = entropy_profile(ens, cuts)
    rows = [(c, float(s1[i]), float(s2[i]), float(hm[i])) for i, c in enumerate(cuts)]
    return ("l", "entropy", "renyi2", "height_mean"), rows, {
        "weights": [ens.w_plus, ens.w_minus, ens.w_zero, ens.w_zero_boundary]}


def cmd_pda(a):
    from .qpda import compile_to_pda, postselection_rate, push_pop_schedule

    _require(all(n >= 1 for n in a.n), "--n values must be >= 1")
    _require(a.trials >= 1, "--trials must be >= 1")
    g = _grammar(a.grammar)
    schedule = None
    if a.schedule == "push-pop":
        _require({"u", "d"} <= set(g.terminals),
                 "--schedule push-pop needs terminals 'u' and 'd' in the grammar")
        schedule = push_pop_schedule()
    res = postselection_rate(compile_to_pda(g), a.n, a.trials, a.seed, schedule)
    extra = {"exponential": res.exponential}
    if res.fit is not None:
        extra["fit"] = res.fit.as_dict()
        print(res.fit)
    return ("n", "accepted", "trials", "rate", "ci_low", "ci_high"), list(res.rows()), extra


def _grammar(spec):
    from .qpda import resolve_grammar

    try:
        return resolve_grammar(spec)
    except FileNotFoundError as exc:
        raise UsageError(f"--grammar: {exc}")


def cmd_conveyor(a):
    from .conveyor import (markovianity_audit, run_three_leg, run_two_leg, sample_two_leg,
                           sampled_gate_stats)
    from .motzkin import MotzkinEnsemble, critical_ensemble
    from .seeding import derive_rng

    _require(a.n >= 1, "--n must be >= 1")
    _require(a.width is None or a.width >= 5, "--width must be >= 5")
    _require(a.trajectories >= 1, "--trajectories must be >= 1")
    extra = {}
    if a.mode == "three":
        _require(a.grammar is not None, "--mode three needs --grammar")
        _require(a.weights is None, "--weights applies to --mode two only")
        _require(a.n <= 8, "--mode three simulates the full superposition: --n must be <= 8")
        g = _grammar(a.grammar)
        res = run_three_leg(g, a.n, a.width)
        stats = res.stats
        extra.update(success_probability=res.state.success_probability,
                     max_norm_error=float(np.abs(res.norms - 1).max()))
    else:
        _require(a.grammar is None, "--grammar applies to --mode three only")
        _require(a.colors >= 1, "--colors must be >= 1")
        if a.weights is None:
            ens = critical_ensemble(a.n, a.colors)
        else:
            _require(len(a.weights) in (3, 4), "--weights takes w+,w-,w0[,w0b]")
            try:
                ens = MotzkinEnsemble.from_weights(a.n, a.colors, a.weights)
            except ValueError as exc:
                raise UsageError(f"--weights: {exc}")
        if a.n <= 8:
            state, stats, info = run_two_leg(a.n, ens, a.width)
            extra.update(success_probability=state.success_probability,
                         pruned_weight=info["pruned_weight"])
        else:
            stats = sampled_gate_stats(a.n, ens, a.trajectories, a.seed, a.width)
            extra["bulk_mean_gates"] = stats.bulk_mean_gates
        if a.audit:
            counts = {"particles": 0, "pop": 0, "stay": 0, "push": 0}
            for i in range(a.trajectories):
                tr = sample_two_leg(a.n, ens, derive_rng(a.seed, "audit", a.n, i), a.width)
                for k, v in markovianity_audit(tr).items():
                    counts[k] += v
            extra["audit"] = counts
            print(f"markovianity audit passed on {a.trajectories} trajectories: {counts}")
    return ("t", "nontrivial_gates", "active_width"), list(stats.rows()), extra


def cmd_switch(a):
    from .switches import AuxWalkerModel, RandomRateField, levy_trace, subdiffusive_trace

    _require(a.t >= 1, "--t must be >= 1")
    _require(a.trials >= 1, "--trials must be >= 1")
    _require(0 <= a.drift <= 1, "--drift must lie in [0, 1]")
    _require(a.trap_mu is None or a.trap_mu > 0, "--trap-mu must be positive")
    if a.trap_mu is not None:
        tr = subdiffusive_trace(RandomRateField(a.seed, a.trap_mu), a.t, a.seed, a.trials)
    else:
        tr = levy_trace(AuxWalkerModel(a.aux), a.t, a.drift, a.seed, a.trials)
    extra = {}
    try:
        extra["fit"] = tr.displacement_fit().as_dict()
    except SeqgenError:
        pass
    return ("t", "mean_x", "msd", "flips"), list(tr.rows()), extra


def cmd_repro(a):
    from .repro import run_claim

    ok = True
    for label, fit, target, tol in run_claim(a.claim, a.seed, a.quick):
        good = fit is not None and fit.overlaps(target, tol)
        ok &= good
        print(f"{label}: {fit}")
        print(f"  target {target:+.3f} +- {tol:.3f}: {'PASS' if good else 'FAIL'}")
    return 0 if ok else 1


COMMANDS = {
    "walk": cmd_walk, "channel": cmd_channel, "motzkin": cmd_motzkin, "pda": cmd_pda,
    "conveyor": cmd_conveyor, "switch": cmd_switch,
}


def build_parser() -> argparse.ArgumentParser:
    from .repro import CLAIMS
    from .switches import KINDS

    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument("--seed", dest="sub_seed", type=_seed, default=None,
                             help="master seed (unsigned 64-bit)")
    p = argparse.ArgumentParser(prog="seqgen", description="sequential state generation experiments")
    p.add_argument("--version", action="version", version=f"seqgen {__version__}")
    p.add_argument("--seed", type=_seed, default=0, help="master seed (unsigned 64-bit)")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("walk", parents=[seed_parent], help="half-line walk moments")
    w.add_argument("--gamma-l", type=float, required=True)
    w.add_argument("--gamma-r", type=float, required=True)
    w.add_argument("--gamma-0", type=float, default=None, help="wall hop (default: gamma-r)")
    w.add_argument("--horizon", type=int, default=1024)
    w.add_argument("--steps", type=int, default=1, help="write every k-th time step")
    w.add_argument("--out", required=True)

    c = sub.add_parser("channel", parents=[seed_parent], help="Renyi entropies of a channel file")
    c.add_argument("--file", required=True, help="channel JSON path or bundled name (random3)")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--cut", type=int, default=None, help="single cut (default: all)")
    c.add_argument("--order", default="2")
    c.add_argument("--out", required=True)

    m = sub.add_parser("motzkin", parents=[seed_parent], help="Motzkin entropy profile")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--colors", type=int, default=2)
    m.add_argument("--cut", type=int, default=None)
    m.add_argument("--weights", type=_float_list, default=None, help="w+,w-,w0[,w0b]")
    m.add_argument("--out", required=True)

    d = sub.add_parser("pda", parents=[seed_parent], help="empty-stack acceptance rates")
    d.add_argument("--grammar", required=True, help="grammar file or bundled name")
    d.add_argument("--n", type=_int_list, required=True, help="comma-separated lengths")
    d.add_argument("--trials", type=int, default=1000)
    d.add_argument("--schedule", choices=("none", "push-pop"), default="none")
    d.add_argument("--out", required=True)

    v = sub.add_parser("conveyor", parents=[seed_parent], help="circuit lattice gate statistics")
    v.add_argument("--mode", choices=("two", "three"), default="two")
    v.add_argument("--grammar", default=None)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--width", type=int, default=None)
    v.add_argument("--colors", type=int, default=2)
    v.add_argument("--weights", type=_float_list, default=None, help="w+,w-,w0[,w0b]")
    v.add_argument("--trajectories", type=int, default=200)
    v.add_argument("--audit", action="store_true")
    v.add_argument("--out", required=True)

    s = sub.add_parser("switch", parents=[seed_parent], help="switched and trapped head walks")
    s.add_argument("--aux", choices=KINDS, default="diffusive1d")
    s.add_argument("--t", type=int, default=10_000)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--drift", type=float, default=1.0)
    s.add_argument("--trap-mu", type=float, default=None, help="use quenched traps instead of a switch")
    s.add_argument("--out", required=True)

    r = sub.add_parser("repro", parents=[seed_parent], help="reproduce a scaling exponent")
    r.add_argument("--claim", choices=sorted(CLAIMS), required=True)
    r.add_argument("--quick", action="store_true", help="reduced statistics")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    a.seed = a.sub_seed if a.sub_seed is not None else a.seed
    params = {k: v for k, v in vars(a).items() if k not in ("command", "sub_seed", "func")}
    t0 = time.perf_counter()
    try:
        if a.command == "repro":
            return cmd_repro(a)
        out = Path(a.out)
        if not out.parent.exists():
            raise UsageError(f"--out: directory {out.parent} does not exist")
        columns, rows, extra = COMMANDS[a.command](a)
        write_csv(out, columns, rows)
        write_manifest(out, a.command, params, a.seed, __version__,
                       time.perf_counter() - t0, extra)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"seqgen {a.command}: error: {exc}", file=sys.stderr)
        return 2
    except SeqgenError as exc:
        print(f"seqgen {a.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
