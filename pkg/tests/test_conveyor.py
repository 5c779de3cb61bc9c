import numpy as np
import pytest

from seqgen.conveyor import (gate_blocks, gate_table, markovianity_audit, run_three_leg,
                             run_two_leg, sample_two_leg, sampled_gate_stats)
from seqgen.conveyor.three_leg import FRESH, X, ThreeLegConfig, reset_x
from seqgen.errors import AuditError, EmptySupportError, GeometryError
from seqgen.motzkin import MotzkinEnsemble, critical_ensemble, motzkin_state, pinned_ensemble
from seqgen.qpda import BUNDLED, bundled_grammar, compile_to_pda, exact_superposition
from seqgen.seeding import derive_rng

WEIGHTS = {
    "critical-s1": lambda n: critical_ensemble(n, 1),
    "critical-s2": lambda n: critical_ensemble(n, 2),
    "biased-s2": lambda n: MotzkinEnsemble(n, 2, 0.15, 0.35, 0.35, 0.4),
}


@pytest.mark.parametrize("name", WEIGHTS)
def test_gate_blocks_orthogonal(name):
    for basis, U in gate_blocks(WEIGHTS[name](4)).values():
        np.testing.assert_allclose(U.T @ U, np.eye(len(basis)), atol=1e-12)


def test_gate_first_column_is_move_weights():
    ens = WEIGHTS["biased-s2"](4)
    basis, U = gate_blocks(ens)[1]
    np.testing.assert_allclose(U[:, 0] ** 2, [ens.w_zero, ens.w_minus, ens.w_plus, ens.w_plus])


@pytest.mark.parametrize("name", WEIGHTS)
@pytest.mark.parametrize("n", range(2, 9))
def test_two_leg_equals_motzkin_state(name, n):
    ens = WEIGHTS[name](n)
    try:
        ref = motzkin_state(ens)
    except EmptySupportError:
        # odd lengths without flat steps: the circuit must agree that nothing survives
        with pytest.raises(EmptySupportError):
            run_two_leg(n, ens)
        return
    state, stats, info = run_two_leg(n, ens)
    assert state.fidelity(ref) >= 1 - 1e-10
    assert np.max(np.abs(info["norms"] - 1)) < 1e-12


def test_two_leg_success_probability_matches_channel():
    from seqgen.channel import sequential_generate
    from seqgen.motzkin import motzkin_channel

    ens = critical_ensemble(6, 1)
    state, _, _ = run_two_leg(6, ens)
    gen = sequential_generate(motzkin_channel(ens, 4), (), 6, ())
    assert state.success_probability == pytest.approx(gen.success_probability, rel=1e-10)


def test_two_leg_geometry_guard():
    with pytest.raises(GeometryError):
        run_two_leg(8, critical_ensemble(8, 1), width=4)


@pytest.mark.parametrize("name", BUNDLED)
@pytest.mark.parametrize("n", range(1, 7))
def test_three_leg_equals_pda(name, n):
    g = bundled_grammar(name)
    try:
        ref = exact_superposition(compile_to_pda(g), n)
    except EmptySupportError:
        with pytest.raises(EmptySupportError):
            run_three_leg(g, n)
        return
    res = run_three_leg(g, n)
    assert res.state.fidelity(ref) >= 1 - 1e-8


@pytest.mark.parametrize("name", ["motzkin1", "balanced01"])
def test_three_leg_norm_conserved(name):
    res = run_three_leg(bundled_grammar(name), 6)
    assert np.max(np.abs(res.norms - 1)) < 1e-12


def test_reset_x_clears_transients():
    cfg = ThreeLegConfig(1, ("A", X), ((1, FRESH, 0),), ())
    out = reset_x({cfg: 1.0})
    assert list(out) == [cfg._replace(middle=("A",))]


def test_markovianity_audit_passes():
    ens = critical_ensemble(24, 2)
    table = gate_table(ens)
    for i in range(200):
        tr = sample_two_leg(24, ens, derive_rng(0, "audit", i), table=table)
        counts = markovianity_audit(tr)
        assert counts["particles"] == 24
        # unconditioned trajectories: the head never pops below the wall
        assert counts["pop"] <= counts["push"]


def test_markovianity_audit_detects_double_use():
    ens = critical_ensemble(6, 1)
    tr = sample_two_leg(6, ens, 0)
    tr.events.append(tr.events[0])
    with pytest.raises(AuditError) as e:
        markovianity_audit(tr)
    assert e.value.particle == tr.events[0][2]


def test_forced_trajectory_emits_choices():
    ens = critical_ensemble(6, 1)
    tr = sample_two_leg(6, ens, 0, choices=[1, 1, "stay", "pop", "pop", "stay"])
    assert tr.emitted == (1, 1, 0, -1, -1, 0)


def test_sampled_gate_stats_shape():
    st = sampled_gate_stats(64, critical_ensemble(64, 2), 20, seed=1)
    assert st.t.size == st.nontrivial_gates.size == st.active_width.size
    assert st.bulk_mean_gates >= 1
    assert np.all(st.active_width >= 1)
