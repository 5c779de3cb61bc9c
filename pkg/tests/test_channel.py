import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqgen.channel import (DensityOperator, KrausChannel, RadiatedState, amplitude_damping,
                            apply_channel, apply_dual, channel_from_json, channel_to_json,
                            cut_spectrum, depolarizing, evolve_state, ghz_channel,
                            identity_channel, mps_discarded_weight, random_channel,
                            renyi_entropy_channel, renyi_from_spectrum, sequential_generate,
                            steady_state_of_channel, steady_state_power)
from seqgen.errors import CutError, DegenerateSteadyStateError, DimensionError, EmptySupportError


def brute_amplitudes(ch, start, final, n):
    """Every string, amplitude <final| K_sn ... K_s1 |start> (oracle)."""
    chi = ch.emitter_dim
    v0 = np.zeros(chi, dtype=complex)
    v0[start] = 1
    out = {}
    for word in itertools.product(range(len(ch.symbols)), repeat=n):
        v = v0
        for i in word:
            v = np.asarray(ch.kraus[i]) @ v
        if abs(v[final]) > 1e-14:
            out[tuple(ch.symbols[i] for i in word)] = v[final]
    return out


def direct_renyi(state, cut, order):
    return renyi_from_spectrum(state.schmidt_values(cut), order)


def test_kraus_completeness_enforced():
    with pytest.raises(ValueError):
        KrausChannel((np.eye(2), np.eye(2)), (0, 1))
    KrausChannel((0.5 * np.eye(2),), (0,), normalization="sub")
    with pytest.raises(DimensionError):
        KrausChannel((np.eye(2), np.zeros((3, 3))), (0, 1))


def test_compose_rechecks_completeness():
    a, b = random_channel(3, 2, rng=1), random_channel(3, 3, rng=2)
    c = a.compose(b)
    assert c.completeness_residual() < 1e-12
    assert len(c.symbols) == 6
    with pytest.raises(DimensionError):
        a.compose(random_channel(2, 2, rng=0))


def test_apply_channel_trace_and_dual_pairing():
    ch = random_channel(4, 3, rng=5)
    rng = np.random.default_rng(0)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    o = rng.normal(size=(4, 4))
    o = o + o.T
    out = apply_channel(DensityOperator(rho), ch)
    assert out.trace() == pytest.approx(1.0)
    # Tr[O E(rho)] = Tr[E*(O) rho]
    lhs = np.trace(o @ out.matrix)
    rhs = np.trace(apply_dual(o, ch).matrix @ rho)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_amplitude_damping_single_step():
    ch = amplitude_damping(0.3)
    rho = np.diag([0.0, 1.0])
    out = apply_channel(DensityOperator(rho), ch).matrix
    np.testing.assert_allclose(np.diag(out).real, [0.3, 0.7])


def test_ghz_channel_state():
    st = sequential_generate(ghz_channel(), 1, 5, 1)
    assert st.support == {(1,) * 5}


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("n", [1, 3, 5])
def test_sequential_generate_matches_brute_force(seed, n):
    ch = random_channel(3, 2, rng=seed)
    st = sequential_generate(ch, 0, n, 1)
    raw = brute_amplitudes(ch, 0, 1, n)
    prob = math.fsum(abs(a) ** 2 for a in raw.values())
    assert st.success_probability == pytest.approx(prob, abs=1e-12)
    for k, a in raw.items():
        assert st.amplitude(k) == pytest.approx(a / math.sqrt(prob), abs=1e-12)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_success_probability_is_trace_formula(n):
    ch = random_channel(4, 2, rng=11)
    st = sequential_generate(ch, 2, n, 3)
    rho = evolve_state(ch, 2, n)
    assert st.success_probability == pytest.approx(rho[3, 3].real, abs=1e-10)


def test_unreachable_final_raises():
    with pytest.raises(EmptySupportError):
        sequential_generate(ghz_channel(), 0, 4, 1)


@given(seed=st.integers(0, 10 ** 6), chi=st.integers(2, 8), n=st.integers(2, 7),
       data=st.data())
@settings(max_examples=25, deadline=None)
def test_channel_renyi2_equals_schmidt(seed, chi, n, data):
    n_sym = 2 if chi > 4 else 3
    if n_sym ** n > 3000:
        n = 5
    ch = random_channel(chi, n_sym, rng=seed)
    start = data.draw(st.integers(0, chi - 1))
    final = data.draw(st.integers(0, chi - 1))
    state = sequential_generate(ch, start, n, final)
    for cut in range(1, n):
        assert renyi_entropy_channel(ch, start, final, n, cut, 2) == pytest.approx(
            direct_renyi(state, cut, 2), abs=1e-8)


def test_renyi_orders_consistent():
    ch = random_channel(3, 3, rng=4)
    state = sequential_generate(ch, 0, 6, 0)
    for order in (1, 2, 3, np.inf):
        assert renyi_entropy_channel(ch, 0, 0, 6, 3, order) == pytest.approx(
            direct_renyi(state, 3, order), abs=1e-8)
    p = cut_spectrum(ch, 0, 0, 6, 3)
    assert p.sum() == pytest.approx(1.0)


def test_cut_out_of_range():
    ch = random_channel(2, 2, rng=0)
    with pytest.raises(CutError):
        renyi_entropy_channel(ch, 0, 0, 4, 4)
    with pytest.raises(CutError):
        renyi_entropy_channel(ch, 0, 0, 4, 0)


def test_product_channel_has_zero_entropy():
    ch = identity_channel(1)
    st = sequential_generate(ch, 0, 4, 0)
    assert st.support == {(0, 0, 0, 0)}
    assert direct_renyi(st, 2, 2) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("chi", [2, 3, 4])
def test_mps_rank_bounded_by_emitter_dimension(chi):
    ch = random_channel(chi, 2, rng=chi)
    state = sequential_generate(ch, 0, 8, 0)
    assert max(mps_discarded_weight(state, chi)) <= 1e-12


def test_steady_state_depolarizing():
    rho = steady_state_of_channel(depolarizing(3, 1.0)).matrix
    np.testing.assert_allclose(rho, np.eye(3) / 3, atol=1e-12)


def test_steady_state_amplitude_damping():
    rho = steady_state_of_channel(amplitude_damping(0.4)).matrix
    np.testing.assert_allclose(rho, np.diag([1.0, 0.0]), atol=1e-12)


def test_steady_state_solvers_agree():
    ch = random_channel(4, 3, rng=9)
    a = steady_state_of_channel(ch).matrix
    b = steady_state_power(ch)
    np.testing.assert_allclose(a, b, atol=1e-9)
    assert np.abs(apply_channel(a, ch).matrix - a).max() < 1e-10


def test_degenerate_steady_state():
    with pytest.raises(DegenerateSteadyStateError):
        steady_state_of_channel(identity_channel(2))


def test_deep_cut_entropy_is_steady_state_entropy():
    ch = random_channel(3, 3, rng=21)
    w = np.sort(np.abs(np.linalg.eigvals(ch.transfer_matrix())))[::-1]
    assert w[1] < 0.7  # gapped
    rho = steady_state_of_channel(ch).matrix
    target = renyi_from_spectrum(np.linalg.eigvalsh(rho), 2)
    assert renyi_entropy_channel(ch, 0, 1, 80, 40, 2) == pytest.approx(target, abs=1e-6)


def test_radiated_state_normalises_and_drops_tiny():
    st = RadiatedState(2, (0, 1), {(0, 0): 3.0, (1, 1): 4.0, (0, 1): 1e-20})
    assert st.norm() == pytest.approx(1.0)
    assert st.amplitude((0, 0)) == pytest.approx(0.6)
    assert (0, 1) not in st.support
    v = st.to_vector()
    assert v[0] == pytest.approx(0.6) and v[3] == pytest.approx(0.8)


def test_json_roundtrip():
    ch = random_channel(3, 2, rng=3)
    text = channel_to_json(ch, start=1, final=2)
    back, rest = channel_from_json(text)
    assert rest == {"start": 1, "final": 2}
    for a, b in zip(ch.kraus, back.kraus):
        np.testing.assert_array_equal(a, b)
    assert back.symbols == ch.symbols


def test_bundled_channel_fixture_loads():
    from importlib import resources

    text = resources.files("seqgen").joinpath("data", "random3.json").read_text()
    ch, rest = channel_from_json(text)
    assert ch.emitter_dim == 3
    assert ch.completeness_residual() < 1e-10
