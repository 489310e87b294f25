import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnchip.fock import (
    CutoffError, FockError, ModeTransform, StateVector, apply_mode_transform, apply_phase,
    attenuator, brute_force_oracle, coupler, pattern_probability, permanent,
)

from conftest import random_state, random_unitary

S2 = 1 / math.sqrt(2)


def states_close(a: StateVector, b: StateVector, tol=1e-10):
    keys = set(a.occupations) | set(b.occupations)
    return max(abs(a.amplitude(k) - b.amplitude(k)) for k in keys) < tol


def test_identity_transform_keeps_state():
    s = StateVector.from_dict({(1, 1): 0.6, (2, 0): 0.8j})
    out = apply_mode_transform(s, ModeTransform(np.eye(2)))
    assert states_close(out, s, 1e-14)
    assert out.success_probability == s.success_probability


def test_hom_bunching_on_one_one():
    out = apply_mode_transform(StateVector.basis((1, 1)), coupler(0.5))
    assert abs(out.amplitude((2, 0)) - 1j * S2) < 1e-12
    assert abs(out.amplitude((0, 2)) - 1j * S2) < 1e-12
    assert abs(out.amplitude((1, 1))) < 1e-12


def test_balanced_time_reversed_hom_separates_pair():
    noon = StateVector.from_dict({(2, 0): S2, (0, 2): S2})
    out = apply_mode_transform(noon, coupler(0.5))
    assert abs(out.amplitude((1, 1)) - 1j) < 1e-12
    assert pattern_probability(out, (1, 1)) == pytest.approx(1.0, abs=1e-12)


def test_phase_examples():
    s = StateVector.from_dict({(2, 0): 0.6, (1, 1): 0.8})
    assert states_close(apply_phase(s, 0, 0.0), s, 1e-15)
    phi = 0.37
    out = apply_phase(s, 0, phi)
    assert out.amplitude((2, 0)) == pytest.approx(0.6 * cmath.exp(2j * phi))
    assert out.amplitude((1, 1)) == pytest.approx(0.8 * cmath.exp(1j * phi))
    assert states_close(apply_phase(s, 1, 2 * math.pi), s, 1e-12)


def test_phase_rejects_bad_mode():
    with pytest.raises(FockError):
        apply_phase(StateVector.basis((1, 1)), 2, 0.1)


def test_pattern_probability_examples():
    assert pattern_probability(StateVector.basis((1, 1)), (1, 1)) == 1.0
    bunched = StateVector.from_dict({(2, 0): S2, (0, 2): -S2})
    assert pattern_probability(bunched, (2, 0)) == pytest.approx(0.5)
    assert pattern_probability(bunched, (1, 1)) == 0.0
    with pytest.raises(FockError):
        pattern_probability(bunched, (1, 1, 0))


def test_pattern_probability_for_quarter_wave_morph():
    # (|2,0> + e^{i pi/2}|0,2>)/sqrt2 through the balanced coupler -> P(1,1) = cos^2(pi/4)
    src = StateVector.from_dict({(2, 0): S2, (0, 2): S2 * 1j})
    out = apply_mode_transform(src, coupler(0.5))
    assert pattern_probability(out, (1, 1)) == pytest.approx(0.5, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(FockError):
        apply_mode_transform(StateVector.basis((1, 1)), ModeTransform(np.eye(3)))
    with pytest.raises(FockError):
        brute_force_oracle(StateVector.basis((1, 1)), ModeTransform(np.eye(3)))


def test_cutoff_enforced():
    with pytest.raises(CutoffError):
        StateVector.basis((3, 2))
    StateVector.basis((3, 2), n_max=5)


def test_transform_validation():
    with pytest.raises(FockError):
        ModeTransform(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(FockError):
        ModeTransform(2 * np.eye(2), "subunitary")
    assert ModeTransform.infer(0.5 * np.eye(2)).kind == "subunitary"


def test_permanent_small_cases():
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    assert permanent(a) == pytest.approx(1 * 4 + 2 * 3)
    assert permanent(np.ones((3, 3))) == pytest.approx(6)
    assert permanent(np.zeros((0, 0))) == 1


def test_oracle_identity_and_inverse():
    rng = np.random.default_rng(7)
    for _ in range(20):
        k = int(rng.integers(2, 5))
        s = random_state(rng, k)
        assert states_close(brute_force_oracle(s, ModeTransform(np.eye(k))), s, 1e-12)
        u = random_unitary(rng, k)
        back = brute_force_oracle(brute_force_oracle(s, ModeTransform(u)), ModeTransform(u.conj().T))
        assert states_close(back, s, 1e-10)


def test_oracle_agrees_on_sample():
    rng = np.random.default_rng(11)
    for _ in range(100):
        k = int(rng.integers(2, 5))
        s = random_state(rng, k)
        m = ModeTransform(random_unitary(rng, k))
        assert states_close(apply_mode_transform(s, m), brute_force_oracle(s, m), 1e-10)


def test_oracle_agrees_for_subunitary():
    rng = np.random.default_rng(3)
    for _ in range(30):
        k = int(rng.integers(2, 4))
        s = random_state(rng, k)
        m = ModeTransform.infer(random_unitary(rng, k) @ np.diag(rng.uniform(0.3, 1.0, k)))
        a, b = apply_mode_transform(s, m), brute_force_oracle(s, m)
        assert states_close(a, b, 1e-10)
        assert a.success_probability == pytest.approx(b.success_probability, abs=1e-12)


def test_unitarity_and_photon_number():
    rng = np.random.default_rng(5)
    for _ in range(50):
        k = int(rng.integers(2, 5))
        s = random_state(rng, k)
        out = apply_mode_transform(s, ModeTransform(random_unitary(rng, k)))
        assert abs(out.norm - 1) < 1e-12
        assert out.photon_numbers() <= s.photon_numbers()


def test_composition():
    rng = np.random.default_rng(9)
    for _ in range(30):
        k = int(rng.integers(2, 5))
        s = random_state(rng, k)
        m1, m2 = ModeTransform(random_unitary(rng, k)), ModeTransform(random_unitary(rng, k))
        lhs = apply_mode_transform(apply_mode_transform(s, m1), m2)
        rhs = apply_mode_transform(s, m2 @ m1)
        assert states_close(lhs, rhs, 1e-10)


def test_single_mode_loss_matches_ancilla_model():
    # Loss eta on one mode == beamsplitter onto a vacuum ancilla, post-selected on ancilla vacuum.
    eta = 0.63
    s = StateVector.from_dict({(0,): 0.3, (1,): 0.5, (2,): 0.4 + 0.2j, (3,): 0.6})
    lossy = apply_mode_transform(s, attenuator([eta]))

    t, r = math.sqrt(eta), math.sqrt(1 - eta)
    bs = ModeTransform(np.array([[t, -r], [r, t]], dtype=complex))
    padded = StateVector.from_dict({occ + (0,): a for occ, a in s.as_dict().items()}, modes=2)
    full = apply_mode_transform(padded, bs)
    kept = {occ[:1]: a for occ, a in full.as_dict().items() if occ[1] == 0}
    p_keep = sum(abs(a) ** 2 for a in kept.values())
    ref = StateVector.from_dict(kept, modes=1)

    assert lossy.success_probability == pytest.approx(p_keep, abs=1e-12)
    assert states_close(lossy, ref, 1e-12)


def test_json_round_trip_is_byte_stable():
    s = StateVector.from_dict({(2, 0): 0.6, (0, 2): -0.8j})
    text = s.to_json()
    back = StateVector.from_json(text)
    assert back.to_json() == text
    assert back.occupations == ((0, 2), (2, 0))


def test_basis_order_is_lexicographic():
    s = StateVector.from_dict({(2, 0): 1, (1, 1): 1, (0, 2): 1})
    assert s.occupations == ((0, 2), (1, 1), (2, 0))


@settings(max_examples=60, deadline=None)
@given(
    theta=st.floats(-10, 10),
    ratio=st.floats(0, 1),
    phase=st.floats(-10, 10),
)
def test_probabilities_insensitive_to_global_phase(theta, ratio, phase):
    s = StateVector.from_dict({(2, 0): 0.6, (0, 2): 0.8 * cmath.exp(1j * phase)})
    a = apply_mode_transform(s, coupler(ratio))
    b = apply_mode_transform(s.with_global_phase(theta), coupler(ratio))
    for occ in ((2, 0), (1, 1), (0, 2)):
        assert pattern_probability(a, occ) == pytest.approx(pattern_probability(b, occ), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(phase=st.floats(-20, 20), mode=st.integers(0, 1))
def test_phase_is_norm_preserving(phase, mode):
    s = StateVector.from_dict({(2, 0): 0.6, (1, 1): 0.48, (0, 2): 0.64j})
    out = apply_phase(s, mode, phase)
    assert abs(out.norm - 1) < 1e-12
    for occ in s.occupations:
        assert pattern_probability(out, occ) == pytest.approx(pattern_probability(s, occ), abs=1e-12)
