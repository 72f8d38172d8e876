import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk.walk import (
    HADAMARD,
    L,
    R,
    ChannelState,
    VertexState,
    channel_coordinates,
    channel_to_vertex,
    channel_to_vertex_state,
    default_cycle_size,
    mix_pairs,
    slot_of_channel,
    step_channel,
    step_vertex,
    vertex_to_channel,
    vertex_to_channel_state,
)


def random_channel_state(rng, n, t=0):
    amps = rng.normal(size=n) + 1j * rng.normal(size=n)
    return ChannelState(amps / np.linalg.norm(amps), t)


def slot(n, half_integer_floor):
    """Slot of channel ``m + 1/2``."""
    return slot_of_channel(half_integer_floor + 0.5, n)


def test_hadamard_is_unitary():
    assert np.allclose(HADAMARD @ HADAMARD.conj().T, np.eye(2), atol=1e-14)


@pytest.mark.parametrize(
    "m, t, expected",
    [
        (0, 0, (0, L)),
        (-1, 0, (0, R)),
        (1, 1, (1, L)),
        (1, 0, (2, R)),
        (0, 1, (1, R)),
    ],
)
def test_channel_to_vertex(m, t, expected):
    assert channel_to_vertex(slot(16, m), t, 16) == expected


def test_channel_to_vertex_rejects_bad_slot():
    with pytest.raises(IndexError):
        channel_to_vertex(16, 0, 16)
    with pytest.raises(IndexError):
        channel_to_vertex(-1, 0, 16)


def test_vertex_to_channel_examples():
    n = 16
    assert vertex_to_channel(0, R, 0, n) == slot(n, -1)
    assert vertex_to_channel(1, L, 1, n) == slot(n, 1)


def test_vertex_to_channel_rejects_wrong_parity():
    with pytest.raises(ValueError):
        vertex_to_channel(1, L, 0, 16)


@pytest.mark.parametrize("t", [0, 1, 2, 7])
@pytest.mark.parametrize("n", [4, 10, 16])
def test_mapping_round_trip(n, t):
    images = set()
    for k in range(n):
        pos, chi = channel_to_vertex(k, t, n)
        assert (pos - t) % 2 == 0
        assert vertex_to_channel(pos, chi, t, n) == k
        images.add((pos % n, chi))
    # bijection onto the n parity-allowed (position, chirality) labels
    assert len(images) == n


def test_two_steps_from_right_mover():
    # hand enumeration from |0,R>: amplitudes 1/2 at -2, -1/2 and 1/2 at 0, 1/2 at 2
    n = 16
    s = step_vertex(step_vertex(VertexState.basis(n, 0, R)))
    probs = s.position_probabilities()
    assert probs[-2 % n] == pytest.approx(0.25, abs=1e-15)
    assert probs[0] == pytest.approx(0.5, abs=1e-15)
    assert probs[2] == pytest.approx(0.25, abs=1e-15)
    assert s.amplitudes[-2 % n, L] == pytest.approx(0.5)
    assert s.amplitudes[0, R] == pytest.approx(-0.5)
    assert s.amplitudes[0, L] == pytest.approx(0.5)
    assert s.amplitudes[2, R] == pytest.approx(0.5)


def test_vertex_light_cone_and_parity():
    n = 64
    s = VertexState.basis(n, 0, R)
    for t in range(1, n // 2):
        s = step_vertex(s)
        probs = s.position_probabilities()
        pos = (np.arange(n) + n // 2) % n - n // 2
        outside = np.abs(pos) > t
        assert np.all(probs[outside] == 0.0)
        assert np.all(probs[(pos - t) % 2 == 1] == 0.0)


def test_channel_step_from_minus_half():
    n = 16
    s = step_channel(ChannelState.localized(n, -0.5))
    amps = s.amplitudes
    a, b = slot_of_channel(-0.5, n), slot_of_channel(0.5, n)
    assert abs(amps[a]) == pytest.approx(1 / np.sqrt(2))
    assert abs(amps[b]) == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(amps) == 2
    assert s.time == 1


def test_same_layer_twice_is_identity():
    rng = np.random.default_rng(3)
    for t in (0, 1):
        state = random_channel_state(rng, 12).amplitudes
        assert np.allclose(mix_pairs(mix_pairs(state, t), t), state, atol=1e-14)


def _vertex_oracle_step(state):
    return vertex_to_channel_state(step_vertex(channel_to_vertex_state(state)))


def test_channel_step_matches_vertex_oracle():
    rng = np.random.default_rng(7)
    n = 64
    for _ in range(20):
        a = random_channel_state(rng, n)
        b = a
        for _ in range(50):
            a = step_channel(a)
            b = _vertex_oracle_step(b)
            assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-12
            assert a.time == b.time


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20), st.integers(0, 5))
def test_step_preserves_norm(seed, half_n, t):
    rng = np.random.default_rng(seed)
    s = random_channel_state(rng, 2 * half_n, t)
    assert abs(step_channel(s).norm() - 1.0) < 1e-12
    v = channel_to_vertex_state(s)
    assert abs(step_vertex(v).norm() - 1.0) < 1e-12


def test_unperturbed_walk_is_asymmetric_and_matches_oracle():
    T = 100
    n = default_cycle_size(T)
    a = ChannelState.localized(n, 0.5)
    b = a
    for _ in range(T):
        a = step_channel(a)
        b = _vertex_oracle_step(b)
    probs = a.probabilities()
    assert np.max(np.abs(probs - b.probabilities())) < 1e-12
    x = channel_coordinates(n)
    mean = float(np.dot(probs, x))
    assert abs(mean) > 10
    # mirror image differs substantially
    assert np.abs(probs - probs[::-1]).sum() > 0.5


def test_default_cycle_size():
    assert default_cycle_size(200) == 416
    assert default_cycle_size(0) == 16


def test_state_validation():
    with pytest.raises(ValueError):
        ChannelState(np.ones(5))
    with pytest.raises(ValueError):
        ChannelState(np.ones(2))
    with pytest.raises(ValueError):
        slot_of_channel(0.0, 8)
    with pytest.raises(IndexError):
        slot_of_channel(10.5, 8)


def test_off_parity_vertex_state_rejected():
    v = VertexState.basis(8, 1, L)
    with pytest.raises(ValueError):
        vertex_to_channel_state(v)
