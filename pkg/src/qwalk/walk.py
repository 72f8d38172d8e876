"""
Unperturbed discrete-time quantum walk on a cycle of N channels.

Two equivalent representations are kept side by side:

* the vertex basis, amplitudes indexed by ``(position mod N, chirality)``
  with chirality ``R = 0`` and ``L = 1`` (the coin acts on the ordered
  pair ``(R, L)``);
* the channel basis, amplitudes indexed by slot ``k`` which stands for the
  half-integer channel ``k - N/2 + 1/2``.

The channel step is a brick-wall layer of 2x2 coin mixings; the vertex step
is coin-then-shift.  The two are related by the time dependent
channel <-> vertex map and must agree to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "R",
    "L",
    "HADAMARD",
    "ChannelState",
    "VertexState",
    "default_cycle_size",
    "slot_of_channel",
    "channel_of_slot",
    "channel_coordinates",
    "channel_to_vertex",
    "vertex_to_channel",
    "channel_to_vertex_state",
    "vertex_to_channel_state",
    "step_vertex",
    "step_channel",
    "mix_pairs",
    "pair_slots",
]

R = 0
L = 1

HADAMARD: NDArray[np.complex128] = np.array(
    [[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128
) / np.sqrt(2.0)


def _check_cycle_size(n: int) -> None:
    if n <= 2 or n % 2:
        raise ValueError(f"cycle size must be even and > 2 (got N={n})")


def default_cycle_size(steps: int) -> int:
    """Smallest even N that keeps a ``steps``-step walk from wrapping (2T + 16)."""
    n = 2 * int(steps) + 16
    return n + (n % 2)


def slot_of_channel(channel: float, n: int) -> int:
    """Slot index of the half-integer channel coordinate ``channel``."""
    k = channel + n / 2 - 0.5
    if k != int(k):
        raise ValueError(f"channel coordinate must be a half-integer (got {channel})")
    k = int(k)
    if not 0 <= k < n:
        raise IndexError(f"channel {channel} outside a cycle of {n} channels")
    return k


def channel_of_slot(slot: int, n: int) -> float:
    return slot - n / 2 + 0.5


def channel_coordinates(n: int) -> NDArray[np.float64]:
    """Half-integer channel coordinates of slots ``0 .. n-1``."""
    return np.arange(n, dtype=np.float64) - n / 2 + 0.5


def _wrap_position(pos: int, n: int) -> int:
    # representative in [-N/2, N/2)
    return (pos + n // 2) % n - n // 2


def channel_to_vertex(slot: int, t: int, n: int) -> tuple[int, int]:
    """
    Map channel slot ``slot`` at time ``t`` to its vertex-basis label.

    Channel ``m + 1/2`` is ``|m, L>`` when ``m`` and ``t`` have the same
    parity and ``|m + 1, R>`` otherwise.

    Returns
    -------
    (position, chirality)
        Position is reduced to ``[-N/2, N/2)``.
    """
    if not 0 <= slot < n:
        raise IndexError(f"slot {slot} out of range for N={n}")
    m = slot - n // 2
    if (m - t) % 2 == 0:
        return _wrap_position(m, n), L
    return _wrap_position(m + 1, n), R


def vertex_to_channel(position: int, chirality: int, t: int, n: int) -> int:
    """Inverse of :func:`channel_to_vertex`; the vertex must have the parity of ``t``."""
    if (position - t) % 2:
        raise ValueError(
            f"position {position} does not share the parity of t={t}; "
            "no channel maps onto it"
        )
    if chirality == L:
        m = position
    elif chirality == R:
        m = position - 1
    else:
        raise ValueError(f"unknown chirality {chirality!r}")
    return (m + n // 2) % n


@dataclass
class ChannelState:
    """Pure walker state in the channel basis at timestep ``time``."""

    amplitudes: NDArray[np.complex128]
    time: int = 0

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        _check_cycle_size(self.amplitudes.shape[-1])

    @property
    def n(self) -> int:
        return self.amplitudes.shape[-1]

    @classmethod
    def localized(cls, n: int, channel: float = 0.5) -> "ChannelState":
        amps = np.zeros(n, dtype=np.complex128)
        amps[slot_of_channel(channel, n)] = 1.0
        return cls(amps, 0)

    def probabilities(self) -> NDArray[np.float64]:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class VertexState:
    """Pure walker state in the vertex basis, ``amplitudes[position mod N, chirality]``."""

    amplitudes: NDArray[np.complex128]
    time: int = 0
    n: int = field(init=False)

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.ndim != 2 or self.amplitudes.shape[1] != 2:
            raise ValueError("vertex amplitudes must have shape (N, 2)")
        self.n = self.amplitudes.shape[0]
        _check_cycle_size(self.n)

    @classmethod
    def basis(cls, n: int, position: int, chirality: int) -> "VertexState":
        amps = np.zeros((n, 2), dtype=np.complex128)
        amps[position % n, chirality] = 1.0
        return cls(amps, 0)

    def position_probabilities(self) -> NDArray[np.float64]:
        """Probability per position, indexed by ``position mod N``."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def channel_to_vertex_state(state: ChannelState) -> VertexState:
    n, t = state.n, state.time
    out = np.zeros((n, 2), dtype=np.complex128)
    for k in range(n):
        pos, chi = channel_to_vertex(k, t, n)
        out[pos % n, chi] = state.amplitudes[k]
    return VertexState(out, t)


def vertex_to_channel_state(state: VertexState) -> ChannelState:
    """Project a vertex state onto channels; off-parity amplitude must vanish."""
    n, t = state.n, state.time
    out = np.zeros(n, dtype=np.complex128)
    seen = np.zeros((n, 2), dtype=bool)
    for k in range(n):
        pos, chi = channel_to_vertex(k, t, n)
        out[k] = state.amplitudes[pos % n, chi]
        seen[pos % n, chi] = True
    if np.any(state.amplitudes[~seen] != 0):
        raise ValueError("vertex state has amplitude outside the parity-allowed subspace")
    return ChannelState(out, t)


def step_vertex(state: VertexState, coin: NDArray[np.complex128] = HADAMARD) -> VertexState:
    """One coin-then-shift step: ``|n,L> -> |n+1,R>``, ``|n,R> -> |n-1,L>``."""
    tossed = state.amplitudes @ np.asarray(coin).T
    out = np.empty_like(tossed)
    out[:, R] = np.roll(tossed[:, L], 1)
    out[:, L] = np.roll(tossed[:, R], -1)
    return VertexState(out, state.time + 1)


def pair_slots(n: int, t: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """
    Slot pairs mixed at time ``t``.

    Vertex ``m`` with ``m = t (mod 2)`` joins channels ``m - 1/2`` (carrying R)
    and ``m + 1/2`` (carrying L), i.e. slots ``(a, a + 1 mod N)`` with
    ``a = m - 1 + N/2``.
    """
    first = (t + n // 2 + 1) % 2
    a = np.arange(first, n, 2)
    return a, (a + 1) % n


def mix_pairs(
    amplitudes: NDArray[np.complex128],
    t: int,
    coin: NDArray[np.complex128] = HADAMARD,
) -> NDArray[np.complex128]:
    """Brick-wall layer on the last axis; leading axes are batch dimensions."""
    n = amplitudes.shape[-1]
    coin = np.asarray(coin)
    if np.all(coin.imag == 0):
        coin = coin.real
    (m00, m01), (m10, m11) = coin.tolist()
    out = np.empty(amplitudes.shape, dtype=np.result_type(amplitudes, coin))
    if (t + n // 2 + 1) % 2 == 0:
        xa, xb = amplitudes[..., 0::2], amplitudes[..., 1::2]
        out[..., 0::2] = m00 * xa + m01 * xb
        out[..., 1::2] = m10 * xa + m11 * xb
    else:
        # pairs (1,2), (3,4), ..., (N-1, 0)
        xa = amplitudes[..., 1::2]
        xb = np.concatenate([amplitudes[..., 2::2], amplitudes[..., :1]], axis=-1)
        out[..., 1::2] = m00 * xa + m01 * xb
        nb = m10 * xa + m11 * xb
        out[..., 2::2] = nb[..., :-1]
        out[..., 0] = nb[..., -1]
    return out


def step_channel(state: ChannelState, coin: NDArray[np.complex128] = HADAMARD) -> ChannelState:
    return ChannelState(mix_pairs(state.amplitudes, state.time, coin), state.time + 1)
