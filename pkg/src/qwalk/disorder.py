"""
Random jump permutations on a cycle of N channels.

A configuration is a set of non-incident transpositions ``(i, i + j mod N)``.
Its weight is ``p**k * (1 - p)**(N - 2k)`` for ``k`` transpositions, and the
normalisation is ``(1 + (-p)**(N/g))**g`` with ``g = gcd(N, j)``.  Stepping by
``j`` splits the slots into ``g`` cycles of length ``M = N/g``; a
configuration is a matching on each of those cycles, which is what the exact
sampler exploits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb, gcd
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from qwalk.walk import ChannelState

__all__ = [
    "ValidationError",
    "DisorderParams",
    "JumpSet",
    "CycleDecomposition",
    "matching_count",
    "path_weights",
    "partition_function",
    "partition_function_bruteforce",
    "enumerate_jump_sets",
    "jump_set_probability",
    "sample_jump_set",
    "sample_start_masks",
    "apply_jumps",
    "swap_permutations",
]

MODES = ("static", "dynamic")
BRUTEFORCE_MAX_N = 20


class ValidationError(ValueError):
    """Parameters violate a model constraint."""


@dataclass(frozen=True)
class DisorderParams:
    N: int
    j: int
    p: float
    mode: str = "static"

    def __post_init__(self) -> None:
        if self.N <= 2:
            raise ValidationError(f"N must exceed 2 (got N={self.N})")
        if not 0 < self.j < self.N:
            raise ValidationError(f"jump size must satisfy 0 < j < N (got j={self.j}, N={self.N})")
        if not 0.0 <= self.p < 1.0:
            raise ValidationError(f"p must lie in [0, 1) (got p={self.p})")
        if self.N // gcd(self.N, self.j) <= 2:
            raise ValidationError(
                f"N/gcd(N,j) must exceed 2 (got N={self.N}, j={self.j}); "
                "for a 2-cycle the closed form fails (Z = p + (1-p)^2)"
            )
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES} (got {self.mode!r})")

    @property
    def g(self) -> int:
        return gcd(self.N, self.j)

    @property
    def M(self) -> int:
        return self.N // self.g


@dataclass(frozen=True)
class CycleDecomposition:
    """The ``g`` cycles ``c, c + j, c + 2j, ...`` (mod N), one row per cycle."""

    N: int
    j: int

    @cached_property
    def cycles(self) -> NDArray[np.intp]:
        g = gcd(self.N, self.j)
        m = self.N // g
        return (np.arange(g)[:, None] + self.j * np.arange(m)[None, :]) % self.N

    @property
    def g(self) -> int:
        return self.cycles.shape[0]

    @property
    def M(self) -> int:
        return self.cycles.shape[1]


@dataclass(frozen=True)
class JumpSet:
    """
    Transpositions ``(i, i + j mod N)`` for every ``i`` in ``starts``.

    Raises ``ValueError`` on construction if two transpositions share a slot.
    """

    starts: tuple[int, ...]
    N: int
    j: int

    def __post_init__(self) -> None:
        starts = tuple(sorted(int(s) for s in self.starts))
        object.__setattr__(self, "starts", starts)
        touched = set()
        for s in starts:
            if not 0 <= s < self.N:
                raise ValueError(f"start {s} out of range for N={self.N}")
            for slot in (s, (s + self.j) % self.N):
                if slot in touched:
                    raise ValueError(f"transpositions are incident at slot {slot}")
                touched.add(slot)

    @classmethod
    def empty(cls, N: int, j: int) -> "JumpSet":
        return cls((), N, j)

    @classmethod
    def from_mask(cls, mask: NDArray[np.bool_], j: int) -> "JumpSet":
        return cls(tuple(np.flatnonzero(mask).tolist()), len(mask), j)

    def __len__(self) -> int:
        return len(self.starts)

    def permutation(self) -> NDArray[np.intp]:
        """Index array ``perm`` with ``new[k] = old[perm[k]]``."""
        perm = np.arange(self.N)
        for s in self.starts:
            e = (s + self.j) % self.N
            perm[s], perm[e] = e, s
        return perm


def matching_count(M: int, k: int) -> int:
    """Number of ``k``-edge matchings on the cycle graph ``C_M``."""
    if M <= 2:
        raise ValueError(f"matching count formula needs M > 2 (got M={M})")
    if not 0 <= k <= M // 2:
        raise ValueError(f"k must lie in [0, {M // 2}] (got k={k})")
    if k == 0:
        return 1
    return comb(M - k, k) + comb(M - k - 1, k - 1)


def path_weights(m: int, p: float) -> NDArray[np.float64]:
    """
    Matching partition functions ``W(0..m)`` of paths with 0..m vertices.

    ``W(m) = (1-p) W(m-1) + p W(m-2)``.  The recurrence has roots ``1`` and
    ``-p`` so ``W(m) = (1 + p (-p)**m) / (1 + p) >= 1 - p``; it never
    underflows and needs no log-space handling.
    """
    w = np.empty(max(m, 1) + 1)
    w[0] = 1.0
    w[1] = 1.0 - p
    for i in range(2, m + 1):
        w[i] = (1.0 - p) * w[i - 1] + p * w[i - 2]
    return w[: m + 1]


def partition_function(params: DisorderParams) -> float:
    return (1.0 + (-params.p) ** params.M) ** params.g


def enumerate_jump_sets(N: int, j: int) -> Iterator[JumpSet]:
    """Yield every valid jump set on ``N`` slots (exponential; ``N <= 20``)."""
    if N > BRUTEFORCE_MAX_N:
        raise ValueError(f"enumeration limited to N <= {BRUTEFORCE_MAX_N} (got N={N})")
    used = [False] * N
    chosen: list[int] = []

    def rec(start: int) -> Iterator[JumpSet]:
        yield JumpSet(tuple(chosen), N, j)
        for s in range(start, N):
            e = (s + j) % N
            if used[s] or used[e] or s == e:
                continue
            used[s] = used[e] = True
            chosen.append(s)
            yield from rec(s + 1)
            chosen.pop()
            used[s] = used[e] = False

    yield from rec(0)


def partition_function_bruteforce(params: DisorderParams) -> float:
    """Normalisation by explicit enumeration of all jump sets."""
    counts: dict[int, int] = {}
    for s in enumerate_jump_sets(params.N, params.j):
        counts[len(s)] = counts.get(len(s), 0) + 1
    p, n = params.p, params.N
    return float(sum(c * p**k * (1 - p) ** (n - 2 * k) for k, c in sorted(counts.items())))


def jump_set_probability(s: JumpSet, params: DisorderParams) -> float:
    if (s.N, s.j) != (params.N, params.j):
        raise ValueError("jump set geometry does not match the disorder parameters")
    k = len(s)
    p = params.p
    return p**k * (1 - p) ** (params.N - 2 * k) / partition_function(params)


def sample_start_masks(
    uniforms: NDArray[np.float64], N: int, j: int, p: float
) -> NDArray[np.bool_]:
    """
    Exact batched sampler.

    ``uniforms`` has shape ``(..., N)``; each row is consumed as ``g`` blocks
    of ``M`` numbers, one block per cycle, and yields one jump set as a
    boolean mask over start slots.

    Vertex 0 of a cycle is first classified as free / matched forward /
    matched backward with weights ``(1-p) W(M-1)``, ``p W(M-2)``,
    ``p W(M-2)``; the path that remains is then matched left to right, each
    vertex pairing with its successor with probability
    ``p W(r-2) / W(r)`` where ``r`` is the number of path vertices left.
    """
    dec = CycleDecomposition(N, j)
    g, m = dec.g, dec.M
    if m <= 2:
        raise ValueError(f"N/gcd(N,j) must exceed 2 (got {m})")
    batch = uniforms.shape[:-1]
    # cycle position leading so that every u[k] below is contiguous
    u = np.moveaxis(uniforms.reshape(batch + (g, m)), -1, 0).copy()
    w = path_weights(m, p)

    z = (1 - p) * w[m - 1] + 2 * p * w[m - 2]
    free = (1 - p) * w[m - 1] / z
    fwd = free + p * w[m - 2] / z
    to_next = (u[0] >= free) & (u[0] < fwd)
    to_prev = u[0] >= fwd

    edges = np.zeros((m,) + batch + (g,), dtype=bool)
    edges[0] = to_next
    edges[m - 1] = to_prev

    # pair_prob[r]: a path with r vertices left pairs its first vertex forward
    pair_prob = np.zeros(m + 1)
    # W vanishes for odd paths only at p = 1, where that state is unreachable
    np.divide(p * w[: m - 1], w[2:], out=pair_prob[2:], where=w[2:] > 0)

    # the remaining path ends at m-1, or at m-2 when vertex 0 took m-1
    skip = to_next
    for k in range(1, m - 1):
        lo, hi = pair_prob[m - k - 1], pair_prob[m - k]
        limit = np.where(to_prev, lo, hi) if lo != hi else hi
        take = u[k] < limit
        take &= ~skip
        edges[k] |= take
        skip = take

    mask = np.zeros(batch + (N,), dtype=bool)
    mask[..., dec.cycles.ravel()] = np.moveaxis(edges, 0, -1).reshape(batch + (N,))
    return mask


def sample_jump_set(params: DisorderParams, rng: np.random.Generator) -> JumpSet:
    """Draw one jump set exactly from the jump measure, consuming ``N`` uniforms."""
    u = rng.random(params.N)
    return JumpSet.from_mask(sample_start_masks(u, params.N, params.j, params.p), params.j)


def swap_permutations(mask: NDArray[np.bool_], j: int) -> NDArray[np.int32]:
    """Gather indices for start masks of shape ``(..., N)``; ``new = take(old, perm)``."""
    n = mask.shape[-1]
    shift = mask.astype(np.int32)
    shift -= np.roll(mask, j, axis=-1)
    shift *= j
    shift += np.arange(n, dtype=np.int32)
    return np.remainder(shift, n, out=shift)


def apply_jumps(state: ChannelState, s: JumpSet) -> ChannelState:
    if s.N != state.n:
        raise ValueError(f"jump set is for N={s.N}, state has N={state.n}")
    return ChannelState(state.amplitudes[s.permutation()], state.time)
