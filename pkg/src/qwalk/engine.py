"""
Disorder-averaged evolution of the jump-perturbed walk.

Every Monte Carlo run evolves a pure channel state; each step is the
brick-wall walk layer followed by the run's jump permutation.  The engine
returns the run average of ``|psi|^2``, i.e. the position diagonal of the
averaged density matrix.

Reproducibility
---------------
Run ``r`` draws its uniforms from a Philox stream keyed by
``(master_seed, r)``.  Each jump set consumes exactly ``N`` uniforms, so the
numbers used at timestep ``t`` sit at a fixed counter offset and depend only
on ``(master_seed, r, t)``.  Runs are processed in fixed-size chunks whose
partial sums are combined in chunk order, which makes the result independent
of the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from qwalk import stats
from qwalk.disorder import (
    DisorderParams,
    JumpSet,
    ValidationError,
    apply_jumps,
    sample_start_masks,
    swap_permutations,
)
from qwalk.walk import (
    HADAMARD,
    ChannelState,
    channel_coordinates,
    mix_pairs,
    slot_of_channel,
    step_channel,
)

__all__ = [
    "RunConfig",
    "DistributionSeries",
    "run_stream",
    "jump_schedule",
    "run_single",
    "run_static",
    "run_dynamic",
    "simulate",
    "summarize",
    "sweep",
    "resolve_threads",
]

CHUNK = 64

Schedule = Union[Sequence[JumpSet], Callable[[int], JumpSet]]


@dataclass(frozen=True)
class RunConfig:
    disorder: DisorderParams
    T: int
    R: int = 1
    initial_channel: float = 0.5
    master_seed: int = 0
    record_every: int = 1
    allow_wrap: bool = False

    def __post_init__(self) -> None:
        n = self.disorder.N
        if self.T < 0:
            raise ValidationError(f"T must be >= 0 (got T={self.T})")
        if self.R < 1:
            raise ValidationError(f"R must be >= 1 (got R={self.R})")
        if self.record_every < 1:
            raise ValidationError(f"record_every must be >= 1 (got {self.record_every})")
        if n % 2:
            raise ValidationError(f"N must be even (got N={n})")
        if not 0 <= self.master_seed < 2**64:
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        if not self.allow_wrap and n < 2 * self.T + 2:
            raise ValidationError(
                f"N must be at least 2T+2 = {2 * self.T + 2} to avoid wrap-around "
                f"(got N={n}); pass allow_wrap to override"
            )
        try:
            slot_of_channel(self.initial_channel, n)
        except (ValueError, IndexError) as exc:
            raise ValidationError(str(exc)) from None

    @property
    def N(self) -> int:
        return self.disorder.N

    @property
    def initial_slot(self) -> int:
        return slot_of_channel(self.initial_channel, self.N)

    def recorded_times(self) -> list[int]:
        times = list(range(0, self.T + 1, self.record_every))
        if times[-1] != self.T:
            times.append(self.T)
        return times


@dataclass
class DistributionSeries:
    """Run-averaged channel distributions at the recorded timesteps."""

    times: NDArray[np.int64]
    probabilities: NDArray[np.float64]
    config: RunConfig
    coordinates: NDArray[np.float64] = field(init=False)

    def __post_init__(self) -> None:
        self.coordinates = channel_coordinates(self.config.N)

    @property
    def snapshots(self) -> list[tuple[int, NDArray[np.float64]]]:
        return [(int(t), row) for t, row in zip(self.times, self.probabilities)]

    @property
    def final(self) -> NDArray[np.float64]:
        return self.probabilities[-1]

    def at(self, t: int) -> NDArray[np.float64]:
        hits = np.flatnonzero(self.times == t)
        if not hits.size:
            raise KeyError(f"timestep {t} was not recorded")
        return self.probabilities[hits[0]]


def run_stream(config: RunConfig, run_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[config.master_seed, run_index]))


def _draws_per_run(config: RunConfig) -> int:
    return 1 if config.disorder.mode == "static" else max(config.T, 1)


def jump_schedule(config: RunConfig, run_index: int) -> list[JumpSet]:
    """Jump sets used by run ``run_index``: one (static) or one per step (dynamic)."""
    d = config.disorder
    u = run_stream(config, run_index).random((_draws_per_run(config), d.N))
    masks = sample_start_masks(u, d.N, d.j, d.p)
    return [JumpSet.from_mask(m, d.j) for m in masks]


def _schedule_at(schedule: Schedule, t: int) -> JumpSet:
    if callable(schedule):
        return schedule(t)
    if len(schedule) == 1:
        return schedule[0]
    return schedule[t]


def run_single(
    config: RunConfig,
    schedule: Schedule,
    coin: NDArray[np.complex128] = HADAMARD,
) -> NDArray[np.float64]:
    """
    Evolve one pure state, state object by state object.

    ``schedule`` is either a callable ``t -> JumpSet`` or a sequence holding
    one jump set per step; a one-element sequence is reused every step.
    Returns ``|psi|^2`` at :meth:`RunConfig.recorded_times`.
    """
    state = ChannelState.localized(config.N, config.initial_channel)
    times = config.recorded_times()
    out = np.empty((len(times), config.N))
    out[0] = state.probabilities()
    row = 1
    for t in range(config.T):
        state = apply_jumps(step_channel(state, coin), _schedule_at(schedule, t))
        if row < len(times) and times[row] == t + 1:
            out[row] = state.probabilities()
            row += 1
    return out


def _run_chunk(config: RunConfig, runs: range) -> NDArray[np.float64]:
    """Sum of ``|psi|^2`` over ``runs`` at every recorded time."""
    d = config.disorder
    n = d.N
    times = config.recorded_times()
    acc = np.zeros((len(times), n))

    # a real coin acting on a real start state keeps every amplitude real
    dtype = np.float64 if np.all(HADAMARD.imag == 0) else np.complex128
    psi = np.zeros((len(runs), n), dtype=dtype)
    psi[:, config.initial_slot] = 1.0
    acc[0] = np.sum(np.abs(psi) ** 2, axis=0)
    if config.T == 0:
        return acc

    masks = None
    if d.p > 0:
        u = np.stack([run_stream(config, r).random((_draws_per_run(config), n)) for r in runs])
        masks = sample_start_masks(u, n, d.j, d.p)
        del u
    # flat gather offsets into the (runs, N) state array
    offsets = (np.arange(len(runs), dtype=np.int32) * n)[:, None]
    perm = None
    if masks is not None and d.mode == "static":
        perm = swap_permutations(masks[:, 0], d.j) + offsets

    row = 1
    for t in range(config.T):
        psi = mix_pairs(psi, t)
        if masks is not None:
            if d.mode == "dynamic":
                perm = swap_permutations(masks[:, t], d.j) + offsets
            psi = np.take(psi, perm)
        if row < len(times) and times[row] == t + 1:
            acc[row] = np.sum(np.abs(psi) ** 2, axis=0)
            row += 1
    return acc


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("QWALK_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _average(config: RunConfig, threads: int | None) -> DistributionSeries:
    chunks = [range(lo, min(lo + CHUNK, config.R)) for lo in range(0, config.R, CHUNK)]
    workers = min(resolve_threads(threads), len(chunks))
    if workers == 1:
        parts: Iterable[NDArray[np.float64]] = map(lambda c: _run_chunk(config, c), chunks)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        parts = pool.map(lambda c: _run_chunk(config, c), chunks)
    total = np.zeros((len(config.recorded_times()), config.N))
    for part in parts:  # chunk order, regardless of completion order
        total += part
    if workers > 1:
        pool.shutdown()
    return DistributionSeries(
        np.asarray(config.recorded_times(), dtype=np.int64), total / config.R, config
    )


def run_static(config: RunConfig, threads: int | None = None) -> DistributionSeries:
    """Average over ``R`` runs, each with one jump set reused at every step."""
    if config.disorder.mode != "static":
        raise ValueError("run_static needs mode='static'")
    return _average(config, threads)


def run_dynamic(config: RunConfig, threads: int | None = None) -> DistributionSeries:
    """Average over ``R`` runs with a fresh jump set at every step."""
    if config.disorder.mode != "dynamic":
        raise ValueError("run_dynamic needs mode='dynamic'")
    return _average(config, threads)


def simulate(config: RunConfig, threads: int | None = None) -> DistributionSeries:
    if config.disorder.mode == "static":
        return run_static(config, threads)
    return run_dynamic(config, threads)


def summarize(
    dist: NDArray[np.float64],
    *,
    t: int,
    j: int,
    R: int,
    initial_channel: float = 0.5,
) -> dict[str, float]:
    """Final-time observables of one channel distribution."""
    n = len(dist)
    x = channel_coordinates(n)
    floor = stats.probability_floor(R, n)
    row = {
        "var": stats.position_variance(dist),
        "second_moment_injection": stats.second_moment_about(dist, initial_channel),
        "shannon": stats.shannon_entropy(dist),
        "tsallis2": stats.tsallis_entropy(dist, 2.0),
    }
    for key, window in (
        ("inv_a_whole", stats.whole_window(initial_channel, t)),
        ("inv_a_peak", stats.central_peak_window(initial_channel, j)),
    ):
        try:
            fit = stats.laplace_fit(dist, window, mu=initial_channel, floor=floor, coordinates=x)
            row[key] = fit.inv_a
        except ValueError:
            row[key] = math.nan
    return row


SWEEP_COLUMNS = (
    "p",
    "j",
    "var",
    "shannon",
    "tsallis2",
    "inv_a_whole",
    "inv_a_peak",
    "x",
    "y",
    "second_moment_injection",
    "failed",
    "error",
)


def sweep(
    p_values: Sequence[float],
    j_values: Sequence[int],
    base: RunConfig,
    *,
    alpha: float = stats.ALPHA,
    beta: float = stats.BETA,
    threads: int | None = None,
) -> list[dict]:
    """
    Run every ``(p, j)`` grid point with the rest of ``base`` and tabulate
    final-time observables.  Invalid points become rows with ``failed = 1``
    and the validation message in ``error``; the sweep carries on.
    """
    rows = []
    for j in j_values:
        for p in p_values:
            row: dict = dict.fromkeys(SWEEP_COLUMNS, math.nan)
            row.update(p=float(p), j=int(j), failed=0, error="")
            try:
                params = DisorderParams(base.N, int(j), float(p), base.disorder.mode)
                config = replace(base, disorder=params)
                series = simulate(config, threads)
            except ValidationError as exc:
                row["failed"] = 1
                row["error"] = str(exc)
                rows.append(row)
                continue
            row.update(summarize(series.final, t=config.T, j=int(j), R=config.R,
                                 initial_channel=config.initial_channel))
            point = stats.collapse_point(float(p), int(j), row["var"], alpha, beta)
            row["x"], row["y"] = point.x, point.y
            rows.append(row)
    return rows
