"""
Fast invariant suite behind ``qwalk selftest``.

Every check is deterministic (fixed seeds) and the whole suite runs in a few
seconds.  ``coin`` can be overridden to inject a fault.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass
from math import gcd
from typing import Callable, TextIO

import numpy as np
from numpy.typing import NDArray
from scipy.stats import chisquare

from qwalk import stats
from qwalk.disorder import (
    DisorderParams,
    enumerate_jump_sets,
    jump_set_probability,
    matching_count,
    partition_function,
    partition_function_bruteforce,
    sample_start_masks,
)
from qwalk.engine import RunConfig, simulate
from qwalk.walk import (
    HADAMARD,
    ChannelState,
    channel_coordinates,
    channel_to_vertex_state,
    step_channel,
    step_vertex,
    vertex_to_channel_state,
)

SEED = 20240


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_coin_unitary(coin: NDArray) -> CheckResult:
    err = float(np.max(np.abs(coin @ coin.conj().T - np.eye(2))))
    return CheckResult("coin unitarity", err < 1e-12, f"max |C C^+ - I| = {err:.3g}")


def check_oracle_equivalence(coin: NDArray) -> CheckResult:
    rng = np.random.default_rng(SEED)
    n, steps = 32, 20
    worst = 0.0
    drift = 0.0
    for _ in range(5):
        amps = rng.normal(size=n) + 1j * rng.normal(size=n)
        a = ChannelState(amps / np.linalg.norm(amps))
        b = a
        for _ in range(steps):
            a = step_channel(a, coin)
            b = vertex_to_channel_state(step_vertex(channel_to_vertex_state(b), coin))
            worst = max(worst, float(np.max(np.abs(a.amplitudes - b.amplitudes))))
        drift = max(drift, abs(a.norm() - 1.0))
    ok = worst < 1e-12 and drift < 1e-12
    return CheckResult("channel/vertex oracle", ok, f"max diff {worst:.3g}, norm drift {drift:.3g}")


def check_partition_function() -> CheckResult:
    worst = 0.0
    cases = 0
    for n in range(3, 13):
        for j in range(1, n):
            if n // gcd(n, j) <= 2:
                continue
            for p in (0.1, 0.3, 0.7):
                params = DisorderParams(n, j, p)
                exact = partition_function(params)
                worst = max(worst, abs(partition_function_bruteforce(params) - exact) / exact)
                cases += 1
    counts_ok = all(
        matching_count(m, k) == _cycle_matchings(m, k) for m in range(3, 13) for k in range(m // 2 + 1)
    )
    ok = worst <= 1e-12 and counts_ok
    return CheckResult("partition function", ok, f"{cases} cases, max rel err {worst:.3g}, N_k ok={counts_ok}")


def _cycle_matchings(m: int, k: int) -> int:
    # count k-edge matchings of C_m by bitmask
    total = 0
    for mask in range(1 << m):
        if bin(mask).count("1") != k:
            continue
        rolled = ((mask << 1) | (mask >> (m - 1))) & ((1 << m) - 1)
        if mask & rolled == 0:
            total += 1
    return total


def check_sampler() -> CheckResult:
    n, j, p, samples = 8, 1, 0.3, 20_000
    params = DisorderParams(n, j, p)
    sets = list(enumerate_jump_sets(n, j))
    probs = np.array([jump_set_probability(s, params) for s in sets])
    rng = np.random.default_rng(SEED)
    masks = sample_start_masks(rng.random((samples, n)), n, j, p)
    counts = Counter(tuple(np.flatnonzero(m).tolist()) for m in masks)
    observed = [counts[s.starts] for s in sets]
    pvalue = float(chisquare(observed, probs * samples).pvalue)
    ok = sum(observed) == samples and pvalue > 0.001
    return CheckResult("sampler chi-square", ok, f"p-value {pvalue:.3g} over {len(sets)} outcomes")


def check_identities() -> CheckResult:
    problems = []
    x = channel_coordinates(64)
    for k in (1, 5, 32):
        u = np.zeros(64)
        u[:k] = 1 / k
        if abs(stats.shannon_entropy(u) - math.log(k)) > 1e-12:
            problems.append(f"Shannon(uniform {k})")
        if abs(stats.tsallis_entropy(u, 2.0) - (1 - 1 / k)) > 1e-12:
            problems.append(f"S2(uniform {k})")
    two = np.zeros(64)
    two[(x == -4.5) | (x == 4.5)] = 0.5
    if abs(stats.position_variance(two) - 4.5**2) > 1e-12:
        problems.append("two-point variance")
    lap = np.exp(-np.abs(x - 0.5) / 5.0)
    if abs(stats.laplace_fit(lap, (-25, 25)).inv_a - 0.2) > 1e-9:
        problems.append("Laplace recovery")
    return CheckResult("entropy/variance identities", not problems, ", ".join(problems) or "all exact")


def check_determinism() -> CheckResult:
    config = RunConfig(DisorderParams(40, 7, 0.3, "dynamic"), T=12, R=130, master_seed=SEED)
    a = simulate(config, threads=1).probabilities
    b = simulate(config, threads=3).probabilities
    return CheckResult("thread-count determinism", a.tobytes() == b.tobytes(), "1 vs 3 threads")


def run_checks(coin: NDArray | None = None) -> list[CheckResult]:
    coin = HADAMARD if coin is None else np.asarray(coin, dtype=np.complex128)
    checks: list[Callable[[], CheckResult]] = [
        lambda: check_coin_unitary(coin),
        lambda: check_oracle_equivalence(coin),
        check_partition_function,
        check_sampler,
        check_identities,
        check_determinism,
    ]
    results = []
    for check in checks:
        try:
            results.append(check())
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            results.append(CheckResult(getattr(check, "__name__", "check"), False, f"raised {exc!r}"))
    return results


def main(out: TextIO, coin: NDArray | None = None) -> int:
    start = time.perf_counter()
    results = run_checks(coin)
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}\n")
    failed = sum(not r.passed for r in results)
    out.write(f"{len(results) - failed}/{len(results)} checks passed in {time.perf_counter() - start:.1f} s\n")
    return 0 if failed == 0 else 1
