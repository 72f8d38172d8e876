import pytest

TITLES = {
    1: "partition function exactness",
    2: "sampler exactness",
    3: "channel/vertex oracle equivalence",
    4: "ballistic regime",
    5: "localization",
    6: "peak structure",
    7: "U-shape and x_min",
    8: "central-peak universality",
    9: "variance collapse",
    10: "Tsallis collapse",
    11: "dynamic disorder",
    12: "even jumps",
    13: "determinism",
}

_results: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion: ``criterion(n, passed, detail)``."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _results[number] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title in TITLES.items():
        if number in _results:
            passed, detail = _results[number]
            tr.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
        else:
            tr.write_line(f"[----] {number:2d}. {title}: not run")
    done = [p for p, _ in _results.values()]
    tr.write_line(f"{sum(done)}/{len(TITLES)} criteria passed")
