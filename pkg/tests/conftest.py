from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).resolve().parents[1] / "src" / "waveseq" / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sine_table(n=2000, period=24):
    from waveseq.ndbc import AlignedTable

    t = np.arange(n)
    ts = np.datetime64("2000-01-01T00:00", "m") + t * np.timedelta64(60, "m")
    return AlignedTable(ts, (("synth", "WVHT"),), np.sin(2 * np.pi * t / period)[:, None])


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(n, ok, detail):
        """``ok=None`` records a skip."""
        word = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"CRITERION {n:2d} {word}  {detail}"
        lines[n] = line
        print(line)
        if ok is None:
            pytest.skip(detail)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
