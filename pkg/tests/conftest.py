import numpy as np
import pytest
from hypothesis import settings

from skelhar.dataset import ActionRecording, Corpus

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    table = item.config._criteria
    status = table.get(n, (title, "PASS"))[1]
    if rep.failed:
        status = "FAIL"
    elif rep.skipped and status != "FAIL":
        status = "SKIP"
    table[n] = (title, status)


def pytest_terminal_summary(terminalreporter, config):
    table = getattr(config, "_criteria", {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(table):
        title, status = table[n]
        terminalreporter.write_line(f"criterion {n}: {status:4s}  {title}")


def make_recording(positions, subject=1, label=0, scenes=("bathroom",), rid=None):
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    return ActionRecording(
        recording_id=rid or f"r-s{subject}-l{label}",
        subject=subject,
        scenes=tuple(scenes),
        label=label,
        positions=positions,
        confidence=np.ones((n, 15)),
        frame_indices=np.arange(1, n + 1),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_corpus(rng):
    recs = []
    for subject in (1, 2):
        for label in (0, 7):
            recs.append(make_recording(rng.normal(0, 300, (6, 15, 3)), subject, label, rid=f"r{subject}-{label}"))
    return Corpus(tuple(recs), "synthetic")
