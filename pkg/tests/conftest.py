import numpy as np
import pytest

from ttfsnet.data import LabeledDataset

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    number, title = crit
    entry = _criteria.setdefault(number, {"title": title, "outcomes": []})
    if report.when == "call" or report.outcome != "passed":
        entry["outcomes"].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        outcomes = entry["outcomes"]
        if any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif outcomes and all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")


def quadrant_images(n: int, seed: int) -> LabeledDataset:
    """8x8 images with a dim background; class 0 lights the top-left quadrant, class 1 the bottom-right."""
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 40, (n, 8, 8))
    labels = np.arange(n) % 2
    for k, c in enumerate(labels):
        rows = slice(0, 4) if c == 0 else slice(4, 8)
        images[k, rows, rows] = rng.integers(200, 256, (4, 4))
    return LabeledDataset(images.astype(np.uint8), labels, 2)


@pytest.fixture
def toy_set():
    return quadrant_images(40, 0)
