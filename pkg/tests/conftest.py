import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spectral_mom import TrainConfig, generate_corpus, sample_params, train

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("HYPOTHESIS_MAX_EXAMPLES", "60")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_truth():
    return sample_params(30, 12, 3, concentration=0.2, seed=3, prior_concentration=5.0)


@pytest.fixture(scope="session")
def small_data(small_truth):
    return generate_corpus(small_truth, 20_000, words_per_doc=15, labels_per_doc=3, seed=11)


@pytest.fixture(scope="session")
def small_result(small_data):
    corpus, labels = small_data
    return train(corpus, labels, TrainConfig(k=3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def report():
    """Record one PASS/FAIL line per acceptance criterion; returns the verdict."""

    def _report(tag, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
