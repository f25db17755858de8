import os

import hypothesis
import numpy as np
import pytest

from srot.core import Problem, TransportPlan

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def random_problem(rng, m, n, lam=1.0):
    C = rng.uniform(size=(m, n))
    a = rng.uniform(size=m)
    b = rng.uniform(size=n)
    return Problem(C, a / a.sum(), b / b.sum(), lam)


def random_plan(rng, p, sparse=False):
    T = rng.uniform(size=p.shape)
    if sparse:
        T *= rng.uniform(size=p.shape) < 0.5
        T[rng.integers(p.m, size=p.n), np.arange(p.n)] += 0.1
    T = T / T.sum(axis=0) * p.b
    return TransportPlan(T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny():
    """m=n=2, C=0, a=b=[0.5,0.5], lam=0.5, the hand-checked instance."""
    return Problem(np.zeros((2, 2)), [0.5, 0.5], [0.5, 0.5], 0.5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}")
