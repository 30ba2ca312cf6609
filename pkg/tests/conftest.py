"""Shared helpers: finite-difference oracle and fixture paths."""

from pathlib import Path

import numpy as np
import pytest

from meixnernet import autodiff as ad

FIXTURES = Path(__file__).parent / "fixtures"

# one "[ACCEPTANCE] <criterion>: PASS|FAIL|SKIP" line per criterion, echoed
# after the run so capture modes cannot swallow the report
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def central_diff(f, x, h=1e-6):
    """Central finite differences of scalar f at array x, one entry at a time."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    flat = x.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = f(x)
        flat[i] = keep - h
        down = f(x)
        flat[i] = keep
        out.ravel()[i] = (up - down) / (2.0 * h)
    return out


def rel_err(analytic, numeric, floor=1e-4):
    """Elementwise |a - n| / max(|a|, |n|, floor); floor guards zero grads."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float((np.abs(a - n) / denom).max())


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def tensor_loss_grad(build_loss, tensors):
    """Run build_loss under a fresh tape and return each tensor's gradient."""
    with ad.Tape() as tape:
        loss = build_loss()
    for t in tensors:
        t.zero_grad()
    ad.backward(loss, tape)
    return [t.grad for t in tensors]
