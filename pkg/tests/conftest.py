import numpy as np
import pytest

from mmdi import _kernels

_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Store one acceptance verdict; printed in the terminal summary."""

    def _record(key: str, passed: bool, detail: str = ""):
        _RESULTS[key] = (bool(passed), detail)
        return passed

    return _record


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile every jitted kernel once so timed sections measure steady state
    if not _kernels.NUMBA_ENABLED:
        return
    z = np.zeros((2, 1))
    _kernels.dis_pair_max(z, z, z, z)
    _kernels.hypo_pair_max(np.array([[0.0], [1.0]]), np.array([[0.0], [1.0]]))
    _kernels.relay_enumerate(np.zeros(2), 1.0, 1.0)
    _kernels.interval_enumerate(np.zeros(2), 1.0, -1.0, 1.0)
    _kernels.relay_forward_backward(np.zeros(2), 1.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = _RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")
