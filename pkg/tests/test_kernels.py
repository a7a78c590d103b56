"""numba and numpy kernel paths must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from mmdi import _kernels

needs_numba = pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("name", sorted(_kernels.NUMPY_KERNELS))
def test_parity(name):
    rng = np.random.default_rng(11)
    np_k, nb_k = _kernels.NUMPY_KERNELS[name], _kernels.NUMBA_KERNELS[name]
    if name == "dis_pair_max":
        args = [rng.normal(size=(150, 2)) for _ in range(4)]
    elif name == "hypo_pair_max":
        args = [rng.normal(size=(120, 3)), rng.normal(size=(120, 3)), 1e-24]
    elif name == "relay_enumerate":
        args = [rng.uniform(-3, 3, 500), rng.choice([0.0, 0.5, 1.0], 500), rng.uniform(0.5, 2, 500)]
    elif name == "interval_enumerate":
        lo = rng.uniform(-2, 0, 500)
        args = [rng.uniform(-3, 3, 500), rng.choice([0.0, 0.5, 1.0], 500), lo, lo + rng.uniform(0, 2, 500)]
    else:
        args = [rng.uniform(-3, 3, 300), rng.choice([0.0, 0.5, 1.0], 300), np.ones(300), 1e-14, 20000]
    a, b = np_k(*args), nb_k(*args)
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            np.testing.assert_allclose(np.asarray(x, float), np.asarray(y, float), rtol=1e-12, atol=1e-12)
    else:
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12, equal_nan=True)


def test_dis_pair_max_brute_force():
    rng = np.random.default_rng(12)
    z1, e1, z2, e2 = (rng.normal(size=(40, 2)) for _ in range(4))
    best, i, j = _kernels.dis_pair_max(z1, e1, z2, e2)
    q = np.einsum("ik,jk->ij", e1, z2) - np.einsum("ik,ik->i", e1, z1)[:, None] \
        - np.einsum("jk,jk->j", e2, z2)[None, :] + np.einsum("jk,ik->ij", e2, z1)
    q /= 1 + np.linalg.norm(e1, axis=1)[:, None] + np.linalg.norm(e2, axis=1)[None, :]
    assert best == pytest.approx(q.max())
    assert q[i, j] == pytest.approx(best)


def test_relay_forward_backward_matches_enumeration():
    rng = np.random.default_rng(13)
    c = rng.uniform(-3, 3, 400)
    d = rng.choice([0.5, 1.0, 2.0], 400)
    z, _ = _kernels.relay_forward_backward(c, d, 1.0)
    np.testing.assert_allclose(z, _kernels.relay_enumerate(c, d, 1.0), atol=1e-10)


def test_env_flag_disables_numba():
    code = "from mmdi import _kernels; print(_kernels.NUMBA_ENABLED)"
    env = dict(os.environ, MMDI_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
