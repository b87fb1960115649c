import os
import subprocess
import sys

import numpy as np
import pytest

from bsfv import _accel, _kernels
from bsfv.flux import unit_transmissibilities
from bsfv.mesh import build_geometric


def interpreted(fn):
    return getattr(fn, "py_func", fn)


@pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not active")
class TestCompiledMatchesInterpreted:
    def test_thomas(self, rng):
        n = 30
        args = (rng.uniform(-1, 1, n - 1), 3 + rng.uniform(0, 1, n), rng.uniform(-1, 1, n - 1), rng.standard_normal(n))
        x1, b1 = _kernels.thomas(*args)
        x2, b2 = interpreted(_kernels.thomas)(*args)
        np.testing.assert_array_equal(x1, x2)
        assert b1 == b2 == -1

    @pytest.mark.parametrize("fitted", [True, False])
    def test_march(self, fitted, rng):
        mesh = build_geometric(15, 300.0, 1.1)
        m = 6
        args = (rng.standard_normal(15), mesh.interior.copy(), mesh.dual_lengths[1:-1].copy(),
                unit_transmissibilities(mesh), mesh.midpoints.copy(), float(mesh.nodes[1]),
                np.full(m, 0.25), np.full(m, -0.15), np.full(m, 0.2), np.full(m, 0.1),
                rng.standard_normal(m + 1), rng.standard_normal(m + 1), 0.5, fitted, True, True)
        h1, f1 = _kernels.march(*args)
        h2, f2 = interpreted(_kernels.march)(*args)
        np.testing.assert_allclose(h1, h2, rtol=1e-13, atol=1e-13)
        assert f1 == f2 == -1


def test_env_flag_selects_python_backend():
    env = dict(os.environ, BSFV_NUMBA="0")
    code = "from bsfv import _accel; print(_accel.backend_name())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
