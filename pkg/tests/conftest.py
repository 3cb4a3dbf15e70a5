"""Shared fixtures.

The accelerated kernels compile on first use.  Timed tests must not pay
that cost, so a session fixture touches both entry points up front.
"""

import numpy as np
import pytest

from painlevekit import _accel


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    ex = np.zeros((1, 3), dtype=np.int64)
    co = np.ones(1, dtype=np.complex128)
    de = np.ones(1, dtype=np.complex128)
    wps = np.array([0.0 + 0.0j, 0.5 + 0.0j])
    _accel.dopri5_path(ex, co, de, ex, co, de, wps, 0.0j, 0.0j, 1e-6)

    a = np.zeros((2, 2), dtype=np.int64)
    b = np.zeros((1, 2, 2), dtype=np.int64)
    cand = np.zeros((1, 1), dtype=np.int64)
    _accel.darboux_candidate_flags(a, b, cand)
    yield
