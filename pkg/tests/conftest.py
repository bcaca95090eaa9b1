import numpy as np
import pytest

from resonant_tangency.map_core import ModelParams


@pytest.fixture
def params():
    return ModelParams()


def fd_jacobian(fn, p, h=1e-7):
    p = np.asarray(p, dtype=float)
    cols = []
    for i in range(len(p)):
        e = np.zeros_like(p)
        e[i] = h
        cols.append((fn(p + e) - fn(p - e)) / (2.0 * h))
    return np.column_stack(cols)
