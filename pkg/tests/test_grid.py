import numpy as np
import pytest

from hardphase.grid import SinhGrid, derivative4


def test_nodes_cover_domain_exactly():
    g = SinhGrid(1e-3, 0.7, 100)
    r = g.nodes()
    assert r[0] == 0.0 and r[-1] == 0.7
    assert np.all(np.diff(r) > 0)
    assert np.all((g.midpoints() > r[:-1]) & (g.midpoints() < r[1:]))


def test_jacobian_matches_map():
    g = SinhGrid(0.01, 2.0, 64)
    x = np.linspace(0.1, 0.9, 7)
    h = 1e-6
    fd = (g.map(x + h) - g.map(x - h)) / (2 * h)
    assert np.allclose(g.jacobian(x), fd, rtol=1e-8)


def test_derivative4_is_fourth_order():
    errs = []
    for n in (64, 128):
        x = np.linspace(0.0, 1.0, n + 1)
        f = np.sin(3 * x)
        errs.append(np.max(np.abs(derivative4(f, 1.0 / n) - 3 * np.cos(3 * x))))
    assert errs[0] / errs[1] > 12.0


def test_derivative4_needs_five_points():
    with pytest.raises(ValueError):
        derivative4(np.ones(4), 0.1)
