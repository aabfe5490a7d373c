"""Graded radial grids r = s sinh(A x) on a uniform computational axis x.

Near the centre the spacing is uniform with step s A / n; beyond the core
scale ``s`` it becomes geometric. Stars with large central redshift have a
core many orders of magnitude smaller than their radius, so a uniform grid
in r cannot resolve them with a few thousand nodes.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SinhGrid:
    """Nodes r_i = scale * sinh(stretch * i / n), i = 0..n, ending at ``radius``."""

    scale: float
    radius: float
    n: int

    @property
    def stretch(self):
        return float(np.arcsinh(self.radius / self.scale))

    @property
    def h(self):
        return 1.0 / self.n

    def x(self):
        return np.arange(self.n + 1) / self.n

    def map(self, x):
        """Radius at computational coordinate x."""
        return self.scale * np.sinh(self.stretch * np.asarray(x, dtype=float))

    def jacobian(self, x):
        """dr/dx at computational coordinate x."""
        a = self.stretch
        return self.scale * a * np.cosh(a * np.asarray(x, dtype=float))

    def nodes(self):
        r = self.map(self.x())
        r[0] = 0.0
        r[-1] = self.radius
        return r

    def midpoints(self):
        return self.map((np.arange(self.n) + 0.5) / self.n)

    def arrays(self):
        """Node radii, midpoint radii and the two Jacobian samples."""
        xm = (np.arange(self.n) + 0.5) / self.n
        return (np.ascontiguousarray(self.nodes()),
                np.ascontiguousarray(self.map(xm)),
                np.ascontiguousarray(self.jacobian(self.x())),
                np.ascontiguousarray(self.jacobian(xm)))


def derivative4(f, h):
    """Fourth-order finite difference df/dx on a uniform axis with step h."""
    f = np.asarray(f, dtype=float)
    n = f.size
    if n < 5:
        raise ValueError("need at least 5 samples")
    d = np.empty(n)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    edge0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    edge1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12.0 * h)
    d[0] = edge0 @ f[:5]
    d[1] = edge1 @ f[:5]
    d[-1] = -(edge0 @ f[::-1][:5])
    d[-2] = -(edge1 @ f[::-1][:5])
    return d
