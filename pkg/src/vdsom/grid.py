"""Latent lattices for self-organizing maps.

Nodes are linearized row-major: node ``(r, c)`` has index ``r * cols + c``.
"""

from dataclasses import dataclass

import numpy as np

PLANAR = "planar"
TOROIDAL = "toroidal"


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    topology: str = PLANAR
    coord_range: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.rows}x{self.cols}")
        if self.topology not in (PLANAR, TOROIDAL):
            raise ValueError(f"unknown topology {self.topology!r}")
        lo, hi = self.coord_range
        if self.topology == PLANAR and not lo < hi:
            raise ValueError(f"coord_range needs lo < hi, got ({lo}, {hi})")


class Grid:
    """Immutable lattice with cached pairwise squared latent distances.

    Attributes:
        spec: the GridSpec this grid was built from.
        points: ``(n, 2)`` latent coordinates.
        dist2: ``(n, n)`` table of squared latent distances.
    """

    def __init__(self, spec, points, dist2):
        self.spec = spec
        self.points = points
        self.dist2 = dist2
        self.points.flags.writeable = False
        self.dist2.flags.writeable = False

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def rows(self):
        return self.spec.rows

    @property
    def cols(self):
        return self.spec.cols

    @property
    def toroidal(self):
        return self.spec.topology == TOROIDAL

    def index(self, r, c):
        return r * self.cols + c

    def neighbors(self, i):
        """Lattice-adjacent nodes of ``i`` (4-neighborhood, wrapping on a torus)."""
        if not 0 <= i < self.n:
            raise IndexError(f"node index {i} out of range for grid of {self.n} nodes")
        r, c = divmod(i, self.cols)
        out = []
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if self.toroidal:
                rr %= self.rows
                cc %= self.cols
            elif not (0 <= rr < self.rows and 0 <= cc < self.cols):
                continue
            j = self.index(rr, cc)
            # tiny tori (2 wide) reach the same node both ways
            if j != i and j not in out:
                out.append(j)
        return sorted(out)

    def edges(self, include_wrap=True):
        """Unique adjacent pairs ``(i, j)`` with ``i < j``, in ascending order.

        With ``include_wrap=False`` the wrap-around edges of a torus are dropped.
        """
        pairs = set()
        for i in range(self.n):
            ri, ci = divmod(i, self.cols)
            for j in self.neighbors(i):
                if j <= i:
                    continue
                rj, cj = divmod(j, self.cols)
                if not include_wrap and (abs(ri - rj) > 1 or abs(ci - cj) > 1):
                    continue
                pairs.add((i, j))
        return sorted(pairs)


def _axis(count, lo, hi):
    if count == 1:
        return np.array([(lo + hi) / 2.0])
    return np.array([lo + k * (hi - lo) / (count - 1) for k in range(count)])


def build_grid(spec):
    """Place the nodes of ``spec`` and tabulate their squared distances.

    Planar grids are spread regularly over ``coord_range`` on both axes. Toroidal
    grids use unit-spaced integer coordinates and wrap-around minimal distances.
    """
    rows, cols = int(spec.rows), int(spec.cols)
    r_idx, c_idx = np.divmod(np.arange(rows * cols), cols)
    if spec.topology == PLANAR:
        lo, hi = map(float, spec.coord_range)
        points = np.stack([_axis(rows, lo, hi)[r_idx], _axis(cols, lo, hi)[c_idx]], axis=1)
        diff = points[:, None, :] - points[None, :, :]
        dist2 = np.sum(diff * diff, axis=-1)
    else:
        points = np.stack([r_idx, c_idx], axis=1).astype(float)
        dr = np.abs(r_idx[:, None] - r_idx[None, :])
        dc = np.abs(c_idx[:, None] - c_idx[None, :])
        dr = np.minimum(dr, rows - dr)
        dc = np.minimum(dc, cols - dc)
        dist2 = (dr * dr + dc * dc).astype(float)
    return Grid(spec, points, dist2)
