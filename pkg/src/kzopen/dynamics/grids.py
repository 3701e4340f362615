"""Graded composite Gauss-Legendre mode grids.

Panels are ``[top 2^-(j+1), top 2^-j]`` for j < J plus a last panel
``[0, top 2^-J]``, each carrying the same number of Gauss nodes. The grading
puts resolution at low energies, where the excitations live.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModeGrid:
    """Mode labels (k or eps) with quadrature weights already including the
    measure, so that E = sum(weights * P)."""

    labels: np.ndarray
    weights: np.ndarray
    panel: np.ndarray     # panel index of every node, 0 = outermost
    top: float
    depth: int
    nodes: int
    kind: str             # "exact" or "local"

    @property
    def size(self) -> int:
        return self.labels.size

    def innermost(self) -> np.ndarray:
        return self.panel == self.depth


def _panels(top: float, depth: int, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    hi = top * 2.0 ** -np.arange(depth + 1)
    lo = hi / 2.0
    lo[-1] = 0.0
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    labels = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    panel = np.repeat(np.arange(depth + 1), nodes)
    return labels, weights, panel


def exact_grid(depth: int = 20, nodes: int = 8) -> ModeGrid:
    """k in (0, pi]; weights carry the 1/pi of (1/2pi) int_{-pi}^{pi} dk."""
    if nodes * (depth + 1) < 16:
        raise ValueError("mode grid needs at least 16 nodes")
    k, w, panel = _panels(math.pi, depth, nodes)
    return ModeGrid(k, w / math.pi, panel, math.pi, depth, nodes, "exact")


def local_grid(top: float, depth: int, nodes: int, dos) -> ModeGrid:
    """eps in (0, top]; weights carry the local density of states ``dos``."""
    if nodes * (depth + 1) < 16:
        raise ValueError("mode grid needs at least 16 nodes")
    if not top > 0:
        raise ValueError("eps_max must be > 0")
    e, w, panel = _panels(top, depth, nodes)
    return ModeGrid(e, w * dos(e), panel, top, depth, nodes, "local")


def deepen(grid: ModeGrid, dos=None) -> tuple[ModeGrid, np.ndarray]:
    """Split the innermost panel in two. Returns the new grid and a boolean
    mask of nodes that are new (all other nodes are unchanged)."""
    x, w = np.polynomial.legendre.leggauss(grid.nodes)
    keep = ~grid.innermost()
    d = grid.depth + 1
    edge = grid.top * 2.0 ** -grid.depth
    labels = []
    weights = []
    for lo, hi in ((edge / 2.0, edge), (0.0, edge / 2.0)):
        half = (hi - lo) / 2.0
        lab = (hi + lo) / 2.0 + half * x
        labels.append(lab)
        ww = half * w
        if grid.kind == "exact":
            ww = ww / math.pi
        else:
            ww = ww * dos(lab)
        weights.append(ww)
    new_labels = np.concatenate([grid.labels[keep]] + labels)
    new_weights = np.concatenate([grid.weights[keep]] + weights)
    new_panel = np.concatenate([grid.panel[keep],
                                np.full(grid.nodes, d - 1),
                                np.full(grid.nodes, d)])
    mask = np.zeros(new_labels.size, dtype=bool)
    mask[keep.sum():] = True
    g = ModeGrid(new_labels, new_weights, new_panel, grid.top, d, grid.nodes,
                 grid.kind)
    return g, mask
