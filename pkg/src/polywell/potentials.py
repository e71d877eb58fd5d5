"""Attractive wells evaluated on a grid."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Grid, PolywellError


class WellShape(str, Enum):
    GAUSSIAN = "gaussian"
    SQUARE = "square"
    LORENTZIAN = "lorentzian"
    NONE = "none"


@dataclass(frozen=True)
class PotentialSpec:
    """Attractive well of ``depth`` > 0 centred at ``center``.

    ``width`` is the Gaussian scale w in -A exp(-x^2/w^2), the half-width a
    of a square well, or the half-width at half-depth of a Lorentzian well.
    ``WellShape.NONE`` gives a free particle and ignores depth and width.
    """

    shape: WellShape = WellShape.GAUSSIAN
    depth: float = 1.0
    width: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", WellShape(self.shape))
        if self.shape is WellShape.NONE:
            return
        if not self.depth > 0:
            raise PolywellError("invalid well", "depth must be > 0 (attractive wells only)")
        if not self.width > 0:
            raise PolywellError("invalid well", "width must be > 0")

    def __call__(self, x: np.ndarray | float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = np.abs(x - self.center)
        if self.shape is WellShape.NONE:
            return np.zeros_like(x)
        if self.shape is WellShape.GAUSSIAN:
            return -self.depth * np.exp(-((s / self.width) ** 2))
        if self.shape is WellShape.SQUARE:
            # a point exactly on the edge takes half the depth, which keeps the
            # three-point Hamiltonian second-order accurate in dx
            tol = 1e-9 * self.width
            v = np.where(s < self.width - tol, -self.depth, 0.0)
            return np.where(np.abs(s - self.width) <= tol, -0.5 * self.depth, v)
        return -self.depth / (1.0 + (s / self.width) ** 2)


def free_space() -> PotentialSpec:
    return PotentialSpec(WellShape.NONE, 0.0, 1.0)


def evaluate(spec: PotentialSpec, grid: Grid, *, tol: float = 1e-10) -> np.ndarray:
    """Sample the well on the grid; refuses wells that are cut off by the edges."""
    v = spec(grid.x)
    if spec.shape is WellShape.NONE:
        return v
    edge = max(abs(v[0]), abs(v[-1]))
    if edge > tol * spec.depth:
        raise PolywellError(
            "well clipped", f"|V| at grid edge is {edge:.3e}, above {tol:g} x depth"
        )
    return v
