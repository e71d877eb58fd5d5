"""Initial wave packets sampled on a grid."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Grid, PolywellError, WaveFunction, norm


class PacketShape(str, Enum):
    GAUSSIAN = "gaussian"
    SQUARE = "square"
    LORENTZIAN = "lorentzian"
    LINEAR_EXPONENTIAL = "linexp"


@dataclass(frozen=True)
class PacketSpec:
    """Initial packet: shape, mean wavenumber ``q``, centre ``x0`` and ``width``.

    ``width`` is the Gaussian delta (the packet's rms width in |psi|^2), the
    half-width d of a square packet, or the scale length of the other shapes.
    """

    shape: PacketShape = PacketShape.GAUSSIAN
    q: float = 0.2
    x0: float = -10.0
    width: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "shape", PacketShape(self.shape))
        if not self.width > 0:
            raise PolywellError("invalid packet", "width must be > 0")

    def envelope(self, x: np.ndarray) -> np.ndarray:
        """Unnormalised real envelope of the packet."""
        s = x - self.x0
        w = self.width
        if self.shape is PacketShape.GAUSSIAN:
            return np.exp(-(s**2) / (4 * w**2))
        if self.shape is PacketShape.SQUARE:
            return self._square_weights(x)
        if self.shape is PacketShape.LORENTZIAN:
            return 1.0 / (1.0 + (s / w) ** 2)
        return np.exp(-np.abs(s) / w)

    def _square_weights(self, x: np.ndarray) -> np.ndarray:
        # Each node takes the fraction of its cell [x - dx/2, x + dx/2] that
        # lies inside the box: 1 deep inside, 1/2 on an edge. Plain point
        # sampling makes the discrete box effectively one cell wider.
        if len(x) < 2:
            return (np.abs(x - self.x0) <= self.width).astype(float)
        dx = x[1] - x[0]
        return np.clip((self.width - np.abs(x - self.x0)) / dx + 0.5, 0.0, 1.0)


def make_packet(spec: PacketSpec, grid: Grid, *, clearance: float = 5.0) -> WaveFunction:
    """Sample ``spec`` on ``grid`` and normalise to unit trapezoidal norm."""
    x = grid.x
    if grid.dx > spec.width / 10:
        raise PolywellError(
            "under-resolved", f"dx={grid.dx:.4g} exceeds width/10={spec.width / 10:.4g}"
        )
    span = clearance * spec.width
    if spec.x0 - span < grid.x_min or spec.x0 + span > grid.x_max:
        raise PolywellError(
            "edge clipping", f"x0={spec.x0} needs {clearance} widths of clearance from the edges"
        )
    env = spec.envelope(x)
    if spec.shape is PacketShape.SQUARE:
        if env[0] or env[-1]:
            raise PolywellError("edge clipping", "square packet support touches the grid edge")
    else:
        tail = _tail_mass(spec, grid)
        if tail > 1e-10:
            raise PolywellError("edge clipping", f"packet mass outside grid {tail:.2e} > 1e-10")
    values = env * np.exp(1j * spec.q * (x - spec.x0))
    psi = WaveFunction(grid, values)
    psi.values /= np.sqrt(norm(psi))
    return psi


def _tail_mass(spec: PacketSpec, grid: Grid) -> float:
    """Fraction of |envelope|^2 lying beyond the grid, from closed forms."""
    from scipy import special

    w = spec.width
    lo = (spec.x0 - grid.x_min) / w
    hi = (grid.x_max - spec.x0) / w
    if spec.shape is PacketShape.GAUSSIAN:
        # |psi|^2 is a normal density with standard deviation w
        return float(0.5 * (special.erfc(lo / np.sqrt(2)) + special.erfc(hi / np.sqrt(2))))
    if spec.shape is PacketShape.LORENTZIAN:
        # integral of 1/(1+u^2)^2 beyond u is (pi/2 - atan u - u/(1+u^2)) / 2, total pi/2
        def beyond(u):
            return (np.pi / 2 - np.arctan(u) - u / (1 + u**2)) / np.pi

        return float(beyond(lo) + beyond(hi))
    return float(0.5 * (np.exp(-2 * lo) + np.exp(-2 * hi)))


def momentum_expectation(psi: WaveFunction, mass: float | None = None) -> float:
    """<p> = Im integral psi* dpsi/dx, derivative by centred differences.

    ``mass`` is accepted for symmetry with velocity-based callers and is
    not needed for the momentum itself.
    """
    v = psi.values
    dx = psi.grid.dx
    dpsi = np.zeros_like(v)
    dpsi[1:-1] = (v[2:] - v[:-2]) / (2 * dx)
    integrand = np.imag(np.conj(v) * dpsi)
    return float(dx * integrand.sum())


def position_moments(psi: WaveFunction) -> tuple[float, float]:
    """Mean and variance of x under |psi|^2 (trapezoidal, full grid)."""
    rho = psi.density
    x = psi.x
    n = norm(psi)
    dx = psi.grid.dx
    mean = dx * (x * rho).sum() / n
    var = dx * ((x - mean) ** 2 * rho).sum() / n
    return float(mean), float(var)
