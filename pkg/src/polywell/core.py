"""Grid, wavefunction and observable primitives.

Natural units (hbar = 1) are used throughout the package, so momenta are
wavenumbers and a free particle of momentum p has energy p**2 / (2 m).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class PolywellError(ValueError):
    """Error raised by any module; ``code`` is a short machine-readable tag."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}")


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D lattice ``x_min .. x_max`` (both ends included) plus a time step."""

    x_min: float
    x_max: float
    n_points: int
    dt: float

    def __post_init__(self):
        if self.n_points < 3:
            raise PolywellError("invalid grid", "n_points must be >= 3")
        if not self.x_min < self.x_max:
            raise PolywellError("invalid grid", "x_min must be < x_max")
        if not self.dt > 0:
            raise PolywellError("invalid grid", "dt must be > 0")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float, dt: float) -> "Grid":
        """Grid whose spacing is as close to ``dx`` as the extent allows.

        The extent is kept and the node count rounded, so the realised
        spacing may differ from ``dx`` in the last digits.
        """
        n = int(round((x_max - x_min) / dx)) + 1
        return cls(float(x_min), float(x_max), n, float(dt))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_points) * self.dx

    def index_of(self, x: float) -> int:
        """Index of the node nearest to ``x`` (clamped to the grid)."""
        i = int(round((x - self.x_min) / self.dx))
        return min(max(i, 0), self.n_points - 1)


@dataclass(frozen=True)
class PhysicalParams:
    mass: float = 20.0

    def __post_init__(self):
        if not self.mass > 0:
            raise PolywellError("invalid mass", "mass must be > 0")


@dataclass
class WaveFunction:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_points,):
            raise PolywellError(
                "invalid wavefunction",
                f"expected {self.grid.n_points} values, got {self.values.shape}",
            )

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values.copy(), self.time)


def _trapezoid_partial(x: np.ndarray, f: np.ndarray, a: float, b: float) -> float:
    """Trapezoidal integral of the piecewise-linear interpolant of f on [a, b].

    The same rule is used for the full domain and for sub-intervals, which
    makes the integral exactly additive over adjacent intervals.
    """
    a = max(a, x[0])
    b = min(b, x[-1])
    if b <= a:
        return 0.0
    dx = x[1] - x[0]
    ia = int(np.floor((a - x[0]) / dx))
    ib = int(np.ceil((b - x[0]) / dx))
    ia = min(max(ia, 0), len(x) - 2)
    ib = min(max(ib, ia + 1), len(x) - 1)

    def interp(i: int, xp: float) -> float:
        t = (xp - x[i]) / dx
        return (1 - t) * f[i] + t * f[i + 1]

    if ib == ia + 1:
        fa, fb = interp(ia, a), interp(ia, b)
        return 0.5 * (fa + fb) * (b - a)
    # partial first cell, full middle cells, partial last cell
    fa = interp(ia, a)
    total = 0.5 * (fa + f[ia + 1]) * (x[ia + 1] - a)
    if ib - 1 > ia + 1:
        mid = f[ia + 1 : ib]
        total += dx * (mid.sum() - 0.5 * (mid[0] + mid[-1]))
    fb = interp(ib - 1, b)
    total += 0.5 * (f[ib - 1] + fb) * (b - x[ib - 1])
    return float(total)


def norm(psi: WaveFunction) -> float:
    """Trapezoidal integral of |psi|^2 over the whole grid."""
    rho = psi.density
    dx = psi.grid.dx
    return float(dx * (rho.sum() - 0.5 * (rho[0] + rho[-1])))


def probability_in(psi: WaveFunction, a: float, b: float) -> float:
    """Probability in [a, b]; bounds outside the grid are clamped to it."""
    if not a < b:
        raise PolywellError("invalid interval", f"need a < b, got a={a}, b={b}")
    g = psi.grid
    if a <= g.x_min and b >= g.x_max:
        return norm(psi)
    return _trapezoid_partial(g.x, psi.density, a, b)


def center_of_mass(
    psi: WaveFunction,
    a: float,
    b: float,
    *,
    conditional: bool = False,
    threshold: float = 1e-8,
) -> float:
    """Integral of x |psi|^2 over [a, b].

    With ``conditional=True`` the result is divided by the probability in the
    region, giving the mean position of the part of the packet found there.
    """
    p = probability_in(psi, a, b)
    if p < threshold:
        raise PolywellError("empty region", f"probability {p:.3e} in [{a}, {b}] below {threshold}")
    g = psi.grid
    moment = _trapezoid_partial(g.x, g.x * psi.density, a, b)
    return moment / p if conditional else moment
