"""Square-well bound states, zero-energy thresholds and a diagonalisation oracle.

For a square well of depth A and half-width w the bound states satisfy

    k' tan(k' w) =  k    (even)
    k' cot(k' w) = -k    (odd)

with k' = sqrt(2 m (A + E)) and k = sqrt(2 m |E|). A new state appears each
time sqrt(2 m A) w crosses a multiple of pi/2: even multiples n pi open
even states, odd multiples (2n+1) pi/2 open odd ones. A well sitting just
above such a threshold holds a bound state of almost zero energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import Grid, PolywellError
from .potentials import PotentialSpec, WellShape, evaluate


@dataclass(frozen=True)
class BoundState:
    n: int
    parity: str
    energy: float
    k: float
    k_prime: float


@dataclass(frozen=True)
class BoundStateSet:
    mass: float
    depth: float
    half_width: float
    states: tuple[BoundState, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.states)

    @property
    def shallowest(self) -> BoundState:
        return self.states[-1]


def condition_residual(state: BoundState, half_width: float) -> float:
    """Residual of the matching condition in its pole-free form."""
    kp, k, w = state.k_prime, state.k, half_width
    if state.parity == "even":
        return kp * math.sin(kp * w) - k * math.cos(kp * w)
    return kp * math.cos(kp * w) + k * math.sin(kp * w)


def bound_states(mass: float, depth: float, half_width: float, *, xtol: float = 1e-12) -> BoundStateSet:
    """All bound states of the square well, deepest first.

    Branch j of the alternating even/odd conditions lives in
    k' w in (j pi/2, (j+1) pi/2) and holds exactly one root when
    j pi/2 < sqrt(2 m A) w. Each root is found by bisection in k'.
    """
    if min(mass, depth, half_width) <= 0:
        raise PolywellError("invalid parameters", "mass, depth and half_width must be > 0")
    w = half_width
    kmax = math.sqrt(2 * mass * depth)

    def k_of(kp):
        return math.sqrt(max(kmax * kmax - kp * kp, 0.0))

    states = []
    j = 0
    while j * math.pi / 2 < kmax * w:
        parity = "even" if j % 2 == 0 else "odd"
        lo = j * math.pi / 2 / w
        hi = min((j + 1) * math.pi / 2 / w, kmax)
        if parity == "even":
            f = lambda kp: kp * math.sin(kp * w) - k_of(kp) * math.cos(kp * w)  # noqa: E731
        else:
            f = lambda kp: kp * math.cos(kp * w) + k_of(kp) * math.sin(kp * w)  # noqa: E731
        kp = _bisect(f, lo, hi, xtol)
        k = k_of(kp)
        energy = kp * kp / (2 * mass) - depth
        states.append(BoundState(j, parity, energy, k, kp))
        j += 1
    return BoundStateSet(mass, depth, half_width, tuple(states))


def _bisect(f, lo, hi, xtol):
    flo = f(lo)
    if flo == 0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo < xtol:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Detuning:
    nearest_threshold: float
    multiple: int  # threshold = multiple * pi/2
    parity: str
    detuning: float


def resonance_detuning(mass: float, depth: float, half_width: float) -> Detuning:
    """How far sqrt(2 m A) w sits from the nearest zero-energy threshold."""
    if min(mass, depth, half_width) <= 0:
        raise PolywellError("invalid parameters", "mass, depth and half_width must be > 0")
    kw = math.sqrt(2 * mass * depth) * half_width
    j = int(round(kw / (math.pi / 2)))
    threshold = j * math.pi / 2
    return Detuning(threshold, j, "even" if j % 2 == 0 else "odd", kw - threshold)


def predicted_reflected_k(width: float) -> float:
    """Wavenumber of the reflected train when it forms: 4 k w = pi."""
    if not width > 0:
        raise PolywellError("invalid parameters", "width must be > 0")
    return math.pi / (4 * width)


@dataclass(frozen=True)
class DiscreteState:
    energy: float
    vector: np.ndarray


def diagonalize_well(
    spec: PotentialSpec, mass: float, grid: Grid, *, decay_tol: float = 1e-8
) -> list[DiscreteState]:
    """Negative eigenvalues of the three-point Hamiltonian with hard walls.

    Eigenvectors are normalised to unit trapezoidal norm on the full grid
    (edge nodes are zero). Raises "grid too small" when a bound state has
    not decayed below ``decay_tol`` (relative to its maximum) at the edges.
    """
    v = evaluate(spec, grid) if spec.shape is not WellShape.NONE else np.zeros(grid.n_points)
    dx = grid.dx
    kin = 1.0 / (2.0 * mass * dx * dx)
    d = 2 * kin + v[1:-1]
    e = np.full(len(d) - 1, -kin)
    if v.min() >= 0:
        return []
    vals, vecs = eigh_tridiagonal(d, e, select="v", select_range=(v.min() - 1.0, 0.0))
    out = []
    for i in np.argsort(vals):
        vec = np.zeros(grid.n_points)
        vec[1:-1] = vecs[:, i]
        vec /= math.sqrt(dx * np.sum(vec * vec))
        top = np.abs(vec).max()
        edge = max(np.abs(vec[1:6]).max(), np.abs(vec[-6:-1]).max())
        if edge > decay_tol * top:
            raise PolywellError(
                "grid too small",
                f"state E={vals[i]:.6g} has edge amplitude {edge / top:.2e} of its maximum",
            )
        out.append(DiscreteState(float(vals[i]), vec))
    return out
