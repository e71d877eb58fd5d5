"""Unitary Crank-Nicolson (Cayley) propagation with hard walls."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Grid, PhysicalParams, PolywellError, WaveFunction, norm
from .tridiag import CayleyFactor

log = logging.getLogger(__name__)

NORM_DRIFT_LIMIT = 1e-4


class BoundaryContamination(UserWarning):
    pass


def default_resolution(packet_width: float, well_width: float, mass: float) -> tuple[float, float]:
    """(dx, dt) from the preset rule dx = min(width, w)/25, dt = 2 m dx^2."""
    dx = min(packet_width, well_width) / 25.0
    return dx, 2.0 * mass * dx * dx


def absorbing_margin(grid: Grid, margin: float, strength: float = 0.05) -> np.ndarray:
    """Imaginary potential -i W(x) ramping quadratically over ``margin`` at each edge."""
    x = grid.x
    w = np.zeros_like(x)
    left = x < grid.x_min + margin
    right = x > grid.x_max - margin
    w[left] = ((grid.x_min + margin - x[left]) / margin) ** 2
    w[right] = ((x[right] - (grid.x_max - margin)) / margin) ** 2
    return -1j * strength * w


@dataclass
class PropagatorState:
    psi: WaveFunction
    potential: np.ndarray
    params: PhysicalParams
    step_count: int = 0
    norm_log: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.potential = np.asarray(self.potential)
        if self.potential.shape != self.psi.values.shape:
            raise PolywellError("invalid potential", "potential must match the grid")
        self._factor: CayleyFactor | None = None
        self._factor_dt: float | None = None
        # hard walls: edge nodes are pinned to zero
        self.psi.values[0] = 0.0
        self.psi.values[-1] = 0.0
        if not self.norm_log:
            self.norm_log.append((self.psi.time, norm(self.psi)))

    @property
    def grid(self) -> Grid:
        return self.psi.grid

    def factor(self, dt: float) -> CayleyFactor:
        if self._factor is None or self._factor_dt != dt:
            g = self.grid
            self._factor = CayleyFactor(self.potential[1:-1], self.params.mass, g.dx, dt)
            self._factor_dt = dt
        return self._factor

    def advance(self, nsteps: int, dt: float | None = None) -> None:
        """Take ``nsteps`` steps in place (``dt`` defaults to the grid's)."""
        if nsteps <= 0:
            return
        dt = self.grid.dt if dt is None else dt
        self.factor(dt).advance(self.psi.values[1:-1], nsteps)
        self.step_count += nsteps
        self.psi.time += nsteps * dt
        if not np.all(np.isfinite(self.psi.values)):
            raise PolywellError("diverged", f"non-finite amplitude after step {self.step_count}")

    def energy(self) -> float:
        """<H> with the same three-point Hamiltonian used for stepping."""
        return expectation_energy(self.psi, self.potential, self.params.mass)


def expectation_energy(psi: WaveFunction, potential: np.ndarray, mass: float) -> float:
    v = psi.values
    dx = psi.grid.dx
    hv = np.zeros_like(v)
    hv[1:-1] = -(v[2:] - 2 * v[1:-1] + v[:-2]) / (2 * mass * dx * dx) + potential[1:-1] * v[1:-1]
    return float(np.real(dx * np.vdot(v, hv)))


def step(state: PropagatorState, dt: float | None = None) -> PropagatorState:
    """Advance by one time step in place and return the state."""
    state.advance(1, dt)
    return state


@dataclass
class RunResult:
    final: PropagatorState
    snapshots: list[WaveFunction]
    norm_log: list[tuple[float, float]]
    contamination_time: float | None = None

    @property
    def max_norm_drift(self) -> float:
        n0 = self.norm_log[0][1]
        return max(abs(n - n0) for _, n in self.norm_log)

    @property
    def valid(self) -> bool:
        return self.max_norm_drift < NORM_DRIFT_LIMIT


def edge_density(psi: WaveFunction, nodes: int = 5) -> float:
    rho = psi.density
    return float(max(rho[:nodes].max(), rho[-nodes:].max()))


def run(
    initial: WaveFunction,
    potential: np.ndarray,
    params: PhysicalParams,
    t_max: float,
    snapshot_times=(),
    *,
    monitor_every: int = 200,
    contamination: str = "abort",
    contamination_level: float = 1e-6,
    edge_nodes: int = 5,
) -> RunResult:
    """Propagate ``initial`` to ``t_max`` and collect snapshots.

    Snapshots are taken at the step nearest each requested time. Every
    ``monitor_every`` steps the norm is logged and the edge density checked.
    ``contamination`` decides what happens when |psi|^2 within
    ``edge_nodes`` of a wall exceeds ``contamination_level``: "abort" stops
    the run (with a warning), "warn" records the time and continues,
    "ignore" only records the time.
    """
    if t_max < 0:
        raise PolywellError("invalid run", "t_max must be >= 0")
    if contamination not in ("abort", "warn", "ignore"):
        raise ValueError(f"unknown contamination policy {contamination!r}")
    times = sorted(float(t) for t in snapshot_times)
    if times and (times[0] < 0 or times[-1] > t_max + 1e-12):
        raise PolywellError("invalid run", "snapshot times must lie in [0, t_max]")

    state = PropagatorState(initial.copy(), potential, params)
    dt = state.grid.dt
    total = int(round(t_max / dt))
    snap_steps = [int(round(t / dt)) for t in times]
    checkpoints = sorted(set(snap_steps) | set(range(0, total, monitor_every)) | {total})

    snapshots: list[WaveFunction] = []
    contaminated_at = None
    si = 0
    for target in checkpoints:
        state.advance(target - state.step_count)
        if target % monitor_every == 0 or target == total:
            state.norm_log.append((state.psi.time, norm(state.psi)))
        while si < len(snap_steps) and snap_steps[si] == target:
            snapshots.append(state.psi.copy())
            si += 1
        if contaminated_at is None and edge_density(state.psi, edge_nodes) > contamination_level:
            contaminated_at = state.psi.time
            if contamination != "ignore":
                warnings.warn(
                    f"boundary contamination at t={contaminated_at:.6g}", BoundaryContamination
                )
            if contamination == "abort":
                break
    state.norm_log = _dedupe(state.norm_log)
    return RunResult(state, snapshots, state.norm_log, contaminated_at)


def _dedupe(entries):
    out = []
    for t, n in entries:
        if out and abs(out[-1][0] - t) < 1e-12:
            continue
        out.append((t, n))
    return out
