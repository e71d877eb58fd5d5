"""Thomas algorithm for complex tridiagonal systems."""

from __future__ import annotations

import numpy as np
from numba import njit


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``lower`` and ``upper`` have one element fewer than ``diag``; ``lower[i]``
    couples row i+1 to column i. No pivoting, so the matrix should be
    diagonally dominant or otherwise safe for plain elimination.
    """
    diag = np.asarray(diag, dtype=complex)
    n = diag.shape[0]
    lower = np.asarray(lower, dtype=complex)
    upper = np.asarray(upper, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if lower.shape != (n - 1,) or upper.shape != (n - 1,) or rhs.shape != (n,):
        raise ValueError("inconsistent tridiagonal shapes")
    cp, inv = _factor(lower, diag, upper)
    out = np.empty(n, dtype=complex)
    _substitute(lower, cp, inv, rhs, out)
    return out


@njit(cache=True)
def _factor(lower, diag, upper):
    n = diag.shape[0]
    cp = np.empty(n, dtype=np.complex128)
    inv = np.empty(n, dtype=np.complex128)
    inv[0] = 1.0 / diag[0]
    cp[0] = upper[0] * inv[0] if n > 1 else 0.0
    for i in range(1, n):
        inv[i] = 1.0 / (diag[i] - lower[i - 1] * cp[i - 1])
        cp[i] = upper[i] * inv[i] if i < n - 1 else 0.0
    return cp, inv


@njit(cache=True)
def _substitute(lower, cp, inv, rhs, out):
    n = rhs.shape[0]
    out[0] = rhs[0] * inv[0]
    for i in range(1, n):
        out[i] = (rhs[i] - lower[i - 1] * out[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


class CayleyFactor:
    """Pre-factored (1 + i dt H / 2) for a fixed three-point Hamiltonian.

    H = -(1/2m) d2/dx2 + V on the interior nodes, with psi = 0 on both
    edge nodes. ``advance`` applies the Cayley map
    (1 + i dt H/2)^-1 (1 - i dt H/2) ``nsteps`` times in place.
    """

    def __init__(self, v_interior: np.ndarray, mass: float, dx: float, dt: float):
        kin = 1.0 / (2.0 * mass * dx * dx)
        h_diag = 2.0 * kin + np.asarray(v_interior)
        self.h_off = -kin
        self.dt = dt
        self.a_diag = 1.0 + 0.5j * dt * h_diag
        self.a_off = 0.5j * dt * self.h_off
        n = h_diag.shape[0]
        off = np.full(n - 1, self.a_off, dtype=complex)
        self.cp, self.inv = _factor(off, self.a_diag, off)

    def advance(self, psi_interior: np.ndarray, nsteps: int) -> None:
        _cayley_steps(psi_interior, self.a_diag, self.a_off, self.cp, self.inv, nsteps)


@njit(cache=True)
def _cayley_steps(psi, a_diag, a_off, cp, inv, nsteps):
    n = psi.shape[0]
    d = np.empty(n, dtype=np.complex128)
    for _ in range(nsteps):
        # rhs = (2 - A) psi, since 1 - i dt H/2 = 2 - (1 + i dt H/2)
        prev = 0.0j
        for i in range(n):
            nxt = psi[i + 1] if i < n - 1 else 0.0j
            r = (2.0 - a_diag[i]) * psi[i] - a_off * (prev + nxt)
            prev = psi[i]
            if i == 0:
                d[0] = r * inv[0]
            else:
                d[i] = (r - a_off * d[i - 1]) * inv[i]
        psi[n - 1] = d[n - 1]
        for i in range(n - 2, -1, -1):
            psi[i] = d[i] - cp[i] * psi[i + 1]
