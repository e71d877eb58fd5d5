"""Semi-analytic evolution of a square packet scattering off a square well.

The wave at time t is the superposition

    psi(x, t) = integral_C phi(x, p) a(p) exp(-i p^2 t / 2m) dp

of stationary square-well scattering states ``phi`` weighted by the Fourier
amplitude ``a`` of the initial square packet. C runs along the real axis
but climbs over the bound-state poles p = i kappa_n on the imaginary axis.
This is only valid while the initial packet sits well to the left of the
well, since the bound-state content of the packet is then negligible.

phi = exp(i p x) + (scattered part). The exp(i p x) term is entire, so its
contour integral is plain free evolution and is evaluated in closed form
with Fresnel integrals. Only the scattered remainder, which decays at
least like 1/p^2, is integrated numerically with Gauss-Legendre panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import fresnel

from .core import PolywellError
from .packets import PacketShape, PacketSpec
from .potentials import PotentialSpec, WellShape
from .spectral import bound_states


def _well_params(well: PotentialSpec) -> tuple[float, float]:
    if well.shape is WellShape.NONE:
        return 0.0, 1.0
    if well.shape is not WellShape.SQUARE:
        raise PolywellError("invalid well", "the analytic oracle handles square wells only")
    if well.center != 0:
        raise PolywellError("invalid well", "the analytic oracle assumes a well centred at 0")
    return well.depth, well.width


@dataclass
class StationaryState:
    """Scattering state for momentum ``p`` (array-valued).

    x < -a: exp(i p x) + R exp(-i p x)
    |x| < a: A exp(i p' x) + B exp(-i p' x)
    x > a:  T exp(i p x)
    """

    p: np.ndarray
    v0: float
    a: float
    mass: float
    R: np.ndarray
    A: np.ndarray
    B: np.ndarray
    T: np.ndarray
    p_prime: np.ndarray
    matrix: np.ndarray = field(repr=False, default=None)
    rhs: np.ndarray = field(repr=False, default=None)

    def residual(self) -> np.ndarray:
        """Relative residual of the 4x4 continuity system, per momentum."""
        sol = np.stack([self.R, self.A, self.B, self.T], axis=-1)
        r = np.einsum("...ij,...j->...i", self.matrix, sol) - self.rhs
        scale = np.abs(self.matrix).max(axis=(-2, -1)) * np.abs(sol).max(axis=-1) + np.abs(self.rhs).max(axis=-1)
        return np.abs(r).max(axis=-1) / scale

    def __call__(self, x) -> np.ndarray:
        """phi(x, p) for scalar ``p`` at positions ``x``."""
        x = np.asarray(x, dtype=float)
        p, pp = complex(self.p), complex(self.p_prime)
        R, A, B, T = (complex(v) for v in (self.R, self.A, self.B, self.T))
        out = np.empty(x.shape, dtype=complex)
        left, right = x < -self.a, x > self.a
        inside = ~(left | right)
        out[left] = np.exp(1j * p * x[left]) + R * np.exp(-1j * p * x[left])
        out[inside] = A * np.exp(1j * pp * x[inside]) + B * np.exp(-1j * pp * x[inside])
        out[right] = T * np.exp(1j * p * x[right])
        return out


def stationary_state(p, well: PotentialSpec, mass: float) -> StationaryState:
    """Solve the matching conditions at x = -a and x = +a for each ``p``."""
    v0, a = _well_params(well)
    p = np.asarray(p, dtype=complex)
    if np.any(p == 0):
        raise PolywellError("pole", "p = 0 is excluded")
    pp = np.sqrt(p * p + 2 * mass * v0)
    # phi is even in p', so pick the root with Im p' >= 0 to keep exp(i p' a) bounded
    pp = np.where(pp.imag < 0, -pp, pp)
    ep, em = np.exp(1j * p * a), np.exp(-1j * p * a)
    qp, qm = np.exp(1j * pp * a), np.exp(-1j * pp * a)
    z = np.zeros_like(p)
    # unknowns (R, A, B, T)
    m = np.stack(
        [
            np.stack([ep, -qm, -qp, z], -1),
            np.stack([-1j * p * ep, -1j * pp * qm, 1j * pp * qp, z], -1),
            np.stack([z, qp, qm, -ep], -1),
            np.stack([z, 1j * pp * qp, -1j * pp * qm, -1j * p * ep], -1),
        ],
        -2,
    )
    rhs = np.stack([-em, -1j * p * em, z, z], -1)
    try:
        sol = np.linalg.solve(m, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise PolywellError("pole", "matching system is singular") from exc
    if not np.all(np.isfinite(sol)):
        raise PolywellError("pole", "matching system is singular")
    st = StationaryState(p, v0, a, mass, sol[..., 0], sol[..., 1], sol[..., 2], sol[..., 3], pp, m, rhs)
    return st


def packet_amplitude(p, spec: PacketSpec) -> np.ndarray:
    """Fourier amplitude a(p) of the unnormalised square packet.

    Normalised so that integral a(p) exp(i p x) dp over real p gives back
    exp(i q (x - x0)) on |x - x0| < d.
    """
    if spec.shape is not PacketShape.SQUARE:
        raise PolywellError("invalid packet", "the analytic oracle handles square packets only")
    p = np.asarray(p, dtype=complex)
    s = p - spec.q
    d = spec.width
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    # sin(s d)/s with its series near s = 0
    sinc = np.where(small, d * (1 - (s * d) ** 2 / 6), np.sin(safe * d) / safe)
    return np.exp(-1j * p * spec.x0) * sinc / np.pi


def free_square_packet(x, t: float, spec: PacketSpec, mass: float) -> np.ndarray:
    """Closed-form free evolution of the unnormalised square packet."""
    x = np.asarray(x, dtype=float)
    q, x0, d = spec.q, spec.x0, spec.width
    if t == 0:
        return np.where(np.abs(x - x0) < d, np.exp(1j * q * (x - x0)), 0.0).astype(complex)
    alpha = mass / (2 * t)
    shift = q * t / mass
    u1 = x0 - d - x + shift
    u2 = x0 + d - x + shift
    scale = math.sqrt(2 * alpha / math.pi)
    s1, c1 = fresnel(u1 * scale)
    s2, c2 = fresnel(u2 * scale)
    bracket = (c2 - c1) + 1j * (s2 - s1)
    phase = np.exp(1j * q * (x - x0) - 1j * q * q * t / (2 * mass))
    return 0.5 * (1 - 1j) * phase * bracket


@dataclass(frozen=True)
class ContourPath:
    """Real axis from -p_max to +p_max with a rectangular detour over the poles.

    Vertices: -p_max, -eta, -eta + i h, eta + i h, eta, p_max.
    """

    p_max: float
    eta: float = 0.05
    height: float = 8.0

    @property
    def vertices(self) -> list[complex]:
        e, h, P = self.eta, self.height, self.p_max
        return [-P, -e, complex(-e, h), complex(e, h), e, P]

    def validate(self, poles: list[float]) -> None:
        if not (self.eta > 0 and self.p_max > self.eta):
            raise PolywellError("invalid contour", "need 0 < eta < p_max")
        if poles and max(poles) >= self.height:
            raise PolywellError(
                "invalid contour", f"pole at i*{max(poles):.4g} lies on or above the detour height"
            )

    def nodes(
        self,
        freq,
        poles: list[float],
        *,
        phase_per_panel: float = 6.0,
        order: int = 16,
        max_panel: float = 1.0,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes and complex weights along the path.

        Panels are shortened so that ``freq(p) * length <= phase_per_panel``
        and so that no panel is longer than half its distance to a pole.
        """
        gx, gw = leggauss(order)
        verts = self.vertices
        pole_pts = [complex(0, k) for k in poles]
        all_nodes, all_weights = [], []
        for start, end in zip(verts[:-1], verts[1:]):
            length = abs(end - start)
            direction = (end - start) / length
            edges = [0.0]
            s = 0.0
            while s < length:
                p = start + direction * s
                step = min(max_panel, phase_per_panel / freq(p))
                if pole_pts:
                    dist = min(abs(p - z) for z in pole_pts)
                    step = min(step, max(0.5 * dist, 1e-3))
                s = min(s + step, length)
                edges.append(s)
            edges = np.asarray(edges)
            lo, hi = edges[:-1, None], edges[1:, None]
            half = 0.5 * (hi - lo)
            pts = (lo + hi) / 2 + half * gx[None, :]
            all_nodes.append((start + direction * pts).ravel())
            all_weights.append((direction * half * gw[None, :]).ravel())
        return np.concatenate(all_nodes), np.concatenate(all_weights)


def default_contour(spec: PacketSpec, well: PotentialSpec, mass: float) -> ContourPath:
    v0, _ = _well_params(well)
    kmax = math.sqrt(2 * mass * v0)
    height = 1.25 * kmax if kmax > 0 else 1.0
    return ContourPath(p_max=abs(spec.q) + 40.0 / spec.width, eta=0.05, height=height)


@dataclass
class OracleResult:
    x: np.ndarray
    psi: np.ndarray
    t: float
    nodes: int
    p_max: float
    change_nodes: float
    change_pmax: float


def evolve_analytic(
    x,
    t: float,
    spec: PacketSpec,
    well: PotentialSpec,
    mass: float,
    contour: ContourPath | None = None,
    *,
    eps: float = 1e-6,
    max_refinements: int = 6,
    phase_per_panel: float = 12.0,
    check: bool = True,
    normalized: bool = False,
) -> OracleResult:
    """psi(x, t) for the square packet, with a quadrature convergence check.

    The result is recomputed with doubled node density and with a larger
    cut-off p_max; both must change it by less than ``eps``. Failing checks
    trigger refinement, up to ``max_refinements`` times before raising
    "not converged". ``normalized`` rescales by 1/sqrt(2d) to match a unit-norm
    packet.
    """
    if t < 0:
        raise PolywellError("invalid time", "t must be >= 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v0, a = _well_params(well)
    if spec.shape is not PacketShape.SQUARE:
        raise PolywellError("invalid packet", "the analytic oracle handles square packets only")
    if spec.x0 + spec.width >= -a:
        raise PolywellError("invalid packet", "the square packet must start left of the well")
    contour = contour or default_contour(spec, well, mass)
    poles = [s.k for s in bound_states(mass, v0, a).states] if v0 > 0 else []
    contour.validate(poles)

    psi = free_square_packet(x, t, spec, mass)
    scale = 1 / math.sqrt(2 * spec.width) if normalized else 1.0
    if v0 == 0:
        return OracleResult(x, psi * scale, t, 0, contour.p_max, 0.0, 0.0)

    xspan = np.abs(x).max() + abs(spec.x0) + spec.width + 2 * a

    def scattered(c: ContourPath, budget: float) -> tuple[np.ndarray, int]:
        tau = t / mass
        nodes, weights = c.nodes(lambda p: xspan + abs(p) * tau + 1.0, poles, phase_per_panel=budget)
        st = stationary_state(nodes, well, mass)
        g = weights * packet_amplitude(nodes, spec) * np.exp(-0.5j * nodes * nodes * tau)
        return _superpose(x, nodes, g, st), len(nodes)

    budget = phase_per_panel
    cur = contour
    base, n = scattered(cur, budget)
    dn = dp = 0.0
    for _ in range(max_refinements + 1):
        if not check:
            break
        finer, n_fine = scattered(cur, budget / 2)
        dn = float(np.abs(finer - base).max())
        wider = ContourPath(cur.p_max * 1.5, cur.eta, cur.height)
        wide, _ = scattered(wider, budget)
        dp = float(np.abs(wide - base).max())
        if dn < eps and dp < eps:
            break
        if dn >= eps:
            budget /= 2
            base, n = finer, n_fine
        if dp >= eps:
            cur = wider
            base, n = scattered(cur, budget)
    else:
        raise PolywellError(
            "not converged",
            f"node doubling changed psi by {dn:.2e}, p_max increase by {dp:.2e} (eps={eps:g})",
        )
    return OracleResult(x, (psi + base) * scale, t, n, cur.p_max, dn, dp)


def _superpose(x: np.ndarray, p: np.ndarray, g: np.ndarray, st: StationaryState) -> np.ndarray:
    """Sum over nodes of g * (phi(x, p) - exp(i p x)) for every x."""
    a = st.a
    out = np.empty(x.shape, dtype=complex)
    left = x < -a
    right = x > a
    inside = ~(left | right)
    out[left] = _phase_sum(x[left], -p, g * st.R)
    out[right] = _phase_sum(x[right], p, g * (st.T - 1))
    for i in np.nonzero(inside)[0]:
        xi = x[i]
        phi = st.A * np.exp(1j * st.p_prime * xi) + st.B * np.exp(-1j * st.p_prime * xi) - np.exp(1j * p * xi)
        out[i] = np.sum(g * phi)
    return out


def _phase_sum(x: np.ndarray, k: np.ndarray, c: np.ndarray) -> np.ndarray:
    """sum_j c_j exp(i k_j x) for each x.

    Uniformly spaced x (the usual case) is handled by a running product
    exp(i k x_n) = exp(i k x_0) exp(i k dx)^n; other layouts fall back to
    chunked exponentials.
    """
    out = np.empty(x.shape, dtype=complex)
    if len(x) == 0:
        return out
    dx = np.diff(x)
    if len(x) > 2 and np.allclose(dx, dx[0], rtol=1e-12, atol=0):
        v = c * np.exp(1j * k * x[0])
        stepper = np.exp(1j * k * (x[1] - x[0]))
        for j in range(len(x)):
            if j:
                # re-anchor periodically so the running product cannot drift
                v = v * stepper if j % 256 else c * np.exp(1j * k * x[j])
            out[j] = v.sum()
        return out
    chunk = max(1, int(4e6 // max(len(k), 1)))
    for s in range(0, len(x), chunk):
        xs = x[s : s + chunk]
        out[s : s + chunk] = np.exp(1j * np.outer(xs, k)) @ c
    return out
