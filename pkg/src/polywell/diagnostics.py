"""Characterisation of a scattering outcome.

Splits the line into reflected / well / transmitted regions, tracks the
reflected centre of mass, finds the peaks of the reflected train and fits
the envelope ``exp(-lam |x|) sin^2(k x)`` to them.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core import PolywellError, WaveFunction, center_of_mass, norm, probability_in
from .potentials import PotentialSpec, WellShape


@dataclass(frozen=True)
class RegionSplit:
    left_edge: float = -1.0
    right_edge: float = 1.0

    def __post_init__(self):
        if not self.left_edge < self.right_edge:
            raise PolywellError("invalid split", "left_edge must be < right_edge")

    @classmethod
    def around(cls, center: float, half_width: float) -> "RegionSplit":
        return cls(center - half_width, center + half_width)


@dataclass(frozen=True)
class Peak:
    x: float
    height: float  # |psi|^2 at the refined maximum
    amplitude: float  # |psi| at the refined maximum


@dataclass(frozen=True)
class EnvelopeFit:
    lam: float
    k: float
    residual: float
    n_peaks: int
    spacing_cov: float


def split_probabilities(psi: WaveFunction, regions: RegionSplit) -> tuple[float, float, float]:
    g = psi.grid
    total = norm(psi)
    lo, hi = regions.left_edge, regions.right_edge
    p_refl = probability_in(psi, g.x_min, lo) if lo > g.x_min else 0.0
    p_trans = probability_in(psi, hi, g.x_max) if hi < g.x_max else 0.0
    # the well share is the remainder of the same quadrature, so the three add up exactly
    return p_refl, total - p_refl - p_trans, p_trans


def _maxima(psi, region):
    """(x, rho, indices of interior local maxima, regional max) inside ``region``."""
    if isinstance(psi, WaveFunction):
        x, amp = psi.x, np.abs(psi.values)
    else:
        x, amp = (np.asarray(a, dtype=float) for a in psi)
    a, b = region
    sel = (x >= a) & (x <= b)
    xs, rho = x[sel], amp[sel] ** 2
    if len(rho) < 3 or rho.max() <= 0:
        return xs, rho, np.zeros(0, dtype=int), 0.0
    inner = np.arange(1, len(rho) - 1)
    is_max = (rho[inner] > rho[inner - 1]) & (rho[inner] >= rho[inner + 1])
    return xs, rho, inner[is_max], float(rho.max())


def detect_peaks(
    psi: WaveFunction | tuple[np.ndarray, np.ndarray],
    region: tuple[float, float],
    prominence: float = 0.1,
) -> list[Peak]:
    """Local maxima of |psi|^2 in ``region`` above ``prominence`` x the regional maximum.

    Positions are refined with a parabola through the three nodes around each
    maximum. ``psi`` may also be an ``(x, |psi|)`` pair of arrays.
    """
    if not 0 < prominence < 1:
        raise PolywellError("invalid prominence", "prominence must lie in (0, 1)")
    xs, rho, idx, top = _maxima(psi, region)
    peaks = []
    for i in idx:
        if rho[i] < prominence * top:
            continue
        y0, y1, y2 = rho[i - 1], rho[i], rho[i + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        shift = min(max(shift, -0.5), 0.5)
        h = xs[1] - xs[0]
        height = y1 - 0.25 * (y0 - y2) * shift
        peaks.append(Peak(float(xs[i] + shift * h), float(height), float(np.sqrt(max(height, 0.0)))))
    return sorted(peaks, key=lambda p: p.x)


def spacing_stats(peaks: list[Peak]) -> tuple[float, float]:
    """(median spacing, coefficient of variation of spacing) of sorted peaks."""
    if len(peaks) < 2:
        return float("nan"), float("nan")
    d = np.diff([p.x for p in peaks])
    return float(np.median(d)), float(np.std(d) / np.mean(d)) if len(d) > 1 else 0.0


def fit_envelope(peaks: list[Peak], region: tuple[float, float] | None = None) -> EnvelopeFit:
    """Fit exp(-lam |x|) sin^2(k x) to a peak list.

    Maxima of sin^2 are pi/k apart, so k = pi / (median spacing). ``lam`` is
    minus the slope of ln(amplitude) against |x|; the residual is the RMS of
    that straight-line fit.
    """
    if region is not None:
        peaks = [p for p in peaks if region[0] <= p.x <= region[1]]
    if len(peaks) < 3:
        raise PolywellError("insufficient peaks", f"need >= 3 peaks, got {len(peaks)}")
    spacing, cov = spacing_stats(peaks)
    ax = np.abs([p.x for p in peaks])
    ln_amp = np.log([p.amplitude for p in peaks])
    slope, icpt = np.polyfit(ax, ln_amp, 1)
    resid = float(np.sqrt(np.mean((ln_amp - (slope * ax + icpt)) ** 2)))
    return EnvelopeFit(max(-float(slope), 0.0), float(np.pi / spacing), resid, len(peaks), cov)


# ---------------------------------------------------------------- time tracks

FORMATION_DEFINITIONS = ("refl_change", "refl_final")


def formation_time(
    times,
    p_refl,
    *,
    fraction: float = 0.9,
    definition: str = "refl_change",
) -> float:
    """Instant at which the reflected probability has settled.

    "refl_final": first time P_refl >= fraction x its final value.
    "refl_change": first time P_refl has covered ``fraction`` of its total
    change from the first to the last sample. The two agree for a track
    that starts at zero; the second stays meaningful when the incident
    packet itself starts inside the reflected region.
    """
    if definition not in FORMATION_DEFINITIONS:
        raise PolywellError("invalid definition", f"unknown formation definition {definition!r}")
    if not 0 < fraction <= 1:
        raise PolywellError("invalid definition", "fraction must lie in (0, 1]")
    t = np.asarray(times, dtype=float)
    p = np.asarray(p_refl, dtype=float)
    if t.shape != p.shape or len(t) < 2:
        raise PolywellError("invalid track", "need >= 2 samples of matching length")
    if p[-1] < 1e-3:
        raise PolywellError("never formed", f"final P_refl {p[-1]:.3e} below 1e-3")
    if definition == "refl_final":
        hit = np.nonzero(p >= fraction * p[-1])[0]
        return float(t[hit[0]])
    change = p[-1] - p[0]
    if abs(change) < 1e-3:
        raise PolywellError("never formed", f"P_refl changed by only {change:.3e}")
    progress = (p - p[0]) / change
    hit = np.nonzero(progress >= fraction)[0]
    return float(t[hit[0]])


@dataclass(frozen=True)
class SpeedFit:
    v: float
    residual: float  # RMS deviation from the fitted line
    n_samples: int
    window: tuple[float, float]


def reflected_speed(times, track, window: tuple[float, float] | None = None, *, min_samples: int = 10) -> SpeedFit:
    """Least-squares slope of a centre-of-mass track inside ``window``."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(track, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, x = t[keep], x[keep]
    keep = np.isfinite(x)
    t, x = t[keep], x[keep]
    if len(t) < min_samples:
        raise PolywellError("insufficient samples", f"need >= {min_samples} samples, got {len(t)}")
    slope, icpt = np.polyfit(t, x, 1)
    resid = float(np.sqrt(np.mean((x - (slope * t + icpt)) ** 2)))
    span = float(x.max() - x.min())
    if resid > 0.1 * span:
        raise PolywellError("nonlinear track", f"fit residual {resid:.3g} exceeds 10% of range {span:.3g}")
    return SpeedFit(float(slope), resid, len(t), (float(t[0]), float(t[-1])))


# ---------------------------------------------------------------- in-well pattern


def well_region(well: PotentialSpec) -> tuple[float, float]:
    """Interval where the well is at least half its depth."""
    c, w = well.center, well.width
    if well.shape is WellShape.GAUSSIAN:
        h = w * math.sqrt(math.log(2.0))
    elif well.shape in (WellShape.SQUARE, WellShape.LORENTZIAN):
        h = w
    else:
        raise PolywellError("invalid well", "free space has no well region")
    return c - h, c + h


def interior_wavenumber(psi, region: tuple[float, float], prominence: float = 0.1) -> float:
    """pi / (median spacing of the |psi| maxima inside ``region``)."""
    peaks = detect_peaks(psi, region, prominence)
    if len(peaks) < 2:
        raise PolywellError("no standing pattern", f"{len(peaks)} interior maxima in {region}")
    spacing, _ = spacing_stats(peaks)
    return float(np.pi / spacing)


# ---------------------------------------------------------------- verdict

PROMINENCE_FLOOR = 0.05


@dataclass(frozen=True)
class Thresholds:
    min_peaks: int = 3
    max_cov: float = 0.15
    max_residual: float = 0.25


@dataclass(frozen=True)
class Classification:
    polychotomous: bool
    enough_peaks: bool
    regular_spacing: bool
    good_fit: bool
    n_peaks: int
    spacing_cov: float
    residual: float
    fit: EnvelopeFit | None


def _verdict(peaks: list[Peak], th: Thresholds) -> Classification:
    n = len(peaks)
    fit = fit_envelope(peaks) if n >= 3 else None
    _, cov = spacing_stats(peaks)
    resid = fit.residual if fit else float("nan")
    enough = n >= th.min_peaks
    regular = bool(np.isfinite(cov) and cov < th.max_cov)
    good = bool(np.isfinite(resid) and resid < th.max_residual)
    return Classification(enough and regular and good, enough, regular, good, n, cov, resid, fit)


def classify(
    psi, region: tuple[float, float], prominence: float = 0.1, thresholds: Thresholds = Thresholds()
) -> Classification:
    """Is the signal in ``region`` a regular multi-peak train?

    Sub-verdicts are reported for the requested prominence. The overall
    verdict also requires every peak set seen between ``PROMINENCE_FLOOR``
    and the requested prominence to pass, so raising the prominence can
    never turn a false verdict into a true one.
    """
    if not PROMINENCE_FLOOR <= prominence < 1:
        raise PolywellError("invalid prominence", f"prominence must lie in [{PROMINENCE_FLOOR}, 1)")
    main = _verdict(detect_peaks(psi, region, prominence), thresholds)
    if not main.polychotomous:
        return main
    _, rho, idx, top = _maxima(psi, region)
    levels = {PROMINENCE_FLOOR} | {float(r) for r in rho[idx] / top if PROMINENCE_FLOOR < r < prominence}
    for r in sorted(levels):
        if r < prominence and not _verdict(detect_peaks(psi, region, r), thresholds).polychotomous:
            return replace(main, polychotomous=False)
    return main


# ---------------------------------------------------------------- report


@dataclass
class TrackPoint:
    t: float
    p_refl: float
    p_well: float
    p_trans: float
    norm: float
    x_refl: float  # conditional centre of mass of the reflected region
    x_refl_raw: float  # unnormalised integral of x |psi|^2 over the reflected region
    x_trans: float


@dataclass
class DiagnosticsReport:
    p_refl: float
    p_well: float
    p_trans: float
    track: list[TrackPoint]
    regions: RegionSplit
    v_refl: float | None = None
    v_refl_residual: float | None = None
    v_trans: float | None = None
    speed_window: tuple[float, float] | None = None
    formation_time: float | None = None
    formation_definition: str = "refl_change"
    formation_fraction: float = 0.9
    envelope: EnvelopeFit | None = None
    envelope_at_formation: EnvelopeFit | None = None
    classification: Classification | None = None
    interior_k: float | None = None
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def polychotomous(self) -> bool:
        return bool(self.classification and self.classification.polychotomous)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["polychotomous"] = self.polychotomous
        return _clean(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cond_cm(psi: WaveFunction, a: float, b: float) -> float:
    try:
        return center_of_mass(psi, a, b, conditional=True)
    except PolywellError:
        return float("nan")


def track_point(psi: WaveFunction, regions: RegionSplit) -> TrackPoint:
    g = psi.grid
    lo, hi = regions.left_edge, regions.right_edge
    pr, pw, pt = split_probabilities(psi, regions)
    raw = center_of_mass(psi, g.x_min, lo, threshold=0.0) if lo > g.x_min else float("nan")
    return TrackPoint(
        psi.time, pr, pw, pt, norm(psi),
        _cond_cm(psi, g.x_min, lo) if lo > g.x_min else float("nan"),
        raw,
        _cond_cm(psi, hi, g.x_max) if hi < g.x_max else float("nan"),
    )


def _nearest(snapshots: list[WaveFunction], t: float) -> WaveFunction:
    return min(snapshots, key=lambda s: abs(s.time - t))


def analyze(
    snapshots: list[WaveFunction],
    well: PotentialSpec,
    *,
    regions: RegionSplit | None = None,
    prominence: float = 0.1,
    thresholds: Thresholds = Thresholds(),
    formation: str = "refl_change",
    fraction: float = 0.9,
    speed_window: tuple[float, float] | None = None,
    interior_time: float | None = None,
) -> DiagnosticsReport:
    """Build a report from time-ordered snapshots of one run.

    Failures of individual analyses are recorded in ``errors`` by code and
    leave the matching fields empty.
    """
    if not snapshots:
        raise PolywellError("invalid track", "no snapshots")
    snaps = sorted(snapshots, key=lambda s: s.time)
    if regions is None:
        regions = RegionSplit.around(well.center, well.width)
    track = [track_point(s, regions) for s in snaps]
    last = snaps[-1]
    rep = DiagnosticsReport(
        track[-1].p_refl, track[-1].p_well, track[-1].p_trans, track, regions,
        formation_definition=formation, formation_fraction=fraction,
    )
    t = np.array([p.t for p in track])
    refl_region = (last.grid.x_min, regions.left_edge)

    try:
        rep.formation_time = formation_time(
            t, [p.p_refl for p in track], fraction=fraction, definition=formation
        )
    except PolywellError as exc:
        rep.errors["formation_time"] = exc.code

    if rep.formation_time is not None:
        peaks = detect_peaks(_nearest(snaps, rep.formation_time), refl_region, prominence)
        try:
            rep.envelope_at_formation = fit_envelope(peaks)
        except PolywellError as exc:
            rep.errors["envelope_at_formation"] = exc.code

    window = speed_window
    if window is None:
        start = rep.formation_time if rep.formation_time is not None else float(t[0])
        window = (start, float(t[-1]))
    rep.speed_window = window
    try:
        fit = reflected_speed(t, [p.x_refl for p in track], window)
        rep.v_refl, rep.v_refl_residual = fit.v, fit.residual
    except PolywellError as exc:
        rep.errors["v_refl"] = exc.code
    try:
        rep.v_trans = reflected_speed(t, [p.x_trans for p in track], window).v
    except PolywellError as exc:
        rep.errors["v_trans"] = exc.code

    peaks = detect_peaks(last, refl_region, prominence)
    try:
        rep.envelope = fit_envelope(peaks)
    except PolywellError as exc:
        rep.errors["envelope"] = exc.code
    rep.classification = classify(last, refl_region, max(prominence, PROMINENCE_FLOOR), thresholds)

    if well.shape is not WellShape.NONE:
        snap = last if interior_time is None else _nearest(snaps, interior_time)
        try:
            rep.interior_k = interior_wavenumber(snap, well_region(well), prominence)
        except PolywellError as exc:
            rep.errors["interior_k"] = exc.code
    return rep
