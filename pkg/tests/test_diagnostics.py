import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polywell.core import Grid, PhysicalParams, PolywellError, WaveFunction, norm
from polywell.diagnostics import (
    RegionSplit,
    analyze,
    classify,
    detect_peaks,
    fit_envelope,
    formation_time,
    interior_wavenumber,
    reflected_speed,
    spacing_stats,
    split_probabilities,
    well_region,
)
from polywell.packets import PacketShape, PacketSpec, make_packet
from polywell.potentials import PotentialSpec, WellShape
from polywell.propagator import run

GRID = Grid.from_spacing(-60.0, 60.0, 0.01, 0.01)


def train(lam=0.1, k=math.pi / 4, grid=GRID):
    x = grid.x
    vals = np.where(x < -1, np.exp(-lam * np.abs(x)) * np.sin(k * x), 0.0)
    return WaveFunction(grid, vals.astype(complex))


def test_peaks_of_regular_train():
    peaks = detect_peaks(train(), (-40.0, -1.0))
    spacing, cov = spacing_stats(peaks)
    assert spacing == pytest.approx(4.0, rel=1e-3)
    assert cov < 1e-3
    assert all(-40 <= p.x <= -1 for p in peaks)


def test_envelope_fit_recovers_parameters():
    fit = fit_envelope(detect_peaks(train(0.1, 0.785), (-40.0, -1.0), prominence=0.05))
    assert fit.lam == pytest.approx(0.1, rel=0.02)
    assert fit.k == pytest.approx(0.785, rel=0.02)
    assert fit.residual < 1e-3


def test_single_gaussian_has_one_peak():
    psi = make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.0, -10.0, 0.5), GRID)
    assert len(detect_peaks(psi, (-60.0, -1.0))) == 1
    with pytest.raises(PolywellError, match="insufficient peaks"):
        fit_envelope(detect_peaks(psi, (-60.0, -1.0)))
    c = classify(psi, (-60.0, -1.0))
    assert not c.polychotomous and not c.enough_peaks


def test_peaks_mirror_under_parity():
    psi = train()
    mirrored = WaveFunction(GRID, psi.values[::-1].copy())
    a = [p.x for p in detect_peaks(psi, (-40.0, -1.0))]
    b = [p.x for p in detect_peaks(mirrored, (1.0, 40.0))]
    assert np.allclose(a, -np.array(b[::-1]), atol=1e-9)


def test_peaks_from_amplitude_pair():
    psi = train()
    a = detect_peaks(psi, (-40.0, -1.0))
    b = detect_peaks((psi.x, np.abs(psi.values)), (-40.0, -1.0))
    assert a == b
    with pytest.raises(PolywellError, match="invalid prominence"):
        detect_peaks(psi, (-40.0, -1.0), prominence=1.5)


def test_interior_wavenumber_of_sine():
    g = Grid.from_spacing(-3.0, 3.0, 0.001, 0.01)
    psi = WaveFunction(g, np.sin(2 * np.pi * g.x).astype(complex))
    assert interior_wavenumber(psi, (-1.0, 1.0)) == pytest.approx(2 * np.pi, rel=0.01)
    flat = WaveFunction(g, np.exp(-g.x**2).astype(complex))
    with pytest.raises(PolywellError, match="no standing pattern"):
        interior_wavenumber(flat, (-1.0, 1.0))


def test_well_region():
    assert well_region(PotentialSpec(WellShape.SQUARE, 1.0, 1.0)) == (-1.0, 1.0)
    lo, hi = well_region(PotentialSpec(WellShape.GAUSSIAN, 1.0, 1.0))
    assert hi == pytest.approx(math.sqrt(math.log(2))) and lo == -hi
    with pytest.raises(PolywellError):
        well_region(PotentialSpec(WellShape.NONE, 0.0, 1.0))


def test_formation_time_examples():
    t = np.linspace(0, 100, 101)
    rising = 0.5 * np.minimum(t / 50, 1.0)
    assert formation_time(t, rising, definition="refl_final") == pytest.approx(45.0)
    assert formation_time(t, rising) == pytest.approx(45.0)
    # starting inside the reflected region: 0.2 -> 0.5
    offset = 0.2 + 0.3 * np.minimum(t / 50, 1.0)
    assert formation_time(t, offset) == pytest.approx(45.0)
    assert formation_time(t, offset, definition="refl_final") < 45.0
    with pytest.raises(PolywellError, match="never formed"):
        formation_time(t, np.zeros_like(t))
    with pytest.raises(PolywellError, match="never formed"):
        formation_time(t, np.full_like(t, 0.3))
    with pytest.raises(PolywellError, match="invalid definition"):
        formation_time(t, rising, definition="peak")
    with pytest.raises(PolywellError, match="invalid track"):
        formation_time(t[:3], rising)


def test_speed_of_free_track():
    t = np.linspace(0, 500, 51)
    fit = reflected_speed(t, -10.0 + (0.2 / 20.0) * t)
    assert fit.v == pytest.approx(0.01, rel=1e-12)
    assert fit.residual < 1e-12 and fit.n_samples == 51
    windowed = reflected_speed(t, np.where(t < 100, np.nan, -3.0 - 0.02 * t), (100.0, 500.0))
    assert windowed.v == pytest.approx(-0.02) and windowed.window == (100.0, 500.0)
    with pytest.raises(PolywellError, match="insufficient samples"):
        reflected_speed(t[:5], t[:5])
    with pytest.raises(PolywellError, match="nonlinear track"):
        reflected_speed(t, np.cos(t / 40.0))


def test_free_packet_track_moves_at_q_over_m():
    g = Grid.from_spacing(-80.0, 40.0, 0.04, 0.05)
    psi0 = make_packet(PacketSpec(PacketShape.GAUSSIAN, -1.0, -10.0, 2.0), g)
    times = np.arange(0, 301, 15.0)
    res = run(psi0, np.zeros(g.n_points), PhysicalParams(20.0), 300.0, times)
    rep = analyze(res.snapshots, PotentialSpec(WellShape.NONE, 0.0, 1.0), speed_window=(0.0, 300.0))
    assert rep.v_refl == pytest.approx(-0.05, rel=1e-3)
    assert rep.interior_k is None and "interior_k" not in rep.errors


def test_split_probabilities():
    g = Grid.from_spacing(-20.0, 20.0, 0.01, 0.01)
    centred = make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.0, 0.0, 0.5), g)
    pr, pw, pt = split_probabilities(centred, RegionSplit())
    assert pr + pw + pt == pytest.approx(norm(centred), abs=1e-15)
    assert pr == pytest.approx(pt, abs=1e-12)
    assert pw == pytest.approx(math.erf(math.sqrt(2.0)), abs=2e-5)
    left = make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.0, -10.0, 0.5), g)
    assert split_probabilities(left, RegionSplit())[0] == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(PolywellError):
        RegionSplit(1.0, -1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lo=st.floats(0.05, 0.9), hi=st.floats(0.05, 0.9))
def test_classification_is_monotone_in_prominence(seed, lo, hi):
    lo, hi = sorted((lo, hi))
    rng = np.random.default_rng(seed)
    g = Grid.from_spacing(-40.0, 0.0, 0.02, 0.01)
    k = rng.uniform(0.5, 1.5)
    wobble = 1 + rng.uniform(0, 0.8) * rng.standard_normal(g.n_points).cumsum() / np.sqrt(g.n_points)
    psi = WaveFunction(g, (np.exp(-0.05 * np.abs(g.x)) * np.sin(k * g.x) * wobble).astype(complex))
    if classify(psi, (-40.0, -1.0), hi).polychotomous:
        assert classify(psi, (-40.0, -1.0), lo).polychotomous


def test_classify_rejects_low_prominence():
    with pytest.raises(PolywellError, match="invalid prominence"):
        classify(train(), (-40.0, -1.0), prominence=0.01)


def test_report_json_is_deterministic():
    g = Grid.from_spacing(-40.0, 40.0, 0.02, 0.016)
    well = PotentialSpec(WellShape.GAUSSIAN, 1.0, 1.0)
    psi0 = make_packet(PacketSpec(PacketShape.GAUSSIAN, 1.0, -10.0, 0.5), g)
    outputs = []
    for _ in range(2):
        res = run(psi0, well(g.x), PhysicalParams(20.0), 40.0, np.arange(0, 41, 4.0))
        outputs.append(analyze(res.snapshots, well).to_json())
    assert outputs[0] == outputs[1]
    data = json.loads(outputs[0])
    assert data["p_refl"] + data["p_well"] + data["p_trans"] == pytest.approx(1.0, abs=1e-9)
    assert isinstance(data["polychotomous"], bool)
    assert "NaN" not in outputs[0]
