import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polywell.core import Grid, PolywellError, center_of_mass, norm
from polywell.packets import (
    PacketShape,
    PacketSpec,
    make_packet,
    momentum_expectation,
    position_moments,
)

GRID = Grid.from_spacing(-60.0, 60.0, 0.02, 0.01)


def test_fig1_initial_state():
    psi = make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.2, -10.0, 0.5), GRID)
    assert norm(psi) == pytest.approx(1.0, abs=1e-12)
    mean, var = position_moments(psi)
    assert mean == pytest.approx(-10.0, abs=1e-6)
    assert var == pytest.approx(0.25, rel=5e-3)
    assert psi.x[np.argmax(np.abs(psi.values))] == pytest.approx(-10.0)


def test_square_packet_profile():
    psi = make_packet(PacketSpec(PacketShape.SQUARE, 1.0, -10.0, 0.5), GRID)
    amp = np.abs(psi.values)
    inside = np.abs(psi.x + 10.0) < 0.5 - 1e-9
    outside = np.abs(psi.x + 10.0) > 0.5 + 1e-9
    assert np.allclose(amp[inside], 1.0, rtol=1e-2)
    assert np.all(amp[outside] == 0.0)
    # nodes exactly on an edge carry half the interior value
    edge = np.isclose(np.abs(psi.x + 10.0), 0.5)
    assert np.allclose(amp[edge], 0.5 * amp[inside][0])


def test_phase_gradient_is_q():
    psi = make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.7, 0.0, 0.5), GRID)
    i = GRID.index_of(0.0)
    dphase = np.angle(psi.values[i + 1] / psi.values[i - 1]) / (2 * GRID.dx)
    assert dphase == pytest.approx(0.7, rel=1e-6)


@pytest.mark.parametrize("shape", list(PacketShape))
def test_zero_momentum_centred_packet_is_real_and_even(shape):
    # the Lorentzian's 1/x^4 density tail needs a much wider grid
    half = 1500.0 if shape is PacketShape.LORENTZIAN else 40.0
    psi = make_packet(PacketSpec(shape, 0.0, 0.0, 0.5), Grid.from_spacing(-half, half, 0.05, 0.01))
    assert np.abs(psi.values.imag).max() < 1e-15
    assert np.allclose(psi.values, psi.values[::-1], atol=1e-15)


def test_momentum_expectation_examples():
    assert momentum_expectation(make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.2, -10, 0.5), GRID)) \
        == pytest.approx(0.2, abs=1e-3)
    assert momentum_expectation(make_packet(PacketSpec(PacketShape.GAUSSIAN, 1.4, -10, 0.5), GRID)) \
        == pytest.approx(1.4, abs=2e-3)
    assert momentum_expectation(make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.0, -10, 0.5), GRID)) \
        == pytest.approx(0.0, abs=1e-12)


def test_errors():
    with pytest.raises(PolywellError, match="under-resolved"):
        make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.2, 0.0, 0.1), GRID)
    with pytest.raises(PolywellError, match="edge clipping"):
        make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.2, -58.0, 0.5), GRID)
    with pytest.raises(PolywellError):
        PacketSpec(PacketShape.GAUSSIAN, 0.2, 0.0, -1.0)


def test_reversed_q_conjugates_centred_packet():
    a = make_packet(PacketSpec(PacketShape.GAUSSIAN, 0.9, 0.0, 0.5), GRID)
    b = make_packet(PacketSpec(PacketShape.GAUSSIAN, -0.9, 0.0, 0.5), GRID)
    assert np.allclose(a.values, np.conj(b.values), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(
    shape=st.sampled_from([PacketShape.GAUSSIAN, PacketShape.SQUARE, PacketShape.LINEAR_EXPONENTIAL]),
    q=st.floats(-3, 3),
    x0=st.floats(-20, 20),
    width=st.floats(0.3, 2.0),
)
def test_unit_norm_for_any_admissible_spec(shape, q, x0, width):
    psi = make_packet(PacketSpec(shape, q, x0, width), GRID)
    assert norm(psi) == pytest.approx(1.0, abs=1e-12)
    assert center_of_mass(psi, GRID.x_min, GRID.x_max) == pytest.approx(x0, abs=0.05 * width + GRID.dx)
