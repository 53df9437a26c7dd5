import numpy as np
import pytest

from ring_crystal.fields import LAB, TWISTED, FrameError, RingGrid, WaveField, gauge_transform


@pytest.mark.parametrize("n", [32, 100, 255, 0, 64.0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        RingGrid(n)


def test_grid_basics():
    g = RingGrid(64)
    assert g.nodes[0] == 0.0 and g.nodes[-1] < 2 * np.pi
    assert sorted(g.modes) == list(range(-32, 32))
    assert g.integrate(np.ones(64)) == pytest.approx(2 * np.pi, rel=1e-15)
    assert g.integrate(np.cos(3 * g.nodes) ** 2) == pytest.approx(np.pi, rel=1e-14)


def test_field_validation():
    g = RingGrid(64)
    with pytest.raises(ValueError):
        WaveField(g, np.ones(32))
    with pytest.raises(FrameError):
        WaveField(g, np.ones(64), frame="rotating")


def test_normalized_and_copy_are_independent():
    g = RingGrid(64)
    f = WaveField(g, 3 * np.ones(64))
    n = f.normalized()
    assert n.norm() == pytest.approx(1.0, abs=1e-15)
    c = n.copy()
    c.amplitudes[0] = 0
    assert n.amplitudes[0] != 0


def test_gauge_round_trip_preserves_everything():
    rng = np.random.default_rng(0)
    g = RingGrid(128)
    psi = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    lab = WaveField(g, psi)
    tw = gauge_transform(lab, 0.37, TWISTED)
    assert tw.frame == TWISTED and tw.alpha == 0.37
    back = gauge_transform(tw, 0.37, LAB)
    np.testing.assert_allclose(back.amplitudes, psi, atol=1e-14)
    assert tw.norm() == pytest.approx(lab.norm(), rel=1e-14)


def test_gauge_errors():
    g = RingGrid(64)
    lab = WaveField(g, np.ones(64))
    with pytest.raises(FrameError):
        gauge_transform(lab, 0.5, LAB)
    tw = gauge_transform(lab, 0.5, TWISTED)
    with pytest.raises(FrameError):
        gauge_transform(tw, 0.25, LAB)
    with pytest.raises(FrameError):
        lab.require_frame(TWISTED)
