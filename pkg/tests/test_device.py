import numpy as np
import pytest
from hypothesis import given, strategies as st

from dqdscatter.device import DeviceSpec, GridSpec
from dqdscatter.units import COULOMB, KP


def test_potential_values_default_device(device):
    x = np.linspace(0.0, device.length, 2001)
    v = device.potential(x)
    assert v.min() == -device.well_depth
    assert v[0] == 0.0 and v[-1] == 0.0
    # leads are flat outside the 80 nm core
    lead = device.lead_flat
    assert np.all(v[x < lead - 1e-9] == 0.0)
    assert np.all(v[x > device.length - lead + 1e-9] == 0.0)
    # well interiors
    assert v[np.searchsorted(x, 25.0)] == -device.well_depth
    assert v[np.searchsorted(x, 75.0)] == -device.well_depth
    # central barrier back at lead level
    assert v[np.searchsorted(x, 50.0)] == 0.0


def test_potential_mirror_symmetric(device):
    x = np.linspace(0.0, device.length, 811)
    v = device.potential(x)
    assert np.max(np.abs(v - v[::-1])) == 0.0


def test_flat_device_zero_everywhere(free_device):
    x = np.linspace(0.0, free_device.length, 101)
    assert np.all(free_device.potential(x) == 0.0)


def test_coulomb_kernel_values(device):
    # frozen hand evaluations of q^2/(4 pi eps) e^{-r/lambda}/r, r^2 = dx^2 + d^2
    assert device.coulomb_kernel(np.array([0.0]))[0] == pytest.approx(
        111.51358938271817, rel=1e-12)
    assert device.coulomb_kernel(np.array([50.0]))[0] == pytest.approx(
        2.1231768833840605, rel=1e-12)
    assert COULOMB == pytest.approx(111.62515874748581, rel=1e-12)
    assert KP == pytest.approx(568.6540464904419, rel=1e-12)


def test_coulomb_kernel_even_and_decreasing(device):
    dx = np.linspace(0.0, 100.0, 301)
    w = device.coulomb_kernel(dx)
    assert np.all(np.diff(w) < 0)
    assert np.max(np.abs(w - device.coulomb_kernel(-dx))) == 0.0
    assert np.all(w > 0)


@given(st.floats(min_value=0.5, max_value=5.0),
       st.floats(min_value=100.0, max_value=5000.0))
def test_coulomb_cutoff_bounds_kernel(d, lam):
    dev = DeviceSpec(coulomb_cutoff=d, screening_length=lam)
    dx = np.linspace(-80.0, 80.0, 41)
    w = dev.coulomb_kernel(dx)
    assert np.all(w <= COULOMB / d + 1e-12)


def test_grid_axis_and_spacing(device, grid21):
    x = grid21.axis(device)
    assert x.shape == (21,)
    assert x[0] == 0.0 and x[-1] == device.length
    assert grid21.spacing(device) == pytest.approx(5.0)
    assert grid21.interior(device).shape == (19,)


def test_geometry_validation():
    with pytest.raises(ValueError):
        DeviceSpec(length=50.0)      # wells would not fit
    with pytest.raises(ValueError):
        DeviceSpec(well_depth=-1.0)
    with pytest.raises(ValueError):
        GridSpec(points=5)
