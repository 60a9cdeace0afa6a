import math

import numpy as np
import pytest

from floquet_well.errors import InvalidParameters, PoorFit
from floquet_well.floquet import solve_floquet
from floquet_well.tdse import (
    CrankNicolson,
    GridSpec,
    SurvivalSeries,
    fit_decay,
    fit_decay_rate,
    initial_state,
    propagate,
    well_potential,
)
from floquet_well.types import DriveSpec, Model, WellGeometry

E0 = 10.0 * (0.322052 - 0.000110412j)
GAMMA0 = 2.0 * 0.00110412  # -2 Im(E0) in a.u.


def mk_geom():
    return WellGeometry(v0=10.0, a=1.0, b=2.0)


def mk_grid():
    return GridSpec(dx=0.01, dt=0.02, x_max=25.0, cap_start=15.0, cap_strength=2.0)


def gaussian(x, x0, width, k):
    psi = np.exp(-((x - x0) ** 2) / (2.0 * width ** 2) + 1j * k * x)
    psi[0] = psi[-1] = 0.0
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * (x[1] - x[0]))


def test_free_steps_are_unitary():
    x = np.linspace(0.0, 20.0, 1001)
    stepper = CrankNicolson(x, 0.01, lambda t: np.zeros_like(x))
    psi = gaussian(x, 10.0, 1.0, 2.0)
    for i in range(200):
        psi = stepper.step(psi, i * 0.01)
    assert abs(stepper.norm(psi) - 1.0) < 1e-10


def test_absorber_removes_outgoing_packet():
    grid = GridSpec(dx=0.02, dt=0.01, x_max=40.0, cap_start=20.0, cap_strength=2.0)
    x = grid.points()
    stepper = CrankNicolson(x, grid.dt, lambda t: np.zeros_like(x), absorber=grid.absorber(), static=True)
    psi = gaussian(x, 10.0, 1.0, 3.0)
    for i in range(2000):
        psi = stepper.step(psi, i * grid.dt)
    assert stepper.norm(psi) < 0.05


def test_grid_validation():
    with pytest.raises(InvalidParameters):
        GridSpec(dx=0.0)
    with pytest.raises(InvalidParameters):
        GridSpec(x_max=10.0, cap_start=12.0)
    with pytest.raises(InvalidParameters):
        GridSpec(cap_start=1.5).validate(mk_geom())
    absorber = mk_grid().absorber()
    assert absorber[0] == 0.0 and abs(absorber[-1] - 2.0) < 1e-12


def test_potential_models():
    g = mk_geom()
    x = np.array([0.5, 1.5, 3.0])
    va = well_potential(g, DriveSpec(1.0, 2.0, Model.A, 2), x)(0.0)
    vb = well_potential(g, DriveSpec(1.0, 2.0, Model.B, 2), x)(0.0)
    assert list(va) == [0.0, 11.0, 0.0]
    assert list(vb) == [1.0, 10.0, 0.0]
    assert list(well_potential(g, None, x)(3.0)) == [0.0, 10.0, 0.0]


def test_initial_state_shape():
    g = mk_geom()
    grid = mk_grid()
    x = grid.points()
    psi = initial_state(g, grid, E0.real)
    assert psi[0] == 0.0
    assert np.all(psi[x > g.b] == 0.0)
    assert abs(np.sum(np.abs(psi) ** 2) * grid.dx - 1.0) < 1e-12
    with pytest.raises(InvalidParameters):
        initial_state(g, grid, 12.0)


def test_propagate_rejects_bad_initial_state():
    g = mk_geom()
    grid = mk_grid()
    with pytest.raises(InvalidParameters):
        propagate(g, None, grid, 2.0 * initial_state(g, grid, E0.real), 1.0)
    with pytest.raises(InvalidParameters):
        propagate(g, None, grid, np.zeros(10, dtype=complex), 1.0)


def test_fit_recovers_exponential():
    t = np.linspace(0.0, 100.0, 1001)
    fit = fit_decay(t, np.exp(-0.01 * t))
    assert abs(fit.rate - 0.01) < 1e-10
    assert fit.r_squared > 0.999999


def test_fit_averages_whole_periods():
    t = np.linspace(0.0, 200.0, 20001)
    s = np.exp(-0.01 * t) * (1.0 + 0.1 * np.sin(2.0 * t))
    fit = fit_decay(t, s, period=math.pi)
    assert abs(fit.rate - 0.01) < 1e-4
    series = SurvivalSeries(t, s, s, period=math.pi)
    assert abs(fit_decay_rate(series) - fit.rate) < 1e-15


def test_fit_window():
    t = np.linspace(0.0, 100.0, 1001)
    s = np.where(t < 20.0, 1.0, np.exp(-0.02 * (t - 20.0)))
    assert abs(fit_decay(t, s, t_window=(30.0, 100.0)).rate - 0.02) < 1e-10


def test_poor_fit():
    t = np.linspace(0.0, 100.0, 1001)
    with pytest.raises(PoorFit) as info:
        fit_decay(t, 1.0 + 0.5 * np.sin(0.3 * t))
    assert info.value.r_squared < 0.99
    with pytest.raises(InvalidParameters):
        fit_decay([0.0, 1.0], [1.0, 0.5])


def test_static_decay_rate_matches_resonance_width():
    g = mk_geom()
    grid = mk_grid()
    psi0 = initial_state(g, grid, E0.real)
    series = propagate(g, None, grid, psi0, 1400.0, record_every=50)
    assert series.period is None
    rate = fit_decay_rate(series)
    assert abs(rate - GAMMA0) < 0.10 * GAMMA0
    assert series.norm[-1] <= series.norm[0]


def test_driven_decay_rate_matches_floquet():
    g = mk_geom()
    drive = DriveSpec(1.0, 2.0, Model.A, 2)
    root = solve_floquet(g, drive, E0)
    expected = -2.0 * root.epsilon.imag
    grid = mk_grid()
    series = propagate(g, drive, grid, initial_state(g, grid, E0.real), 1400.0, record_every=5)
    assert series.period == pytest.approx(math.pi)
    rate = fit_decay_rate(series)
    assert abs(rate - expected) < 0.15 * expected
