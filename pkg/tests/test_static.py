import math

import pytest

from floquet_well.errors import InvalidParameters
from floquet_well.static import (
    StaticResonance,
    closed_well_levels,
    scan_static,
    static_residual,
    static_seeds,
    static_solve,
)
from floquet_well.types import WellGeometry

E0_OVER_V0 = 0.322052 - 0.000110412j
E1_OVER_V0 = 1.11205 - 0.025062j


def mk_geom(b=2.0):
    return WellGeometry(v0=10.0, a=1.0, b=b)


def test_residual_small_at_printed_roots():
    g = mk_geom()
    assert abs(static_residual(g, 10.0 * E0_OVER_V0)) < 1e-4
    assert abs(static_residual(g, 10.0 * E1_OVER_V0)) < 1e-3


def test_residual_rejects_zero_energy():
    with pytest.raises(InvalidParameters):
        static_residual(mk_geom(), 0.0)


def test_thick_barrier_limit():
    g = mk_geom(b=22.0)
    e = 3.0
    k, q = math.sqrt(2.0 * e), math.sqrt(2.0 * (10.0 - e))
    closed = (q / k) * math.tan(k * 1.0) + 1.0
    assert abs(static_residual(g, e) - closed) < 1e-12


def test_solve_first_resonance():
    res = static_solve(mk_geom(), 3.2 - 0.001j)
    e = res.scaled(10.0)
    assert abs(e.real - E0_OVER_V0.real) < 5e-6
    assert abs(e.imag - E0_OVER_V0.imag) < 5e-6
    assert abs(math.log10(-e.imag) - (-3.95698)) < 1e-4
    assert abs(res.width + 2.0 * res.energy.imag) < 1e-15


def test_solve_second_resonance():
    e = static_solve(mk_geom(), 11.1 - 0.3j).scaled(10.0)
    assert abs(e.real - E1_OVER_V0.real) < 5e-5
    assert abs(e.imag - E1_OVER_V0.imag) < 5e-5


def test_resonance_width_invariants():
    with pytest.raises(InvalidParameters):
        StaticResonance(energy=3.0 - 0.1j, width=-0.2, residual=0.0)
    with pytest.raises(InvalidParameters):
        StaticResonance(energy=3.0 - 0.1j, width=0.5, residual=0.0)
    r = StaticResonance.from_energy(3.0 - 0.1j, 1e-13)
    assert abs(r.width - 0.2) < 1e-15


def test_closed_well_levels_seed_the_doublet():
    levels = closed_well_levels(mk_geom(), 12.0)
    assert len(levels) >= 2
    assert abs(levels[0] - 10.0 * E0_OVER_V0.real) < 0.1
    assert levels == sorted(levels)
    with pytest.raises(InvalidParameters):
        closed_well_levels(mk_geom(), 0.0)


def test_scan_finds_doublet():
    found = scan_static(mk_geom())
    assert len(found) >= 2
    first, second = found[0].scaled(10.0), found[1].scaled(10.0)
    assert abs(first.real - E0_OVER_V0.real) < 5e-6
    assert abs(first.imag - E0_OVER_V0.imag) < 5e-6
    assert abs(second.real - E1_OVER_V0.real) < 5e-5
    assert abs(second.imag - E1_OVER_V0.imag) < 5e-5
    assert all(r.energy.imag <= 0.0 for r in found)
    assert [r.energy.real for r in found] == sorted(r.energy.real for r in found)


def test_static_seeds():
    seeds = static_seeds(mk_geom(), 2)
    assert len(seeds) == 2
    assert seeds[0].real < seeds[1].real
