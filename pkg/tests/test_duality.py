import numpy as np
import pytest
from scipy.special import jv

from floquet_well.duality import (
    CoefficientSequence,
    compare_models,
    gauge_equivalence_defect,
    h_transform,
    map_coefficients_B_to_A,
    required_padding,
)
from floquet_well.errors import InvalidParameters, MismatchedParameters
from floquet_well.floquet import solve_floquet
from floquet_well.static import static_solve
from floquet_well.types import DriveSpec, Model, WellGeometry

E0 = 10.0 * (0.322052 - 0.000110412j)


def mk_sequence(rng, half=10):
    return CoefficientSequence(rng.normal(size=2 * half + 1) + 1j * rng.normal(size=2 * half + 1))


def mk_thick():
    # Barrier thick enough that the resonance width is ~1e-9 and the exterior coupling is negligible.
    return WellGeometry(v0=10.0, a=1.0, b=4.0)


def thick_seed(geom):
    return static_solve(geom, 3.22 - 1e-9j).energy


def test_zero_alpha_flips_odd_orders():
    seq = mk_sequence(np.random.default_rng(1))
    out = h_transform(seq, 0.0, required_padding(seq, 0.0))
    for n in range(-10, 11):
        assert abs(out.at(n) - (-1) ** n * seq.at(n)) < 1e-15


def test_delta_maps_to_bessel_row():
    out = h_transform(CoefficientSequence.delta(3), 1.5, 30)
    for l in range(-30, 31):
        assert abs(out.at(l) - jv(l, 1.5)) < 1e-14


def test_involution_on_random_sequences():
    rng = np.random.default_rng(2024)
    for alpha in (0.5, 2.0):
        worst = 0.0
        for _ in range(100):
            seq = mk_sequence(rng)
            once = h_transform(seq, alpha, required_padding(seq, alpha))
            k2 = required_padding(once, alpha)
            twice = h_transform(once, alpha, k2)
            worst = max(worst, float(np.max(np.abs(twice.values - seq.padded(k2)))))
        assert worst < 1e-10, alpha


def test_transform_is_linear():
    rng = np.random.default_rng(5)
    s1, s2 = mk_sequence(rng), mk_sequence(rng)
    combo = CoefficientSequence(2.0 * s1.values - 0.5j * s2.values)
    k = 40
    lhs = h_transform(combo, 1.2, k).values
    rhs = 2.0 * h_transform(s1, 1.2, k).values - 0.5j * h_transform(s2, 1.2, k).values
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_padding_is_enforced():
    seq = mk_sequence(np.random.default_rng(3))
    with pytest.raises(InvalidParameters):
        h_transform(seq, 2.0, required_padding(seq, 2.0) - 1)
    with pytest.raises(InvalidParameters):
        CoefficientSequence(np.zeros(4))


def test_models_agree_when_exterior_coupling_vanishes():
    geom = mk_thick()
    xs = np.linspace(0.0, geom.b, 50)
    ts = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    check = compare_models(geom, 0.5, 1.0, 10, thick_seed(geom), samples=(xs, ts))
    assert check.delta < 1e-9 * geom.v0
    assert check.passed(geom.v0)
    assert check.gauge_defect is not None
    assert check.gauge_defect < 1e-6


def test_models_close_on_reference_well():
    geom = WellGeometry(10.0, 1.0, 2.0)
    check = compare_models(geom, 0.5, 2.0, 3, E0)
    gamma = -2.0 * check.epsilon_a.imag
    assert check.delta < 0.05 * gamma


def test_coefficient_map_needs_bottom_model():
    geom = WellGeometry(10.0, 1.0, 2.0)
    root_a = solve_floquet(geom, DriveSpec(0.5, 2.0, Model.A, 2), E0)
    with pytest.raises(InvalidParameters):
        map_coefficients_B_to_A(root_a)


def test_gauge_check_rejects_mismatched_roots():
    geom = mk_thick()
    seed = thick_seed(geom)
    root_a = solve_floquet(geom, DriveSpec(0.5, 1.0, Model.A, 10), seed)
    root_b = solve_floquet(geom, DriveSpec(0.5, 1.0, Model.B, 9), root_a.epsilon)
    with pytest.raises(MismatchedParameters):
        gauge_equivalence_defect(root_a, root_b, [0.5], [0.0])
    with pytest.raises(MismatchedParameters):
        gauge_equivalence_defect(root_a, root_a, [0.5], [0.0])


def test_gauge_check_stays_inside_barrier():
    geom = mk_thick()
    seed = thick_seed(geom)
    root_a = solve_floquet(geom, DriveSpec(0.5, 1.0, Model.A, 10), seed)
    root_b = solve_floquet(geom, DriveSpec(0.5, 1.0, Model.B, 10), root_a.epsilon)
    with pytest.raises(InvalidParameters):
        gauge_equivalence_defect(root_a, root_b, [geom.b + 0.1], [0.0])
    mapped = map_coefficients_B_to_A(root_b)
    assert np.max(np.abs(mapped.well - root_a.coefficients.well)) < 1e-6


def mk_deep():
    # Side-bands up to 4*omega stay below a v0=40 barrier at omega=7.9.
    return WellGeometry(v0=40.0, a=1.0, b=3.0)


def test_models_agree_across_amplitudes_and_frequencies():
    geom = mk_deep()
    seed = static_solve(geom, 3.98 - 1e-12j).energy
    sidebands = {0.5: 12, 2.0: 8, 7.9: 6}
    for v1 in (0.3, 0.5, 1.0):
        for omega, n in sidebands.items():
            check = compare_models(geom, v1, omega, n, seed)
            assert check.passed(geom.v0), (v1, omega, check.delta)


def test_gauge_defect_shrinks_with_sidebands():
    geom = mk_thick()
    seed = thick_seed(geom)
    xs = np.linspace(0.0, geom.b, 50)
    ts = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    defects = {}
    for n in (3, 10):
        root_a = solve_floquet(geom, DriveSpec(0.5, 1.0, Model.A, n), seed)
        root_b = solve_floquet(geom, DriveSpec(0.5, 1.0, Model.B, n), root_a.epsilon)
        defects[n] = gauge_equivalence_defect(root_a, root_b, xs, ts, epsilon_tolerance=1e-4 * geom.v0)
    # J_4(0.5) ~ 1.6e-4 is the first dropped order at n=3
    assert defects[10] < 1e-6
    assert defects[10] < defects[3] < 1e-2
