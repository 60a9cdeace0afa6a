import numpy as np
import pytest

from floquet_well.errors import InvalidParameters, PoleCaptured
from floquet_well.rootfind import ContinuationConfig, RootConfig, continue_branch, find_root, solve_root
from floquet_well.spectra import omega_family
from floquet_well.static import static_residual, static_solve
from floquet_well.types import BranchStatus, Model, SweepParameter, WellGeometry

E0 = 10.0 * (0.322052 - 0.000110412j)


def test_quadratic_complex_root():
    z = find_root(lambda z: z * z + 1.0, 0.5 + 0.5j)
    assert abs(z - 1j) < 1e-12


def test_static_residual_root():
    g = WellGeometry(10.0, 1.0, 2.0)
    z = find_root(lambda e: static_residual(g, e), 3.2 - 0.001j, RootConfig.for_geometry(g))
    assert abs(z / 10.0 - (0.322052 - 0.000110412j)) < 5e-6


def test_triple_root():
    result = solve_root(lambda z: (z - 1.0) ** 3, 1.2)
    assert abs(result.root - 1.0) < 1e-4


def test_pole_at_guess():
    with pytest.raises(PoleCaptured):
        solve_root(lambda z: 1.0 / (z - 1.0), 1.0)


def test_root_config_validation():
    with pytest.raises(InvalidParameters):
        RootConfig(max_iter=0)
    with pytest.raises(InvalidParameters):
        RootConfig(residual_tol=-1.0)
    g = WellGeometry(10.0, 1.0, 2.0)
    assert RootConfig.for_geometry(g).bracket_scale == pytest.approx(1e-3)
    assert ContinuationConfig.for_geometry(g).jump_threshold == pytest.approx(0.5)


def mk_family(jump_at=None):
    def at(p):
        target = complex(p, -0.01)
        if jump_at is not None and p >= jump_at:
            target += 10.0
        return lambda z: z - target
    return at


def test_continuation_follows_root():
    grid = [0.1 * i for i in range(11)]
    branch = continue_branch(mk_family(), 0.0, grid, parameter_name=SweepParameter.V1, branch_id=4)
    assert branch.status is BranchStatus.COMPLETE
    assert branch.branch_id == 4
    assert len(branch.points) == 11
    for p in branch.points:
        assert abs(p.epsilon - complex(p.param, -0.01)) < 1e-12


def test_continuation_descending_grid():
    grid = [1.0 - 0.1 * i for i in range(11)]
    branch = continue_branch(mk_family(), 1.0, grid)
    assert branch.status is BranchStatus.COMPLETE
    assert branch.params()[0] == 1.0


def test_continuation_loses_branch_on_jump():
    grid = [0.1 * i for i in range(11)]
    branch = continue_branch(mk_family(jump_at=0.5), 0.0, grid, continuation=ContinuationConfig(jump_threshold=0.5))
    assert branch.status is BranchStatus.LOST
    assert branch.failures
    assert all(p.param < 0.5 for p in branch.points)
    assert branch.refined > 0


def test_continuation_rejects_unordered_grid():
    with pytest.raises(InvalidParameters):
        continue_branch(mk_family(), 0.0, [0.0, 0.2, 0.1])


def test_continuation_checks_jump_from_seed():
    branch = continue_branch(mk_family(jump_at=0.0), 0.0, [0.0, 0.1, 0.2], continuation=ContinuationConfig(jump_threshold=0.5))
    assert branch.status is BranchStatus.LOST
    assert branch.points == ()
    assert "seed" in branch.failures[0]


def mk_reference():
    g = WellGeometry(10.0, 1.0, 2.0)
    return g, RootConfig.for_geometry(g)


def test_reverse_grid_retraces_floquet_branch():
    g, cfg = mk_reference()
    family = omega_family(g, Model.A, 0.5, 2)
    grid = [1.8 + 0.05 * i for i in range(9)]
    forward = continue_branch(family, static_solve(g, E0).energy, grid, cfg)
    backward = continue_branch(family, forward.points[-1].epsilon, grid[::-1], cfg)
    assert forward.status is backward.status is BranchStatus.COMPLETE
    there = dict(zip(forward.params(), forward.epsilons()))
    for p, eps in zip(backward.params(), backward.epsilons()):
        assert abs(eps - there[p]) < 1e-9, p


def test_step_halving_near_level_spacing():
    g, cfg = mk_reference()
    family = omega_family(g, Model.A, 1.0, 2)
    fine_grid = list(7.4 + np.arange(129) / 128.0)
    fine = continue_branch(family, E0, fine_grid, cfg)
    assert fine.status is BranchStatus.COMPLETE
    eps = dict(zip(fine.params(), fine.epsilons()))
    coarse_grid = [fine_grid[0], fine_grid[64], fine_grid[128]]
    fine_jump = float(np.max(np.abs(np.diff(fine.epsilons()))))
    coarse_jump = max(abs(eps[coarse_grid[1]] - eps[coarse_grid[0]]), abs(eps[coarse_grid[2]] - eps[coarse_grid[1]]))
    assert coarse_jump > 4.0 * fine_jump

    threshold = float(np.sqrt(coarse_jump * fine_jump))
    coarse = continue_branch(
        family, eps[coarse_grid[0]], coarse_grid, cfg,
        continuation=ContinuationConfig(jump_threshold=threshold, max_halvings=6),
    )
    assert coarse.status is BranchStatus.COMPLETE
    assert coarse.refined > 0
    assert len(coarse.points) > len(coarse_grid)
    got = dict(zip(coarse.params(), coarse.epsilons()))
    for p in coarse_grid:
        assert abs(got[p] - eps[p]) < 1e-9, p
