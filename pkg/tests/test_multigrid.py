import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkrylov import multigrid
from qkrylov.blockops import BlockVector
from qkrylov.errors import BadLevels, MaxIterExceeded
from qkrylov.multigrid import (GridHierarchy, SmootherKind, SmootherSpec, mg_solve, prolongate,
                               restrict, smooth, vcycle)

from conftest import random_complex

QFOM1 = SmootherSpec("qfom", 1)


def test_prolongate_stencil():
    out = prolongate(np.array([1.0, 1.0]), 1, 3)
    np.testing.assert_allclose(out, [0.5, 1.0, 0.5, 0.5, 1.0, 0.5])
    np.testing.assert_array_equal(prolongate(np.zeros(14), 7, 15), np.zeros(30))


def test_prolongate_interpolates_linear_functions():
    Nc, Nf = 7, 15
    xc = np.arange(1, Nc + 1) / (Nc + 1)
    xf = np.arange(1, Nf + 1) / (Nf + 1)
    out = prolongate(BlockVector(xc, 2 * xc), Nc, Nf)
    # exact away from the right end, where the boundary value is zero
    np.testing.assert_allclose(out.x1[:-1], xf[:-1])
    np.testing.assert_allclose(out.x2[:-1], 2 * xf[:-1])
    assert np.isclose(out.x1[-1], xc[-1] / 2)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), levels=st.sampled_from([(3, 1), (15, 7), (63, 31)]))
def test_restrict_is_adjoint(seed, levels):
    Nf, Nc = levels
    r = np.random.default_rng(seed)
    u, v = random_complex(r, 2 * Nc), random_complex(r, 2 * Nf)
    assert np.isclose(np.vdot(v, prolongate(u, Nc, Nf)), np.vdot(restrict(v, Nf, Nc), u), rtol=1e-12)


def test_restriction_weights():
    e = np.zeros(14)
    e[2] = 1.0
    assert np.isclose(restrict(prolongate(e, 7, 15), 15, 7)[2], 1.5)


def test_transfer_level_checks():
    with pytest.raises(BadLevels):
        prolongate(np.zeros(14), 7, 16)
    with pytest.raises(BadLevels):
        restrict(np.zeros(10), 15, 7)
    for N in (6, 8, 3):
        with pytest.raises(BadLevels):
            GridHierarchy.build(N)


def test_hierarchy_levels():
    h = GridHierarchy.build(63)
    assert [n for n, _ in h.levels] == [63, 31, 15, 7]
    assert h.N == 63 and h.depth == 4 and h.operator(3).n == 14
    with pytest.raises(BadLevels):
        vcycle(h, 4, np.zeros(14), np.zeros(14), QFOM1)


def test_smoother_spec():
    assert SmootherSpec("gmres", 5).kind is SmootherKind.GMRES
    assert SmootherSpec(SmootherKind.QFOM).label() == "QFOM nu=1"
    with pytest.raises(ValueError):
        SmootherSpec("qfom", 0)
    with pytest.raises(ValueError):
        SmootherSpec("jacobi", 1)


def test_coarsest_level_is_exact():
    h = GridHierarchy.build(7)
    A = h.operator()
    b = random_complex(np.random.default_rng(0), 14)
    x = vcycle(h, 0, b, np.zeros(14), QFOM1)
    assert np.linalg.norm(b - A.matvec(x)) < 1e-12 * np.linalg.norm(b)


def test_zero_rhs():
    h = GridHierarchy.build(31)
    x, rep = mg_solve(h, np.zeros(62), QFOM1)
    assert rep.converged and not np.any(x)
    assert not np.any(smooth(h.operator(), np.zeros(62), np.zeros(62), QFOM1, None))


def test_blockvector_io():
    h = GridHierarchy.build(15)
    b = BlockVector(np.ones(15), np.ones(15))
    assert isinstance(vcycle(h, 0, b, BlockVector(np.zeros(15), np.zeros(15)), QFOM1), BlockVector)
    x, _ = mg_solve(h, b, QFOM1, tol=1e-10)
    assert isinstance(x, BlockVector)


@pytest.mark.parametrize("N", [63, 255])
def test_qfom_mg_converges_with_contraction(N):
    h = GridHierarchy.build(N)
    b = h.operator().matvec(np.ones(2 * N, dtype=complex))
    x, rep = mg_solve(h, b, QFOM1, tol=1e-12)
    hist = np.array(rep.relres_history)
    assert rep.converged and rep.restarts == len(hist) <= 60
    # decrease from the second cycle on
    assert np.all(np.diff(hist[1:]) < 0)
    tail = hist[-8:]
    rate = (tail[-1] / tail[0]) ** (1 / 7)
    assert rate < 0.8


def test_deterministic():
    h = GridHierarchy.build(31)
    b = h.operator().matvec(np.ones(62, dtype=complex))
    x1, r1 = mg_solve(h, b, QFOM1, seed=3)
    x2, r2 = mg_solve(h, b, QFOM1, seed=3)
    np.testing.assert_array_equal(x1, x2)


def test_gmres_smoother_fails_where_qfom_succeeds():
    h = GridHierarchy.build(1023)
    b = h.operator().matvec(np.ones(2046, dtype=complex))
    _, rep = mg_solve(h, b, QFOM1, tol=1e-12, maxiter=60)
    with pytest.raises(MaxIterExceeded) as err:
        mg_solve(h, b, SmootherSpec("gmres", 1), tol=1e-12, maxiter=4 * rep.restarts)
    assert err.value.report.final_relres > 1e-10


def test_coarse_scaling_is_needed(monkeypatch):
    h = GridHierarchy.build(63)
    b = h.operator().matvec(np.ones(126, dtype=complex))
    monkeypatch.setattr(multigrid, "COARSE_SCALE", 1.0)
    with pytest.raises(MaxIterExceeded) as err:
        mg_solve(h, b, QFOM1, tol=1e-12, maxiter=20)
    assert err.value.report.final_relres > 1.0


def test_bad_tol():
    with pytest.raises(ValueError):
        mg_solve(GridHierarchy.build(7), np.ones(14), QFOM1, tol=0)


def test_power_iteration_contraction():
    # the smoother is positively homogeneous in the error, so normalised
    # power iteration on the b = 0 problem estimates the asymptotic rate
    h = GridHierarchy.build(63)
    r = np.random.default_rng(0)
    e = random_complex(r, 126)
    e /= np.linalg.norm(e)
    rng = np.random.default_rng(1)
    for _ in range(40):
        e = vcycle(h, 0, np.zeros(126), e, QFOM1, rng)
        q = np.linalg.norm(e)
        e /= q
    assert 0.5 < q < 0.75
