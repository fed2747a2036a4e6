import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkrylov.blockops import BlockOperator
from qkrylov.errors import DegenerateBlock, EmptySample
from qkrylov.problems import extreme_w2, hain_lust, hain_lust_strip
from qkrylov.ranges import (CHUNK, RangeSample, eig2x2, enclosure_witness, gap_estimate,
                            polish_w2, sample_w, sample_w2, w2_matrices)

from conftest import random_complex

finite = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)


def in_numerical_range(M, z, tol, angles=720):
    """Support-function test: ``Re(e^{-it} z) <= lambda_max(herm(e^{-it} M))`` for all sampled t."""
    for t in np.linspace(0, 2 * np.pi, angles, endpoint=False):
        R = np.exp(-1j * t) * M
        top = np.linalg.eigvalsh(0.5 * (R + R.conj().T))[-1]
        if (np.exp(-1j * t) * z).real > top + tol:
            return False
    return True


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite)
def test_eig2x2_matches_dense(a, b, c, d):
    l1, l2 = eig2x2(a, b, c, d)
    M = np.array([[a, b], [c, d]])
    ref = np.linalg.eigvals(M)
    scale = 1 + np.abs(M).max()
    # as multisets
    err = min(abs(l1 - ref[0]) + abs(l2 - ref[1]), abs(l1 - ref[1]) + abs(l2 - ref[0]))
    assert err <= 1e-6 * scale
    assert abs(l1 + l2 - (a + d)) <= 1e-9 * scale
    assert abs(l1 * l2 - (a * d - b * c)) <= 1e-8 * scale**2


def test_eig2x2_triangular_is_exact():
    assert eig2x2(2.0, 3.0, 0.0, 5.0) == (2 + 0j, 5 + 0j)
    l1, l2 = eig2x2(np.array([1.0, 4.0]), np.zeros(2), np.ones(2), np.array([7.0, -1.0]))
    np.testing.assert_array_equal(l1, [1, 4])
    np.testing.assert_array_equal(l2, [7, -1])


def test_eig2x2_no_cancellation():
    # roots 1e8 and 1e-8: the naive formula loses the small one entirely
    l1, l2 = eig2x2(1e8, 1.0, 1.0, 0.0)
    small = min(l1, l2, key=abs)
    assert abs(small - (-1e-8)) <= 1e-20


def test_sample_w_hermitian_interval(rng):
    M = random_complex(rng, 6, 6)
    H = M + M.conj().T
    ev = np.linalg.eigvalsh(H)
    s = sample_w(H, 2000, seed=4)
    assert isinstance(s, RangeSample) and s.kind == "w" and s.points.size == 2000
    assert np.abs(s.points.imag).max() < 1e-12
    assert s.points.real.min() >= ev[0] - 1e-12 and s.points.real.max() <= ev[-1] + 1e-12


def test_sampling_is_deterministic_and_chunked():
    A = hain_lust(15)
    a = sample_w2(A, CHUNK + 37, seed=9)
    b = sample_w2(A, CHUNK + 37, seed=9)
    np.testing.assert_array_equal(a.points, b.points)
    head = sample_w2(A, CHUNK, seed=9)
    np.testing.assert_array_equal(a.points[: 2 * CHUNK], head.points)
    assert not np.array_equal(sample_w2(A, 10, seed=10).points, a.points[:20])


def test_sample_counts_validate():
    A = hain_lust(7)
    with pytest.raises(ValueError):
        sample_w2(A, 0)
    with pytest.raises(ValueError):
        sample_w(A, 0)
    with pytest.raises(ValueError):
        sample_w2(A, 5, polish=1, target="middle")


def test_w2_extreme_points():
    A = BlockOperator((3, 4), 2 * np.eye(3), None, None, 5 * np.eye(4))
    pts = sample_w2(A, 300, seed=1).points
    np.testing.assert_allclose(np.sort_complex(pts.reshape(-1, 2)).real, np.tile([2.0, 5.0], (300, 1)))
    assert np.abs(pts.imag).max() < 1e-14
    E = extreme_w2(3, 4, 2.0, 5.0, which="lower", seed=3)
    pts = sample_w2(E, 300, seed=1).points
    assert np.all(np.isclose(pts, 2.0) | np.isclose(pts, 5.0))


def test_w2_identity():
    A = BlockOperator.from_matrix(np.eye(5), 2)
    pts = sample_w2(A, 100).points
    np.testing.assert_allclose(pts, np.ones(200), atol=1e-14)


def test_hain_lust_strip_is_avoided():
    A = hain_lust(31)
    a, b = hain_lust_strip(31)
    pts = sample_w2(A, 10_000, seed=0).points
    assert not np.any((pts.real > a) & (pts.real < b))


@pytest.mark.parametrize("seed", range(4))
def test_w2_inside_w(seed):
    r = np.random.default_rng(seed)
    n1, n2 = 3 + seed, 5
    M = random_complex(r, n1 + n2, n1 + n2)
    A = BlockOperator.from_matrix(M, n1)
    pts = sample_w2(A, 200, seed=seed).points
    assert all(in_numerical_range(M, z, 1e-6) for z in pts[:120])


@pytest.mark.parametrize("seed", range(3))
def test_projection_enclosure_by_lifting(seed):
    r = np.random.default_rng(seed)
    n1, n2, m1, m2 = 9, 7, 3, 2
    M = random_complex(r, n1 + n2, n1 + n2)
    A = BlockOperator.from_matrix(M, n1)
    V1 = np.linalg.qr(random_complex(r, n1, m1))[0]
    V2 = np.linalg.qr(random_complex(r, n2, m2))[0]
    Vx = np.block([[V1, np.zeros((n1, m2))], [np.zeros((n2, m1)), V2]])
    B = BlockOperator.from_matrix(Vx.conj().T @ M @ Vx, m1)
    Y1 = random_complex(r, m1, 50)
    Y2 = random_complex(r, m2, 50)
    Y1 /= np.linalg.norm(Y1, axis=0)
    Y2 /= np.linalg.norm(Y2, axis=0)
    small = np.stack(eig2x2(*w2_matrices(B, Y1, Y2)))
    lifted = np.stack(eig2x2(*w2_matrices(A, V1 @ Y1, V2 @ Y2)))
    np.testing.assert_allclose(np.sort_complex(small.T), np.sort_complex(lifted.T), atol=1e-10)


def test_gap_estimate():
    pts = np.array([-2.0, -1.5 + 0.1j, 1.0, 3.0 + 1j])
    g = gap_estimate(pts)
    assert g.delta == 1.0 and g.components_hint == 2
    assert np.isclose(g.threshold, 0.5)
    assert gap_estimate(np.array([-2.0, -0.1, 0.2, 3.0])).components_hint == 1
    assert gap_estimate(np.array([1.0, 2.0])).components_hint == 1
    with pytest.raises(EmptySample):
        gap_estimate(np.array([]))


@settings(max_examples=30, deadline=None)
@given(st.lists(finite, min_size=1, max_size=40))
def test_gap_delta_is_a_lower_bound(points):
    pts = np.array(points, dtype=complex)
    g = gap_estimate(RangeSample(pts, len(points), 0))
    assert np.all(g.delta <= np.abs(pts))
    assert g.components_hint in (1, 2)


def test_hain_lust_has_two_components():
    g = gap_estimate(sample_w2(hain_lust(31), 4000, seed=2))
    assert g.components_hint == 2
    assert g.delta > 0.5


@pytest.mark.parametrize("seed", range(5))
def test_enclosure_witness_contains_eigenvalue(seed):
    r = np.random.default_rng(seed)
    M = random_complex(r, 8, 8)
    A = BlockOperator.from_matrix(M, 3)
    lam, V = np.linalg.eig(M)
    for j in range(8):
        W = enclosure_witness(A, lam[j], V[:, j])
        assert np.min(np.abs(np.linalg.eigvals(W) - lam[j])) <= 1e-9 * (1 + abs(lam[j]))


def test_enclosure_witness_degenerate():
    A = BlockOperator.from_matrix(np.eye(4), 2)
    with pytest.raises(DegenerateBlock):
        enclosure_witness(A, 1.0, np.array([1.0, 0.0, 0.0, 0.0]))


def test_polished_points_are_genuine():
    A = hain_lust(15)
    r = np.random.default_rng(0)
    x1 = random_complex(r, 15)
    x2 = random_complex(r, 15)
    u1, u2 = polish_w2(A, x1 / np.linalg.norm(x1), x2 / np.linalg.norm(x2), maxiter=300)
    assert np.isclose(np.linalg.norm(u1), 1) and np.isclose(np.linalg.norm(u2), 1)
    # the distance of W^2 to 0 is the chord 3 - 2 cos(2 pi h) of W(Q) (x1 orthogonal to x2)
    chord = 3 - 2 * np.cos(2 * np.pi / 16)
    mu = min(np.abs(eig2x2(*(z[0] for z in w2_matrices(A, u1[:, None], u2[:, None])))))
    assert chord - 1e-12 <= mu <= chord + 1e-8


def test_polish_tightens_distance_and_radius():
    A = hain_lust(31)
    plain = gap_estimate(sample_w2(A, 2000, seed=5)).delta
    tight = gap_estimate(sample_w2(A, 2000, seed=5, polish=4)).delta
    chord = 3 - 2 * np.cos(2 * np.pi / 32)
    assert chord - 1e-12 <= tight <= chord + 1e-8 < plain
    r = np.random.default_rng(1)
    M = random_complex(r, 6, 6)
    t = np.linspace(0, 2 * np.pi, 4000)
    radius = max(np.linalg.eigvalsh(0.5 * (np.exp(1j * a) * M + np.exp(-1j * a) * M.conj().T))[-1]
                 for a in t)
    rho = np.abs(sample_w(M, 2000, seed=3, polish=4).points).max()
    assert radius - 1e-5 <= rho <= radius * (1 + 1e-9) + 1e-6
