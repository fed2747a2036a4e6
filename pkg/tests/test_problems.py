import numpy as np
import pytest

from qkrylov.errors import BadDimensions, NoStrip, ParseError
from qkrylov.problems import (alpha_max, alpha_min, extreme_w2, gauge_laplace_min, gauge_random,
                              hain_lust, hain_lust_q, hain_lust_strip, read_gauge, schwinger,
                              schwinger_gap, strip_for_alpha, write_gauge)
from qkrylov.ranges import sample_w2

from conftest import random_complex


def test_hain_lust_dense_structure():
    N = 9
    h = 1 / (N + 1)
    D = hain_lust(N).to_dense()
    L = (np.diag(2 * np.ones(N)) - np.diag(np.ones(N - 1), 1) - np.diag(np.ones(N - 1), -1)) / h**2
    np.testing.assert_allclose(D[:N, :N], L)
    np.testing.assert_allclose(D[:N, N:], np.eye(N))
    np.testing.assert_allclose(D[N:, :N], np.eye(N))
    np.testing.assert_allclose(D[N:, N:], np.diag(-3 + 2 * np.exp(2j * np.pi * h * np.arange(1, N + 1))))


@pytest.mark.parametrize("N", [7, 31, 100])
def test_laplacian_extremes(N):
    h = 1 / (N + 1)
    ev = np.linalg.eigvalsh(hain_lust(N).block_dense(0, 0).real)
    assert np.isclose(ev[0], alpha_min(h), rtol=1e-10)
    assert np.isclose(ev[-1], alpha_max(h), rtol=1e-10)


def test_alpha_min_tends_to_pi_squared():
    assert abs(alpha_min(1 / 1024) - np.pi**2) / np.pi**2 < 1e-4


def test_q_lies_on_circle():
    q = hain_lust_q(50)
    np.testing.assert_allclose(np.abs(q + 3), 2.0)


@pytest.mark.parametrize("N", [15, 31, 63])
def test_strip_is_eigenvalue_free(N):
    a, b = hain_lust_strip(N)
    ev = np.linalg.eigvals(hain_lust(N).to_dense())
    assert a < 0 < b
    assert not np.any((ev.real > a) & (ev.real < b))


def test_strip_errors():
    with pytest.raises(NoStrip):
        strip_for_alpha(1.5)
    with pytest.raises(NoStrip):
        strip_for_alpha(10.0, a=-0.6)
    assert strip_for_alpha(10.0)[1] == 0.5


def test_hain_lust_adjoint():
    A = hain_lust(12)
    r = np.random.default_rng(3)
    x, y = random_complex(r, 24), random_complex(r, 24)
    D = A.to_dense()
    for i in range(2):
        for j in range(2):
            yi = y[12 * i: 12 * i + 12]
            np.testing.assert_allclose(A.block_apply_adjoint(i, j, yi),
                                       D[12 * i:12 * i + 12, 12 * j:12 * j + 12].conj().T @ yi, atol=1e-10)
    with pytest.raises(BadDimensions):
        hain_lust(0)


@pytest.mark.parametrize("mixing", [0.0, 1.0])
def test_schwinger_block_symmetries(mixing):
    N = 5
    Q = schwinger(N, -0.2, gauge_random(N, seed=4, mixing=mixing))
    r = np.random.default_rng(1)
    n = N * N
    for _ in range(5):
        x, y = random_complex(r, n), random_complex(r, n)
        a_xy = np.vdot(y, Q.block_apply(0, 0, x))
        a_yx = np.vdot(Q.block_apply(0, 0, y), x)
        b_xy = np.vdot(y, Q.block_apply(0, 1, x))
        b_yx = np.vdot(Q.block_apply(0, 1, y), x)
        assert abs(a_xy - a_yx) < 1e-12
        assert abs(b_xy + b_yx) < 1e-12
        np.testing.assert_allclose(Q.block_apply(1, 0, x), -Q.block_apply(0, 1, x))
        np.testing.assert_allclose(Q.block_apply(1, 1, x), -Q.block_apply(0, 0, x))
    D = Q.to_dense()
    np.testing.assert_allclose(D, D.conj().T, atol=1e-13)


def test_schwinger_free_field_dispersion():
    N, m0 = 6, 0.3
    Q = schwinger(N, m0, gauge_random(N, mixing=0.0)).to_dense()
    p = 2 * np.pi * np.arange(N) / N
    px, py = np.meshgrid(p, p, indexing="ij")
    a = m0 + (1 - np.cos(px)) + (1 - np.cos(py))
    w = np.hypot(a, np.sin(px) + np.cos(py)).ravel()
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(Q)), np.sort(np.concatenate([w, -w])), atol=1e-12)


def test_cold_gauge_laplacian_min_is_zero():
    assert abs(gauge_laplace_min(gauge_random(4, mixing=0.0))) < 1e-12
    assert gauge_laplace_min(gauge_random(8, seed=2)) > 0


def test_schwinger_w2_gap():
    g = gauge_random(6, seed=5)
    a0 = gauge_laplace_min(g)
    m0 = -0.5 * a0
    pts = sample_w2(schwinger(6, m0, g), 2000, seed=1).points
    assert np.all(np.abs(pts.real) >= schwinger_gap(a0, m0) - 1e-8)


def test_schwinger_dimension_check():
    with pytest.raises(BadDimensions):
        schwinger(5, 0.0, gauge_random(4))
    with pytest.raises(BadDimensions):
        gauge_random(1)


def test_gauge_roundtrip(tmp_path):
    g = gauge_random(4, seed=9)
    path = tmp_path / "g.txt"
    write_gauge(g, path)
    h = read_gauge(path)
    np.testing.assert_array_equal(h.ux, g.ux)
    np.testing.assert_array_equal(h.uy, g.uy)
    assert h.source == "File"


@pytest.mark.parametrize("text", ["x\n", "2\n0 0 0 1.0\n", "1\n0 0 0 1 0\n",
                                  "1\n0 0 0 2 0\n0 0 1 1 0\n"])
def test_gauge_parse_errors(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ParseError):
        read_gauge(path)


@pytest.mark.parametrize("which", ["upper", "lower"])
def test_extreme_w2_is_two_points(which):
    l1, l2 = 1 + 1j, -0.5
    A = extreme_w2(5, 3, l1, l2, which=which, seed=2)
    pts = sample_w2(A, 500, seed=0).points
    d = np.minimum(np.abs(pts - l1), np.abs(pts - l2))
    assert d.max() < 1e-12
    assert np.abs(pts - l1).min() < 1e-12 and np.abs(pts - l2).min() < 1e-12


def test_extreme_w2_errors():
    with pytest.raises(BadDimensions):
        extreme_w2(1, 3, 1, 2)
    with pytest.raises(BadDimensions):
        extreme_w2(3, 3, 1, 2, offblock=np.ones((2, 3)))
    with pytest.raises(ValueError):
        extreme_w2(3, 3, 1, 2, which="diag")
