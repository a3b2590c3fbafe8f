import numpy as np
import pytest

from pepsqc.tensor import (
    complete_isometry,
    contract,
    is_isometry,
    is_unitary,
    svd_split,
    unitarity_defect,
)


def random_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_isometry(rng, rows, cols):
    q, _ = np.linalg.qr(random_complex(rng, (rows, cols)))
    return q[:, :cols]


class TestContract:
    def test_identity_contraction(self):
        v = np.array([2.0, -1.0j])
        out = contract(np.eye(2), v, [(1, 0)])
        assert np.allclose(out, v)

    def test_matrix_multiply_case(self):
        rng = np.random.default_rng(1)
        a = random_complex(rng, (2, 3))
        b = random_complex(rng, (3, 4))
        out = contract(a, b, [(1, 0)])
        assert out.shape == (2, 4)
        assert np.allclose(out, a @ b)

    def test_full_contraction_matches_brute_force(self):
        rng = np.random.default_rng(2)
        a = random_complex(rng, (2, 2, 2))
        b = random_complex(rng, (2, 2, 2))
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        # independent oracle: triple loop
        expected = 0j
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    expected += a[i, j, k] * b[i, j, k]
        out = contract(a, b, [(0, 0), (1, 1), (2, 2)])
        assert out.shape == ()
        assert abs(out - expected) < 1e-12

    def test_result_axis_order(self):
        rng = np.random.default_rng(3)
        a = random_complex(rng, (2, 5, 3))
        b = random_complex(rng, (3, 4, 5))
        out = contract(a, b, [(2, 0), (1, 2)])
        assert out.shape == (2, 4)
        assert np.allclose(out, np.einsum("ikj,jlk->il", a, b))

    def test_bilinearity(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = random_complex(rng, (3, 2, 4))
            b = random_complex(rng, (2, 5))
            alpha = complex(rng.normal(), rng.normal())
            lhs = contract(alpha * a, b, [(1, 0)])
            rhs = alpha * contract(a, b, [(1, 0)])
            assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(rhs)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            contract(np.zeros((2, 3)), np.zeros((4, 2)), [(1, 0)])

    def test_repeated_axis(self):
        with pytest.raises(ValueError, match="twice"):
            contract(np.zeros((2, 2)), np.zeros((2, 2)), [(0, 0), (0, 1)])


class TestSvdSplit:
    def test_rank_one_product_tensor(self):
        rng = np.random.default_rng(5)
        u = random_complex(rng, 4)
        v = random_complex(rng, 6)
        t = np.outer(u, v).reshape(2, 2, 2, 3)
        tu, s, tv = svd_split(t, [0, 1], max_rank=1)
        assert s.shape == (1,)
        rebuilt = np.einsum("ijr,r,rkl->ijkl", tu, s, tv)
        assert np.max(np.abs(rebuilt - t)) < 1e-12

    def test_unitary_unfolding_rank_four(self):
        # a 4x16 unfolding of an 8x8 unitary has rank exactly 4
        rng = np.random.default_rng(6)
        q, _ = np.linalg.qr(random_complex(rng, (8, 8)))
        t = q.reshape(2, 2, 2, 2, 2, 2)
        tu, s, tv = svd_split(t, [0, 1], max_rank=4)
        assert s.shape == (4,)
        assert np.all(s > 1e-8)
        rebuilt = np.einsum("ijr,r,rklmn->ijklmn", tu, s, tv)
        assert np.max(np.abs(rebuilt - t)) < 1e-10

    def test_zero_tensor(self):
        _, s, _ = svd_split(np.zeros((2, 2, 2)), [0], max_rank=2)
        assert np.allclose(s, 0.0)

    def test_reconstruction_error_equals_discarded_weight(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            t = random_complex(rng, (4, 3, 5))
            tu, s, tv = svd_split(t, [0], max_rank=2)
            rebuilt = np.einsum("ir,r,rjk->ijk", tu, s, tv)
            err = np.linalg.norm(rebuilt - t)
            full_s = np.linalg.svd(t.reshape(4, 15), compute_uv=False)
            assert abs(err - np.linalg.norm(full_s[2:])) < 1e-10

    def test_left_axes_validation(self):
        t = np.zeros((2, 2))
        with pytest.raises(ValueError):
            svd_split(t, [], max_rank=1)
        with pytest.raises(ValueError):
            svd_split(t, [0, 1], max_rank=1)


class TestCompleteIsometry:
    def test_e0_column(self):
        v = np.array([[1.0], [0.0]], dtype=complex)
        assert np.allclose(complete_isometry(v), np.eye(2))

    def test_e1_column(self):
        v = np.array([[0.0], [1.0]], dtype=complex)
        u = complete_isometry(v)
        assert np.allclose(u, np.array([[0, 1], [1, 0]], dtype=complex))

    def test_random_isometries(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            rows = int(rng.integers(2, 17))
            cols = int(rng.integers(1, min(rows, 8) + 1))
            v = random_isometry(rng, rows, cols)
            u = complete_isometry(v)
            assert is_unitary(u)
            assert np.max(np.abs(u[:, :cols] - v)) < 1e-12

    def test_determinism(self):
        rng = np.random.default_rng(9)
        v = random_isometry(rng, 8, 3)
        u1 = complete_isometry(v)
        u2 = complete_isometry(v.copy())
        assert np.array_equal(u1, u2)

    def test_rejects_non_isometry(self):
        with pytest.raises(ValueError, match="isometry"):
            complete_isometry(np.array([[1.0], [1.0]], dtype=complex))


def test_flag_checks():
    rng = np.random.default_rng(10)
    u = random_isometry(rng, 4, 4)
    assert is_unitary(u)
    assert is_isometry(u[:, :2])
    assert not is_unitary(u[:, :2])
    assert unitarity_defect(np.eye(3)) == 0.0
