import numpy as np
import pytest

from pepsqc.blocks import (
    ms_gate,
    split_final_row,
    three_qubit_block,
    two_qubit_block,
    u3,
    unitary_to_tensor,
)
from pepsqc.tensor import complete_isometry, unitarity_defect


def random_params(rng, n):
    return rng.uniform(-np.pi, np.pi, n)


class TestU3:
    def test_identity(self):
        assert np.allclose(u3(0, 0, 0), np.eye(2))

    def test_pauli_x(self):
        assert np.allclose(u3(np.pi, 0, np.pi), [[0, 1], [1, 0]], atol=1e-15)

    def test_hadamard(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.allclose(u3(np.pi / 2, 0, np.pi), h)

    def test_inverse_parameterization(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            t, p, l = rng.uniform(-np.pi, np.pi, 3)
            assert np.allclose(u3(t, p, l) @ u3(-t, -l, -p), np.eye(2), atol=1e-12)


class TestMsGate:
    def test_bell_output(self):
        out = ms_gate() @ np.array([1, 0, 0, 0], dtype=complex)
        expected = np.array([1, 0, 0, -1j]) / np.sqrt(2)
        assert np.allclose(out, expected)

    def test_swap_symmetric(self):
        ms = ms_gate()
        swap = np.eye(4)[[0, 2, 1, 3]]
        assert np.allclose(swap @ ms @ swap, ms)

    def test_fourth_power_is_minus_identity(self):
        m = np.linalg.matrix_power(ms_gate(), 4)
        assert np.allclose(m, -np.eye(4), atol=1e-12)


class TestTwoQubitBlock:
    def test_zero_params_is_ms(self):
        assert np.allclose(two_qubit_block(np.zeros(12)), ms_gate())

    def test_unitary_for_random_draws(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            u = two_qubit_block(random_params(rng, 12))
            assert unitarity_defect(u) <= 1e-12

    def test_conjugation_preserves_ms_spectrum(self):
        rng = np.random.default_rng(2)
        p_in = random_params(rng, 6)
        # out-rail rotations inverse to the in-rail ones: U = A . MS . A^dagger
        p = np.concatenate([p_in, [-p_in[0], -p_in[2], -p_in[1], -p_in[3], -p_in[5], -p_in[4]]])
        u = two_qubit_block(p)
        ev_u = np.sort(np.angle(np.linalg.eigvals(u)))
        ev_ms = np.sort(np.angle(np.linalg.eigvals(ms_gate())))
        assert np.max(np.abs(ev_u - ev_ms)) < 1e-10

    def test_wrong_count(self):
        with pytest.raises(ValueError):
            two_qubit_block(np.zeros(11))


class TestThreeQubitBlock:
    def test_zero_params_staggered_ms(self):
        i2 = np.eye(2)
        expected = np.kron(i2, ms_gate()) @ np.kron(ms_gate(), i2)
        assert np.allclose(three_qubit_block(np.zeros(24)), expected)

    def test_unitarity(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            u = three_qubit_block(random_params(rng, 24))
            assert unitarity_defect(u) <= 1e-12

    def test_dividing_out_second_block(self):
        rng = np.random.default_rng(4)
        p = random_params(rng, 24)
        u = three_qubit_block(p)
        b1 = two_qubit_block(p[:12])
        b2 = two_qubit_block(p[12:])
        residual = np.kron(np.eye(2), b2).conj().T @ u - np.kron(b1, np.eye(2))
        assert np.max(np.abs(residual)) <= 1e-12


class TestUnitaryToTensor:
    def test_identity_with_clamped_second_input(self):
        t = unitary_to_tensor(np.eye(4), (1,))
        # T[i; a, b] = delta_{i,a} delta_{0,b}
        for i in range(2):
            for a in range(2):
                for b in range(2):
                    assert t[i, a, b] == (1.0 if (i == a and b == 0) else 0.0)

    def test_ms_clamp_selects_columns(self):
        t = unitary_to_tensor(ms_gate(), (1,))
        cols = ms_gate()[:, [0, 2]]  # input qubit 1 = 0 keeps columns 00 and 10
        assert np.allclose(t.reshape(2, 4).T, cols)

    def test_result_is_isometry(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            t = unitary_to_tensor(two_qubit_block(random_params(rng, 12)), (1,))
            m = t.reshape(2, 4).T
            assert unitarity_defect(m) <= 1e-12

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError, match="unitary"):
            unitary_to_tensor(np.ones((4, 4)), ())


class TestRoundTrip:
    def test_clamp_complete_clamp_recovers(self):
        # tensor -> isometry -> completed unitary -> clamp again, 1000 blocks.
        # Clamping input qubit 0 makes the kept columns the leading ones,
        # matching the canonical completion's column placement.
        rng = np.random.default_rng(6)
        for _ in range(1000):
            u = two_qubit_block(random_params(rng, 12))
            t = unitary_to_tensor(u, (0,))
            iso = np.transpose(t, (1, 2, 0)).reshape(4, 2)  # (outputs, free input)
            w = complete_isometry(iso)
            t2 = unitary_to_tensor(w, (0,))
            assert np.max(np.abs(t2 - t)) <= 1e-10


class TestSplitFinalRow:
    @staticmethod
    def reassemble(parts, n_in_axes):
        t7, t8, t9 = parts
        return np.einsum("iak,jkl,mbl->ijmab" if n_in_axes == 2 else "iak,jbkl,mcl->ijmabc",
                         t7, t8, t9)

    def test_identity_unitary(self):
        parts = split_final_row(np.eye(8), clamp_inputs=(1,))
        rebuilt = self.reassemble(parts, 2)  # axes (i7,i8,i9, a1,a3)
        target = np.eye(8).reshape(2, 2, 2, 2, 2, 2)[:, :, :, :, 0, :]
        assert np.max(np.abs(rebuilt - target)) < 1e-9

    def test_random_block_reconstruction(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            u = three_qubit_block(random_params(rng, 24))
            parts = split_final_row(u)
            rebuilt = np.einsum("iak,jbkl,mcl->ijmabc", *parts)
            target = np.transpose(u.reshape((2,) * 6), (0, 1, 2, 3, 4, 5))
            assert np.max(np.abs(rebuilt - target)) < 1e-9

    def test_singular_values_bounded_by_frobenius(self):
        # the split absorbs singular values rightward; each unfolding of a
        # unitary keeps its singular values below ||u||_F = 2*sqrt(2)
        rng = np.random.default_rng(8)
        bound = 2.0 * np.sqrt(2.0) * (1 + 1e-12)
        for _ in range(20):
            u = three_qubit_block(random_params(rng, 24))
            t = np.transpose(u.reshape((2,) * 6), (0, 3, 1, 4, 2, 5))
            s1 = np.linalg.svd(t.reshape(4, 16), compute_uv=False)
            assert np.all(s1 <= bound)
            parts = split_final_row(u)
            for p in parts:
                for ax in range(p.ndim):
                    m = np.moveaxis(p, ax, 0).reshape(p.shape[ax], -1)
                    s = np.linalg.svd(m, compute_uv=False)
                    assert np.all(s <= bound)

    def test_internal_bond_dims_at_most_four(self):
        rng = np.random.default_rng(9)
        u = three_qubit_block(random_params(rng, 24))
        t7, t8, t9 = split_final_row(u)
        assert t7.shape[2] <= 4 and t9.shape[2] <= 4
        assert t8.shape[2] <= 4 and t8.shape[3] <= 4
