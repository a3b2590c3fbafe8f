import numpy as np
import pytest

from pepsqc.peps import PepsNetwork, contract_all, double_layer_norm_sq, norm, present_roles


def random_network(rng, rows, cols, chi=2):
    grid = []
    for r in range(rows):
        row = []
        for c in range(cols):
            shape = [2] + [chi] * len(present_roles(rows, cols, r, c))
            row.append(rng.normal(size=shape) + 1j * rng.normal(size=shape))
        grid.append(row)
    return PepsNetwork(rows, cols, grid, chi=chi)


def test_single_site_network():
    t = np.array([0.6, 0.8j])
    net = PepsNetwork(1, 1, [[t]], chi=1)
    assert np.allclose(contract_all(net), t)


def test_two_site_bond_carries_physical_value():
    # delta tensors: bond copies the physical index -> Bell-type amplitudes
    a, b = 1.7, -0.3j
    top = np.zeros((2, 2), dtype=complex)
    top[0, 0] = a
    top[1, 1] = b
    bottom = np.eye(2, dtype=complex)  # (phys, up)
    net = PepsNetwork(2, 1, [[top], [bottom]], chi=2)
    psi = contract_all(net)
    assert np.allclose(psi, [a, 0, 0, b])


def test_norm_against_double_layer_oracle():
    rng = np.random.default_rng(0)
    net = random_network(rng, 3, 3)
    n1 = norm(net) ** 2
    n2 = double_layer_norm_sq(net)
    assert abs(n1 - n2) < 1e-9 * max(1.0, abs(n2))


def test_multilinearity_single_tensor_scaling():
    rng = np.random.default_rng(1)
    net = random_network(rng, 2, 2)
    psi = contract_all(net)
    net.tensors[0][1] = 3.0 * net.tensors[0][1]
    assert np.allclose(contract_all(net), 3.0 * psi)


def test_norm_scales_with_all_tensors():
    rng = np.random.default_rng(2)
    net = random_network(rng, 3, 3)
    n0 = norm(net)
    for r in range(3):
        for c in range(3):
            net.tensors[r][c] = 2.0 * net.tensors[r][c]
    assert abs(norm(net) - 2**9 * n0) < 1e-6 * 2**9 * n0


def test_zero_network():
    rng = np.random.default_rng(3)
    net = random_network(rng, 2, 2)
    for r in range(2):
        for c in range(2):
            net.tensors[r][c] = np.zeros_like(net.tensors[r][c])
    assert norm(net) == 0.0


def test_contraction_order_independence_via_transpose():
    # row-by-row on the transposed grid must match the original contraction
    rng = np.random.default_rng(4)
    net = random_network(rng, 3, 3)
    swap = {"up": "left", "left": "up", "down": "right", "right": "down"}
    grid_t = [[None] * 3 for _ in range(3)]
    for r in range(3):
        for c in range(3):
            roles = ["phys"] + list(present_roles(3, 3, r, c))
            new_roles = ["phys"] + [swap[x] for x in roles[1:]]
            order = ["phys"] + [x for x in ("up", "left", "down", "right") if x in new_roles]
            grid_t[c][r] = np.transpose(net.tensors[r][c], [new_roles.index(x) for x in order])
    net_t = PepsNetwork(3, 3, grid_t, chi=2)
    psi = contract_all(net).reshape((2,) * 9)
    psi_t = contract_all(net_t).reshape((2,) * 9)
    # transposed network enumerates sites column-major
    perm = [3 * (s % 3) + s // 3 for s in range(9)]
    assert np.max(np.abs(np.transpose(psi, perm) - psi_t)) < 1e-9


def test_size_guard():
    rng = np.random.default_rng(5)
    net = random_network(rng, 4, 4)
    with pytest.raises(ValueError, match="too large"):
        contract_all(net)


def test_bond_mismatch_rejected():
    rng = np.random.default_rng(6)
    grid = [
        [rng.normal(size=(2, 2, 3)), rng.normal(size=(2, 2, 2))],
        [rng.normal(size=(2, 2, 2)), rng.normal(size=(2, 2, 2))],
    ]
    with pytest.raises(ValueError, match="mismatch"):
        PepsNetwork(2, 2, grid, chi=3)


def test_physical_dimension_enforced():
    with pytest.raises(ValueError, match="physical"):
        PepsNetwork(1, 1, [[np.zeros(3)]], chi=1)
