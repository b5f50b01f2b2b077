"""Operator algebra, unitary validation, and state containers."""

import numpy as np
import pytest

from homonmr.spinops import (
    DensityState,
    UnitaryOp,
    expm_hermitian,
    frobenius_distance,
    gate_fidelity,
    require_hermitian,
    spin_op,
    state_fidelity,
)


def test_spin_op_pauli_algebra():
    for site in (0, 1):
        ix = spin_op(2, site, "x")
        iy = spin_op(2, site, "y")
        iz = spin_op(2, site, "z")
        # [Ix, Iy] = i Iz and Ix^2 = 1/4 characterize spin-1/2.
        assert np.allclose(ix @ iy - iy @ ix, 1.0j * iz, atol=1e-15)
        assert np.allclose(ix @ ix, 0.25 * np.eye(4), atol=1e-15)


def test_spin_ops_on_distinct_sites_commute():
    a = spin_op(2, 0, "x")
    b = spin_op(2, 1, "y")
    assert np.allclose(a @ b - b @ a, 0.0, atol=1e-15)


def test_raising_operator_maps_down_state_to_up():
    plus = spin_op(1, 0, "+")
    down = np.array([0.0, 1.0])
    up = np.array([1.0, 0.0])
    assert np.allclose(plus @ down, up)
    assert np.allclose(plus @ up, 0.0)
    # Embedded on the left spin: |10> (index 2) -> |00> (index 0).
    plus1 = spin_op(2, 0, "+")
    assert plus1[0, 2] == 1.0
    assert np.count_nonzero(plus1) == 2


def test_spin_op_rejects_bad_site_and_axis():
    with pytest.raises(ValueError):
        spin_op(2, 2, "x")
    with pytest.raises(ValueError):
        spin_op(2, 0, "q")


def test_frobenius_distance_oracle_and_shape_check():
    eye = np.eye(4)
    assert frobenius_distance(eye, -eye) == pytest.approx(4.0, abs=1e-14)
    assert frobenius_distance(eye, eye) == 0.0
    with pytest.raises(ValueError):
        frobenius_distance(np.eye(2), np.eye(4))


def test_frobenius_distance_unitary_invariance(rng):
    a = rng.normal(size=(4, 4)) + 1.0j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1.0j * rng.normal(size=(4, 4))
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) +
                        1.0j * rng.normal(size=(4, 4)))
    assert frobenius_distance(q @ a, q @ b) == pytest.approx(
        frobenius_distance(a, b), rel=1e-12)
    assert frobenius_distance(a @ q, b @ q) == pytest.approx(
        frobenius_distance(a, b), rel=1e-12)


def test_unitary_op_validation_and_composition():
    u = UnitaryOp(np.diag(np.exp(1.0j * np.arange(4))))
    assert u.dim == 4
    assert np.allclose((u @ u.dagger()).matrix, np.eye(4), atol=1e-14)
    with pytest.raises(ValueError):
        UnitaryOp(np.diag([1.0, 1.0, 1.0, 1.1]))


def test_require_hermitian_rejects_non_hermitian():
    m = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        require_hermitian(m)


def test_expm_rotation_convention():
    # exp(+i theta Ix) carries Iz onto cos(theta) Iz + sin(theta) Iy.
    theta = 0.3
    ix = spin_op(1, 0, "x")
    iy = spin_op(1, 0, "y")
    iz = spin_op(1, 0, "z")
    u = expm_hermitian(-theta * ix, 1.0).matrix
    rotated = u @ iz @ u.conj().T
    assert np.allclose(rotated, np.cos(theta) * iz + np.sin(theta) * iy,
                       atol=1e-14)


def test_expm_time_scaling_consistency(rng):
    h = rng.normal(size=(4, 4))
    h = h + h.T
    t = 0.37
    assert np.allclose(expm_hermitian(h, t).matrix,
                       expm_hermitian(t * h, 1.0).matrix, atol=1e-12)


def test_expm_output_is_exactly_unitary(rng):
    h = rng.normal(size=(4, 4)) + 1.0j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    u = expm_hermitian(h, 2.1).matrix
    assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-13


def test_gate_fidelity_phase_invariance_and_value():
    u = expm_hermitian(spin_op(2, 0, "z"), 0.8)
    assert gate_fidelity(u, UnitaryOp(np.exp(0.5j) * u.matrix)) == \
        pytest.approx(1.0, abs=1e-14)
    # Overlap of a z rotation with identity: |cos(theta/2)|.
    theta = 0.8
    assert gate_fidelity(np.eye(4), u) == pytest.approx(
        abs(np.cos(theta / 2.0)), abs=1e-12)


def test_density_state_convention_validation():
    with pytest.raises(ValueError):
        DensityState(np.diag([0.5, 0.5, 0.5, 0.5]), "true")
    with pytest.raises(ValueError):
        DensityState(np.diag([1.0, 0.0, 0.0, -0.5]), "deviation")
    with pytest.raises(ValueError):
        DensityState(np.eye(4) / 4.0, "mixed-up")
    state = DensityState(np.diag([1.0, 0.0, 0.0, -1.0]), "deviation")
    assert np.allclose(state.populations(), [1.0, 0.0, 0.0, -1.0])


def test_density_state_true_accepts_pure_projector():
    ket = np.zeros(4)
    ket[0] = 1.0
    state = DensityState(np.outer(ket, ket), "true")
    assert state.populations()[0] == pytest.approx(1.0)


def test_state_fidelity_scale_free_and_signed():
    a = DensityState(np.diag([1.0, 0.0, 0.0, -1.0]), "deviation")
    b = DensityState(np.diag([2.0, 0.0, 0.0, -2.0]), "deviation")
    c = DensityState(np.diag([-1.0, 0.0, 0.0, 1.0]), "deviation")
    assert state_fidelity(a, b) == pytest.approx(1.0, abs=1e-14)
    assert state_fidelity(a, c) == pytest.approx(-1.0, abs=1e-14)
    with pytest.raises(ValueError):
        state_fidelity(a, DensityState(np.zeros((4, 4)), "deviation"))
