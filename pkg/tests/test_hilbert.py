import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import eval_hermite, factorial

from nvcat import units
from nvcat.errors import BasisMismatchError, TruncationError
from nvcat.grid import GridSpec, GridWavefunction
from nvcat.hilbert import (
    FockBasis,
    OperatorMatrix,
    QuantumState,
    TruncationWarning,
    displacement,
    fidelity,
    fock_state,
    fock_vector,
    frame_change,
    ladder_ops,
    number_op,
    parity,
    position_op,
    product_state,
    spin_vector,
    to_grid,
)

M = units.mass_from_diameter(30e-9, 3500)


def basis(dim=40, f=20e3):
    return FockBasis(dim, units.khz(f / 1e3), M)


def test_basis_validation():
    with pytest.raises(ValueError):
        FockBasis(1, 1.0, 1.0)
    with pytest.raises(ValueError):
        FockBasis(10, -1.0, 1.0)


def test_state_norm_is_enforced():
    b = basis()
    with pytest.raises(ValueError):
        QuantumState(2 * fock_vector(b.dim, 0), b)
    with pytest.raises(BasisMismatchError):
        QuantumState(np.ones(3), b)


def test_states_are_immutable():
    s = fock_state(basis(), 1)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 1


def test_fidelity_needs_same_space():
    with pytest.raises(BasisMismatchError):
        fidelity(fock_state(basis(20), 0), fock_state(basis(30), 0))
    with pytest.raises(BasisMismatchError):
        fidelity(fock_state(basis(20), 0), fock_state(basis(20, 30e3), 0))


def test_ladder_commutator_below_truncation():
    b = basis(30)
    a, ad = ladder_ops(b)
    comm = a.entries @ ad.entries - ad.entries @ a.entries
    assert np.allclose(comm[:-1, :-1], np.eye(29))
    assert np.allclose(np.diag(number_op(b).entries), np.arange(30))


def test_operator_flags_are_checked():
    b = basis(4)
    with pytest.raises(ValueError):
        OperatorMatrix(np.triu(np.ones((4, 4))), b, hermitian=True)
    with pytest.raises(ValueError):
        OperatorMatrix(2 * np.eye(4), b, unitary=True)


def test_propagator_is_unitary_and_block_aware():
    b = basis(12)
    h = np.kron(np.diag([1.0, -1.0]), np.diag(np.arange(12.0)))
    H = OperatorMatrix(h, b, 2, hermitian=True)
    U = H.propagator(0.37)
    assert np.allclose(U.entries, np.diag(np.exp(-1j * 0.37 * np.diag(h))))


def test_matmul_normalizes_and_checks_space():
    b = basis(10)
    s = fock_state(b, 3)
    a, _ = ladder_ops(b)
    out = a @ s
    assert np.isclose(out.norm(), 1) and np.isclose(abs(out.amplitudes[2]), 1)
    with pytest.raises(BasisMismatchError):
        a @ fock_state(basis(11), 0)


@settings(max_examples=40, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-2, 2))
def test_coherent_state_is_poissonian(re, im):
    alpha = complex(re, im)
    b = basis(80)
    psi = displacement(b, alpha).entries[:, 0]
    n = np.arange(30)
    poisson = np.exp(-abs(alpha) ** 2) * np.abs(alpha) ** (2 * n) / factorial(n)
    assert np.allclose(np.abs(psi[:30]) ** 2, poisson, atol=1e-12)


def test_displacement_group_law_and_unitarity():
    b = basis(120)
    d1, d2 = displacement(b, 0.7 + 0.2j).entries, displacement(b, -0.3 + 0.5j).entries
    d12 = displacement(b, 0.4 + 0.7j).entries
    phase = np.exp(1j * np.imag((0.7 + 0.2j) * np.conj(-0.3 + 0.5j)))
    v = fock_vector(120, 0)
    assert np.allclose(d1 @ d2 @ v, phase * d12 @ v, atol=1e-12)


def test_displacement_warns_on_leakage():
    with pytest.warns(TruncationWarning):
        displacement(basis(20), 4.0)


def test_coherent_branch_overlap():
    # <D(beta)0 | D(-beta)0> = exp(-2 beta^2) with beta = D / (4a): exp(-D^2 / 8a^2)
    b = basis(100)
    D_over_a = 3.0
    beta = D_over_a / 4
    plus = displacement(b, beta).entries[:, 0]
    minus = displacement(b, -beta).entries[:, 0]
    assert abs(np.vdot(plus, minus)) == pytest.approx(math.exp(-(D_over_a**2) / 8), rel=1e-12)


def test_coherent_state_position_mean():
    b = basis(100)
    psi = QuantumState(displacement(b, 1.5).entries[:, 0], b)
    mean, sigma = psi.position_moments()
    assert mean == pytest.approx(2 * 1.5 * b.a, rel=1e-12)
    assert sigma == pytest.approx(b.a, rel=1e-10)


def test_parity_of_fock_states():
    b = basis(10)
    P = parity(b)
    for n in range(10):
        assert P.expect(fock_state(b, n)).real == (-1) ** n


def test_product_state_ordering_is_spin_major():
    b = basis(5)
    s = product_state(spin_vector("-"), fock_vector(5, 2), b)
    assert s.spin_dim == 2 and np.isclose(abs(s.amplitudes[5 + 2]), 1)
    assert np.allclose(s.spin_populations(), [0, 1])


def _ground_overlap_by_quadrature(w1, w2):
    g = lambda z, w: (M * w / (math.pi * units.HBAR)) ** 0.25 * math.exp(-M * w * z**2 / (2 * units.HBAR))
    s = math.sqrt(units.HBAR / (M * min(w1, w2)))
    return quad(lambda z: g(z, w1) * g(z, w2), -20 * s, 20 * s, points=[0.0])[0]


@pytest.mark.parametrize("ratio", [1.5, 5.0, 0.2])
def test_frame_change_vacuum_overlap(ratio):
    w1 = units.khz(100)
    w2 = w1 / ratio
    s = frame_change(fock_state(FockBasis(120, w1, M), 0), w2)
    ref = _ground_overlap_by_quadrature(w1, w2)
    assert abs(s.amplitudes[0]) == pytest.approx(ref, rel=1e-10)
    assert abs(s.amplitudes[0]) ** 2 == pytest.approx(2 * math.sqrt(w1 * w2) / (w1 + w2), rel=1e-10)


def test_frame_change_matches_hermite_quadrature():
    w1, w2 = units.khz(100), units.khz(20)

    def phi(n, z, w):
        x0 = math.sqrt(units.HBAR / (M * w))
        x = z / x0
        return eval_hermite(n, x) * math.exp(-x * x / 2) / math.sqrt(2.0**n * factorial(n) * math.sqrt(math.pi) * x0)

    s = frame_change(fock_state(FockBasis(120, w1, M), 1), w2)
    x0 = math.sqrt(units.HBAR / (M * w2))
    for m in (1, 3, 5):
        ref = quad(lambda z: phi(m, z, w2) * phi(1, z, w1), -15 * x0, 15 * x0, limit=200)[0]
        assert s.amplitudes[m].real == pytest.approx(ref, abs=1e-10)
    assert np.allclose(s.amplitudes[0::2], 0)  # parity is conserved


def test_frame_change_round_trip():
    b = FockBasis(150, units.khz(50), M)
    s0 = QuantumState.normalized(np.r_[[1, 0.5j, -0.3, 0.2], np.zeros(146)], b)
    back = frame_change(frame_change(s0, units.khz(30)), units.khz(50))
    assert fidelity(s0, back) == pytest.approx(1, abs=1e-10)


def test_frame_change_refuses_lossy_truncation():
    b = FockBasis(20, units.khz(100), M)
    with pytest.raises(TruncationError):
        frame_change(fock_state(b, 8), units.khz(2))


def test_to_grid_matches_gaussian():
    b = basis(30)
    g = GridSpec(1024, 40 * b.a)
    psi = to_grid(fock_state(b, 0), g)
    ref = (2 * math.pi * b.a**2) ** -0.25 * np.exp(-g.z**2 / (4 * b.a**2))
    assert np.allclose(psi.values[0].real, ref, atol=1e-10 * ref.max())
    assert psi.norm() == pytest.approx(1, abs=1e-12)


def test_to_grid_preserves_overlaps():
    b = basis(60)
    g = GridSpec(2048, 60 * b.a)
    s1 = QuantumState(displacement(b, 1.0).entries[:, 0], b)
    s2 = QuantumState(displacement(b, -0.5j).entries[:, 0], b)
    assert to_grid(s1, g).overlap(to_grid(s2, g)) == pytest.approx(np.vdot(s1.amplitudes, s2.amplitudes), abs=1e-12)


def test_to_grid_refuses_small_extent_and_coarse_spacing():
    b = basis(30)
    with pytest.raises(TruncationError):
        to_grid(fock_state(b, 0), GridSpec(1024, 8 * b.a))
    with pytest.raises(TruncationError):
        to_grid(fock_state(b, 20), GridSpec(16, 30 * b.a))


def test_grid_spec_and_wavefunction_checks():
    with pytest.raises(ValueError):
        GridSpec(1000, 1.0)
    g = GridSpec(8, 1.0)
    assert g.z[g.n_points // 2] == 0
    with pytest.raises(TruncationError):
        GridWavefunction(2 * np.ones(8), g, 1.0)
