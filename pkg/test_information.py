import math

import numpy as np
import pytest
from scipy.stats import entropy

from core import Detector, DiracSwitching, GaussianBallProfile, PairGeometry, Placement, QubitState
from errors import DegenerateReceiverError, DomainError, NonIdenticalDetectorsError
from information import (
    binary_entropy,
    capacity_delta,
    capacity_perturbative,
    classical_limit,
    delta_capacity_bits,
    hermitian_eigenvalues,
    negativity_exact,
    negativity_leading,
    partial_transpose,
    purity,
    signalling_term,
)
from models import AmplitudeSet, Model, assemble_qc_state, assemble_qft_state, compute_amplitudes
from verification import collect_calling_ratios, gaussian_pair

SQRT_HALF = 1 / math.sqrt(2)
SENDER = QubitState(alpha=SQRT_HALF, beta=SQRT_HALF)
RECEIVER = QubitState(alpha=SQRT_HALF, beta=SQRT_HALF * 1j)


def _pure(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def _amps(**kw):
    values = dict(m_c=0j, n_c=0j, m=0j, l_aa=0.0, l_bb=0.0, l_ab=0j)
    values.update(kw)
    return AmplitudeSet(**values)


def test_product_state_has_no_negativity():
    assert negativity_exact(_pure([1, 0, 0, 0])) == 0.0


def test_bell_state_negativity_is_one_half():
    assert negativity_exact(_pure([1, 0, 0, 1])) == pytest.approx(0.5, abs=1e-15)


def test_weakly_entangled_pure_state():
    assert negativity_exact(_pure([1, 0, 0, 0.1])) == pytest.approx(0.1 / 1.01, rel=1e-14)


def test_qc_state_negativity_is_the_exchange_amplitude():
    state = assemble_qc_state(_amps(m_c=0.1j))
    assert negativity_exact(state) == pytest.approx(0.1, rel=1e-14)


def test_partial_transpose_on_either_side_agrees():
    rng = np.random.default_rng(3)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    rho = 0.6 * _pure(psi) + 0.4 * np.eye(4) / 4
    assert negativity_exact(rho, "A") == pytest.approx(negativity_exact(rho, "B"), abs=1e-14)
    np.testing.assert_allclose(partial_transpose(partial_transpose(rho)), rho)


def test_partial_transpose_rejects_unknown_subsystem():
    with pytest.raises(DomainError):
        partial_transpose(np.eye(4), "C")


def test_negativity_rejects_non_hermitian_input():
    rho = np.eye(4) / 4
    rho[0, 1] = 0.1
    with pytest.raises(DomainError):
        negativity_exact(rho)


def test_block_eigensolver_keeps_tiny_eigenvalues():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0
    m[0, 3] = m[3, 0] = 1e-20
    m[1, 1], m[2, 2] = 2e-9, 2e-9
    m[1, 2] = m[2, 1] = 3e-9
    eigs = hermitian_eigenvalues(m)
    assert eigs[0] == pytest.approx(-1e-9, rel=1e-12)
    assert -1e-40 == pytest.approx(sorted(eigs, key=abs)[0], rel=1e-9)


def test_purity_of_mixed_states():
    assert purity(np.eye(4) / 4) == pytest.approx(0.25)
    assert purity(_pure([1, 1, 0, 0])) == pytest.approx(1.0)


def test_leading_negativity_for_spacelike_flashes_in_qc_model():
    d = Detector(gap=1.0, switching=DiracSwitching(), profile=GaussianBallProfile(width=0.1))
    amps = compute_amplitudes(d, d, PairGeometry(L=10.0, t0=2.0))
    assert negativity_leading(amps, Model.QC) == 0


def test_leading_negativity_vanishes_at_the_noise_boundary():
    assert negativity_leading(_amps(m=1e-4, l_aa=1e-4, l_bb=1e-4), Model.QUANTUM) == 0.0
    assert negativity_leading(_amps(m=3e-4j, l_aa=1e-4, l_bb=1e-4), "quantum") == pytest.approx(2e-4)


def test_leading_negativity_needs_identical_detectors():
    with pytest.raises(NonIdenticalDetectorsError):
        negativity_leading(_amps(l_aa=1e-4, l_bb=2e-4), Model.QUANTUM)


@pytest.mark.parametrize("theta", [0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8])
def test_leading_negativity_matches_exact_partial_transpose(theta):
    a, b = gaussian_pair(10.0)
    amps = compute_amplitudes(a, b, PairGeometry(L=10.0, theta=theta, mode=Placement.THETA))
    bound = 10 * max(abs(amps.m), amps.l_aa) ** 2
    exact = negativity_exact(assemble_qft_state(amps))
    assert abs(negativity_leading(amps, Model.QUANTUM) - exact) <= bound


def test_qc_negativity_vanishes_for_spacelike_gaussians():
    a, b = gaussian_pair(10.0)
    amps = compute_amplitudes(a, b, PairGeometry(L=10.0, theta=0.0, mode=Placement.THETA))
    assert negativity_exact(assemble_qc_state(amps)) < 1e-12
    assert abs(amps.m) > 0
    assert abs(amps.m_c) < 1e-12 * abs(amps.m)


@pytest.mark.parametrize("x, expected", [(0.5, 1.0), (1.0, 0.0), (0.0, 0.0)])
def test_binary_entropy_fixed_points(x, expected):
    assert binary_entropy(x) == pytest.approx(expected, abs=1e-15)


def test_binary_entropy_matches_scipy():
    assert binary_entropy(0.89) == pytest.approx(entropy([0.89, 0.11], base=2), rel=1e-12)
    assert binary_entropy(0.89) == pytest.approx(0.4999, abs=1e-3)


def test_binary_entropy_domain():
    with pytest.raises(DomainError):
        binary_entropy(1.2)


def test_delta_capacity_one_bit_for_perfect_phase():
    assert delta_capacity_bits(math.pi / 2, 1.0) == pytest.approx(1.0)


def test_delta_capacity_increases_with_receiver_coherence():
    values = [delta_capacity_bits(0.3, nu) for nu in (0.5, 0.9, 1.0)]
    assert values[0] < values[1] < values[2]


def test_delta_capacity_rejects_zero_coherence():
    with pytest.raises(DomainError):
        delta_capacity_bits(0.3, 0.0)


def test_delta_capacity_ordering_grid():
    for theta_e in np.linspace(0.1, 1.5, 5):
        previous = math.inf
        for l_bb in np.linspace(0.01, 0.5, 5):
            quantum = delta_capacity_bits(theta_e, math.exp(-2 * l_bb))
            assert delta_capacity_bits(theta_e, 1.0) > quantum
            assert quantum < previous
            previous = quantum


def test_spacelike_flashes_carry_no_capacity():
    d = Detector(gap=1.0, switching=DiracSwitching(), profile=GaussianBallProfile(width=0.1))
    g = PairGeometry(L=10.0, t0=2.0)
    for model in Model:
        report = capacity_delta(d, d, g, model)
        assert report.capacity == 0.0
        assert report.signalling_term == 0.0
    assert capacity_delta(d, d, g, Model.QUANTUM).nu_b < 1.0


def test_sender_without_coherence_cannot_signal():
    a = Detector(gap=1.0)
    b = Detector(gap=1.0, initial_state=RECEIVER)
    g = PairGeometry(L=5.0, t0=5.0)
    assert signalling_term(a, b, g, Model.QUANTUM) == 0.0
    assert capacity_perturbative(a, b, g, Model.QC).capacity == 0.0


def test_receiver_before_the_sender_cone_hears_nothing():
    a = Detector(gap=1.0, switching=DiracSwitching(), initial_state=SENDER)
    b = Detector(gap=1.0, switching=DiracSwitching(), initial_state=RECEIVER)
    report = capacity_perturbative(a, b, PairGeometry(L=5.0, t0=-10.0), Model.QUANTUM)
    assert report.signalling_term == 0.0
    assert report.nu_b is None
    assert report.capacity_lower_bound


def test_receiver_in_energy_eigenstate_is_degenerate():
    a = Detector(gap=1.0, initial_state=SENDER)
    with pytest.raises(DegenerateReceiverError):
        capacity_perturbative(a, Detector(gap=1.0), PairGeometry(L=5.0, t0=5.0), Model.QUANTUM)


def test_collect_calling_halves_the_signal_when_sender_precedes():
    s_ratio, c_ratio = collect_calling_ratios(t0=20.0, width=1.0, L=20.0)
    assert s_ratio == pytest.approx(0.5, abs=1e-3)
    assert c_ratio == pytest.approx(0.25, abs=5e-3)


def test_collect_calling_agrees_for_overlapping_interactions():
    s_ratio, _ = collect_calling_ratios(t0=0.0, width=1.0, L=0.05)
    assert s_ratio == pytest.approx(1.0, abs=0.05)


def test_classical_limit_at_high_gap():
    g = PairGeometry(L=20.0, theta=math.pi / 4, mode=Placement.THETA)
    report = classical_limit(*gaussian_pair(50.0), g)
    assert report.distance_ratio <= 0.05
    assert report.light_contact and report.high_gap and report.weak_coupling
    assert report.classical


def test_classical_limit_fails_at_low_gap():
    g = PairGeometry(L=20.0, theta=math.pi / 4, mode=Placement.THETA)
    report = classical_limit(*gaussian_pair(1.0), g)
    assert report.distance_ratio > 0.5
    assert not report.classical


def test_classical_limit_distance_at_ten_widths():
    # at L = 10T the principal-value remainder alone is ≈ 1/(√(2π)·L cos θ)
    g = PairGeometry(L=10.0, theta=math.pi / 4, mode=Placement.THETA)
    assert classical_limit(*gaussian_pair(50.0), g).distance_ratio < 0.06
