"""
Leading-order joint detector states for the two mediation models.

Basis {g_A g_B, g_A e_B, e_A g_B, e_A e_B} (kron order A ⊗ B). The qc-field
state keeps its fourth-order |M_c|² entries, the quantum-field state stops at
second order; ``OrderTag`` records the difference.
"""

import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import erfcx

from bilinear import (
    BilinearResult,
    QuadratureSpec,
    self_wightman,
    smeared_bilinear,
    smeared_kernel,
    wightman_spectral,
)
from core import DiracSwitching, Detector, GaussianBallProfile, PairGeometry, placed_pair
from errors import DivergentSelfEnergyError, DomainError, OrderingError
from kernels import KernelKind, kernel_reduced

logger = logging.getLogger(__name__)

STATE_TOL = 1e-12


class Model(str, Enum):
    QC = "qc"
    QUANTUM = "quantum"


class OrderTag(str, Enum):
    SECOND = "second"
    FOURTH_QC = "fourth-qc"


class TwoQubitState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: np.ndarray
    order_tag: OrderTag

    @field_validator("rho", mode="before")
    @classmethod
    def _physical(cls, v):
        rho = np.asarray(v, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"ρ must be 4×4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise ValueError("ρ is not Hermitian")
        if abs(np.trace(rho) - 1) > STATE_TOL:
            raise ValueError(f"Tr ρ = {np.trace(rho)}, expected 1")
        if np.min(np.diag(rho).real) < -STATE_TOL:
            raise ValueError("ρ has a negative population")
        rho = rho.copy()
        rho.setflags(write=False)
        return rho


class AmplitudeSet(BaseModel):
    """
    Second-order amplitudes. ``log_scale`` s means every counter-rotating entry
    (m_c, m, l_aa, l_bb, l_ab) has been multiplied by e^{s}; ``n_c`` never is.
    """

    model_config = ConfigDict(frozen=True)

    m_c: complex
    n_c: complex
    m: complex
    l_aa: float = Field(..., ge=0)
    l_bb: float = Field(..., ge=0)
    l_ab: complex
    log_scale: float = 0.0
    est_error: float = Field(0.0, ge=0)


def vacuum_excitation(d: Detector, spec: Optional[QuadratureSpec] = None, log_shift: float = 0.0) -> float:
    """L_ii, with closed forms for the pointlike Gaussian and Gaussian-ball flash cases."""
    s = d.switching
    if isinstance(s, DiracSwitching):
        if not isinstance(d.profile, GaussianBallProfile):
            raise DivergentSelfEnergyError("Pointlike detector with Dirac switching has a divergent self term")
        return d.coupling ** 2 * s.strength ** 2 * math.exp(log_shift) / (4 * math.pi ** 2 * d.profile.width ** 2)
    if d.profile.sigma == 0:
        x = d.gap * s.width
        # e^{−x²/2} − √(π/2)·x·erfc(x/√2), evaluated as e^{−x²/2}·(1 − √(π/2)·x·erfcx(x/√2))
        log_env = -x * x / 2 + log_shift
        return d.coupling ** 2 / (4 * math.pi) * math.exp(log_env) * (1 - math.sqrt(math.pi / 2) * x * erfcx(x / math.sqrt(2)))
    return max(0.0, self_wightman(d, spec, log_shift).value.real)


def _cross_wightman(a: Detector, b: Detector, g: PairGeometry, spec: QuadratureSpec, log_shift: float) -> BilinearResult:
    pa, pb = placed_pair(a, b, g)
    if isinstance(pa.switching, DiracSwitching) and isinstance(pb.switching, DiracSwitching) \
            and pa.profile.sigma == 0 and pb.profile.sigma == 0:
        return smeared_bilinear(KernelKind.WIGHTMAN, a, b, g, (-1, 1), spec, log_shift)
    return wightman_spectral(a, b, g, (-1, 1), spec, log_shift)


def compute_amplitudes(a: Detector, b: Detector, g: PairGeometry,
                       spec: Optional[QuadratureSpec] = None, log_shift: float = 0.0) -> AmplitudeSet:
    spec = spec or QuadratureSpec()
    delta_pp = smeared_bilinear(KernelKind.SYMMETRIC_DELTA, a, b, g, (1, 1), spec, log_shift)
    delta_pm = smeared_bilinear(KernelKind.SYMMETRIC_DELTA, a, b, g, (1, -1), spec)
    feynman = smeared_bilinear(KernelKind.FEYNMAN, a, b, g, (1, 1), spec, log_shift)
    cross = _cross_wightman(a, b, g, spec, log_shift)
    pa, pb = placed_pair(a, b, g)
    amps = AmplitudeSet(
        m_c=-0.5j * delta_pp.value,
        n_c=-0.5j * delta_pm.value,
        m=-feynman.value,
        l_aa=vacuum_excitation(pa, spec, log_shift),
        l_bb=vacuum_excitation(pb, spec, log_shift),
        l_ab=cross.value,
        log_scale=log_shift,
        est_error=0.5 * delta_pp.est_error + feynman.est_error + cross.est_error,
    )
    logger.debug(f"amplitudes |M_c|={abs(amps.m_c):.3e} |M|={abs(amps.m):.3e} L_aa={amps.l_aa:.3e}")
    return amps


def _require_unscaled(amps: AmplitudeSet) -> None:
    if amps.log_scale != 0:
        raise DomainError("Cannot assemble a density matrix from log-scaled amplitudes")


def assemble_qc_state(amps: AmplitudeSet) -> TwoQubitState:
    _require_unscaled(amps)
    mc = amps.m_c
    p = abs(mc) ** 2
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0], rho[0, 3], rho[3, 0], rho[3, 3] = 1 - p, mc.conjugate(), mc, p
    return TwoQubitState(rho=rho, order_tag=OrderTag.FOURTH_QC)


def assemble_qft_state(amps: AmplitudeSet) -> TwoQubitState:
    _require_unscaled(amps)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1 - amps.l_aa - amps.l_bb
    rho[0, 3], rho[3, 0] = amps.m.conjugate(), amps.m
    rho[1, 1], rho[2, 2] = amps.l_bb, amps.l_aa
    rho[1, 2], rho[2, 1] = amps.l_ab.conjugate(), amps.l_ab
    return TwoQubitState(rho=rho, order_tag=OrderTag.SECOND)


def leading_order_distance(amps: AmplitudeSet) -> float:
    """
    Largest entrywise |ρ_qft − ρ_qc| at second order. Valid for log-scaled
    amplitudes (the result carries the same scale).
    """
    return max(abs(amps.m - amps.m_c), amps.l_aa + amps.l_bb, amps.l_aa, amps.l_bb, abs(amps.l_ab))


# Delta coupling

def smeared_causal_coupling(a: Detector, b: Detector, g: PairGeometry,
                            spec: Optional[QuadratureSpec] = None) -> float:
    """E(Λ_A, Λ_B) without couplings and without oscillatory phases."""
    unit = smeared_kernel(lambda r: kernel_reduced(KernelKind.CAUSAL_E, r),
                          a.model_copy(update={"coupling": 1.0}), b.model_copy(update={"coupling": 1.0}),
                          g, (0, 0), spec)
    return unit.value.real


def check_delta_pair(a: Detector, b: Detector, g: PairGeometry):
    pa, pb = placed_pair(a, b, g)
    if not (isinstance(pa.switching, DiracSwitching) and isinstance(pb.switching, DiracSwitching)):
        raise DomainError("Delta coupling needs Dirac switchings on both detectors")
    for d in (pa, pb):
        if not isinstance(d.profile, GaussianBallProfile):
            raise DivergentSelfEnergyError("Delta coupling needs Gaussian-ball profiles; pointlike self terms diverge")
    if pa.switching.instant >= pb.switching.instant:
        raise OrderingError(f"Sender instant {pa.switching.instant} is not before receiver instant {pb.switching.instant}")
    return pa, pb


def delta_phase(a: Detector, b: Detector, g: PairGeometry, spec: Optional[QuadratureSpec] = None) -> float:
    """θ_E = 2λ_aλ_b·E(Λ_A, Λ_B)."""
    check_delta_pair(a, b, g)
    return 2 * a.coupling * b.coupling * smeared_causal_coupling(a, b, g, spec)


def receiver_coherence(b: Detector) -> float:
    """ν_b = e^{−2L_bb}."""
    return math.exp(-2 * vacuum_excitation(b))


def flash_receiver_state(rho0: np.ndarray, mu: np.ndarray, theta_e: float, theta_a: float, nu: float) -> np.ndarray:
    c, s = math.cos(theta_e), math.sin(theta_e)
    flipped = mu @ rho0 @ mu
    commutator = mu @ rho0 - rho0 @ mu
    return (0.5 + nu / 2 * c) * rho0 + (0.5 - nu / 2 * c) * flipped - 0.5j * nu * s * theta_a * commutator


def delta_receiver_state(a: Detector, b: Detector, g: PairGeometry, model, spec: Optional[QuadratureSpec] = None) -> np.ndarray:
    """Receiver state after sender and receiver flashes; the qc model is the ν_b = 1 case."""
    model = Model(model)
    pa, pb = check_delta_pair(a, b, g)
    theta_e = delta_phase(a, b, g, spec)
    theta_a = float(np.trace(pa.monopole(pa.switching.instant) @ pa.initial_state.density()).real)
    nu = receiver_coherence(pb) if model is Model.QUANTUM else 1.0
    rho = flash_receiver_state(pb.initial_state.density(), pb.monopole(pb.switching.instant), theta_e, theta_a, nu)
    logger.debug(f"delta receiver model={model.value} θ_E={theta_e:.3e} ν_b={nu:.6f}")
    return rho
