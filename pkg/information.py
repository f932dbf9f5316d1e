"""
Entanglement and channel-capacity measures built on the assembled states.
"""

import logging
import math
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse.csgraph import connected_components
from scipy.special import entr

from bilinear import BilinearResult, QuadratureSpec, combine, smeared_bilinear
from core import CausalClass, Detector, GaussianSwitching, PairGeometry, causal_class, placed_pair
from errors import (
    DegenerateReceiverError,
    DivergentSelfEnergyError,
    DomainError,
    NonIdenticalDetectorsError,
)
from kernels import KernelKind
from models import (
    AmplitudeSet,
    Model,
    TwoQubitState,
    compute_amplitudes,
    delta_phase,
    leading_order_distance,
    receiver_coherence,
    check_delta_pair,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12


def _matrix(state: Union[TwoQubitState, np.ndarray]) -> np.ndarray:
    rho = state.rho if isinstance(state, TwoQubitState) else np.asarray(state, dtype=complex)
    if rho.shape != (4, 4):
        raise DomainError(f"Expected a 4×4 density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise DomainError("Density matrix is not Hermitian")
    return rho


def partial_transpose(rho: np.ndarray, subsystem: str = "B") -> np.ndarray:
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    if subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise DomainError(f"Unknown subsystem {subsystem!r}")
    return t.reshape(4, 4)


def _pair_eigenvalues(a: float, d: float, b: complex):
    mean = (a + d) / 2
    rad = math.hypot((a - d) / 2, abs(b))
    big = mean + rad if mean >= 0 else mean - rad
    if big == 0:
        return [0.0, 0.0]
    return [big, (a * d - abs(b) ** 2) / big]


def hermitian_eigenvalues(m: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of a Hermitian matrix, solved block by block over the connected
    components of its sparsity pattern. 2×2 blocks use the closed form, so
    X-shaped states with O(λ²) entries keep their relative accuracy.
    """
    n_blocks, labels = connected_components(np.abs(m) > 0, directed=False)
    values = []
    for k in range(n_blocks):
        idx = np.flatnonzero(labels == k)
        block = m[np.ix_(idx, idx)]
        if idx.size == 1:
            values.append(block[0, 0].real)
        elif idx.size == 2:
            values.extend(_pair_eigenvalues(block[0, 0].real, block[1, 1].real, block[1, 0]))
        else:
            values.extend(np.linalg.eigvalsh(block))
    return np.sort(np.array(values, dtype=float))


def negativity_exact(state: Union[TwoQubitState, np.ndarray], subsystem: str = "B") -> float:
    eigs = hermitian_eigenvalues(partial_transpose(_matrix(state), subsystem))
    return float(-np.sum(eigs[eigs < 0]))


def purity(state: Union[TwoQubitState, np.ndarray]) -> float:
    rho = _matrix(state)
    return float(np.real(np.vdot(rho, rho)))


def negativity_leading(amps: AmplitudeSet, model, rel_tol: float = 1e-6) -> float:
    model = Model(model)
    if model is Model.QC:
        return abs(amps.m_c)
    if not math.isclose(amps.l_aa, amps.l_bb, rel_tol=rel_tol, abs_tol=0.0):
        raise NonIdenticalDetectorsError(f"L_aa = {amps.l_aa:.6g} and L_bb = {amps.l_bb:.6g} differ")
    return max(0.0, abs(amps.m) - amps.l_aa)


def binary_entropy(x: float) -> float:
    """Base-2 entropy H(x), with H(0) = H(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"Binary entropy needs x in [0, 1], got {x}")
    return float((entr(x) + entr(1.0 - x)) / math.log(2))


class ChannelReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    capacity: float = Field(..., ge=0, description="Bits per use")
    signalling_term: float
    model: Model
    nu_b: Optional[float] = Field(None, gt=0, le=1, description="Receiver coherence; None when its self-term diverges (pointlike Dirac receiver)")
    capacity_lower_bound: bool = False
    params: Dict[str, Any] = {}


def _echo(a: Detector, b: Detector, g: PairGeometry) -> Dict[str, Any]:
    return {"a": a.model_dump(mode="json"), "b": b.model_dump(mode="json"), "geometry": g.model_dump(mode="json")}


def _signalling(a: Detector, b: Detector, g: PairGeometry, model: Model, spec: Optional[QuadratureSpec]) -> BilinearResult:
    ca, cb = a.initial_state.coherence, b.initial_state.coherence
    if ca == 0 or cb == 0:
        return BilinearResult(value=0j)
    if model is Model.QUANTUM:
        kind, prefactor = KernelKind.RETARDED, -4.0
    else:
        kind, prefactor = KernelKind.SYMMETRIC_DELTA, -2.0
    # Re(c_a e^{iΩt})·Im(c_b e^{iΩt′}) split into the four phase pairs
    weights = {
        (1, 1): ca * cb,
        (1, -1): -ca * cb.conjugate(),
        (-1, 1): ca.conjugate() * cb,
        (-1, -1): -ca.conjugate() * cb.conjugate(),
    }
    return combine((prefactor * w / 4j, smeared_bilinear(kind, a, b, g, phase, spec)) for phase, w in weights.items())


def signalling_term(a: Detector, b: Detector, g: PairGeometry, model, spec: Optional[QuadratureSpec] = None) -> float:
    """S_AB (quantum, retarded propagation) or S_AB^class (qc, half the symmetric propagator)."""
    return _signalling(a, b, g, Model(model), spec).value.real


def capacity_perturbative(a: Detector, b: Detector, g: PairGeometry, model,
                          spec: Optional[QuadratureSpec] = None) -> ChannelReport:
    """Leading-order lower bound (2/ln 2)·(S_AB/(4|α_B||β_B|))² on the collect-calling capacity."""
    model = Model(model)
    alpha, beta = abs(b.initial_state.alpha), abs(b.initial_state.beta)
    if alpha == 0 or beta == 0:
        raise DegenerateReceiverError("Receiver must start in a superposition of |g⟩ and |e⟩")
    s = signalling_term(a, b, g, model, spec)
    capacity = 2 / math.log(2) * (s / (4 * alpha * beta)) ** 2
    nu_b = 1.0
    if model is Model.QUANTUM:
        try:
            nu_b = receiver_coherence(placed_pair(a, b, g)[1])
        except DivergentSelfEnergyError:
            nu_b = None
    return ChannelReport(capacity=capacity, signalling_term=s, model=model, nu_b=nu_b,
                         capacity_lower_bound=True, params=_echo(a, b, g))


def delta_capacity_bits(theta_e: float, nu_b: float) -> float:
    """H(½ + ν/2·|cos θ_E|) − H(½ + ν/2)."""
    if not 0 < nu_b <= 1:
        raise DomainError(f"ν_b must lie in (0, 1], got {nu_b}")
    value = binary_entropy(0.5 + nu_b / 2 * abs(math.cos(theta_e))) - binary_entropy(0.5 + nu_b / 2)
    return max(0.0, value)


def capacity_delta(a: Detector, b: Detector, g: PairGeometry, model,
                   spec: Optional[QuadratureSpec] = None) -> ChannelReport:
    model = Model(model)
    _, pb = check_delta_pair(a, b, g)
    theta_e = delta_phase(a, b, g, spec)
    nu_b = receiver_coherence(pb) if model is Model.QUANTUM else 1.0
    return ChannelReport(capacity=delta_capacity_bits(theta_e, nu_b), signalling_term=theta_e / 2,
                         model=model, nu_b=nu_b, params=_echo(a, b, g))


# Classical limit

class ClassicalLimitReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    causal_class: CausalClass
    omega_t: float
    coupling: float
    noise_to_signal: float = Field(..., description="max(L_aa, L_bb)/|M|")
    distance_ratio: float = Field(..., description="max entrywise |ρ_qft − ρ_qc|/|M| at leading order")
    light_contact: bool
    high_gap: bool
    weak_coupling: bool

    @property
    def classical(self) -> bool:
        return self.light_contact and self.high_gap and self.weak_coupling


def envelope_shift(a: Detector, b: Detector) -> float:
    """log of 1/e^{−(Ω_a+Ω_b)²/(4p)}, the counter-rotating suppression of Gaussian pairs."""
    sa, sb = a.switching, b.switching
    if not (isinstance(sa, GaussianSwitching) and isinstance(sb, GaussianSwitching)):
        return 0.0
    p = 1 / sa.width ** 2 + 1 / sb.width ** 2
    return (a.gap + b.gap) ** 2 / (4 * p)


def classical_limit(a: Detector, b: Detector, g: PairGeometry, spec: Optional[QuadratureSpec] = None,
                    noise_threshold: float = 0.05, coupling_threshold: float = 0.1) -> ClassicalLimitReport:
    """
    Check the three conditions under which the quantum-field state reduces to the
    qc-field state: light contact, ΩT ≫ 1 (vacuum noise small against the
    exchanged amplitude) and weak coupling.
    """
    amps = compute_amplitudes(a, b, g, spec, log_shift=envelope_shift(a, b))
    m = abs(amps.m)
    if m == 0:
        raise DomainError("Exchange amplitude M vanishes; the classical-limit ratios are undefined")
    widths = [d.switching.width for d in (a, b) if isinstance(d.switching, GaussianSwitching)]
    omega_t = min(a.gap, b.gap) * (min(widths) if widths else math.inf)
    noise = max(amps.l_aa, amps.l_bb) / m
    cls = causal_class(a, b, g)
    report = ClassicalLimitReport(
        causal_class=cls,
        omega_t=omega_t,
        coupling=max(a.coupling, b.coupling),
        noise_to_signal=noise,
        distance_ratio=leading_order_distance(amps) / m,
        light_contact=cls is CausalClass.LIGHT_CONTACT,
        high_gap=noise < noise_threshold,
        weak_coupling=max(a.coupling, b.coupling) < coupling_threshold,
    )
    logger.info(f"🔍 classical limit: ΩT={omega_t:.3g} L/|M|={noise:.3g} distance/|M|={report.distance_ratio:.3g}")
    return report
