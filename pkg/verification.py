"""
Invariant suite run by ``main.py verify``.

Each check builds its own configurations, evaluates them through the public
operations and returns a ``CheckResult``; nothing here is cached between checks.
"""

import logging
import math
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np
from pydantic import BaseModel
from scipy.stats import unitary_group

from bilinear import QuadratureSpec, smeared_bilinear, smeared_kernel
from core import (
    Detector,
    DiracSwitching,
    GaussianSwitching,
    PairGeometry,
    Placement,
    QubitState,
)
from information import (
    capacity_perturbative,
    classical_limit,
    delta_capacity_bits,
    negativity_exact,
    purity,
    signalling_term,
)
from kernels import KernelKind, feynman_reduced, kernel_reduced
from models import Model, assemble_qft_state, compute_amplitudes

logger = logging.getLogger(__name__)

K = KernelKind
SQRT_HALF = 1 / math.sqrt(2)
SENDER = QubitState(alpha=SQRT_HALF, beta=SQRT_HALF)
RECEIVER = QubitState(alpha=SQRT_HALF, beta=SQRT_HALF * 1j)


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


def gaussian_pair(omega_t: float, coupling: float = 0.01, width: float = 1.0):
    d = Detector(gap=omega_t, coupling=coupling, switching=GaussianSwitching(width=width))
    return d, d


def identity_residuals(a: Detector, b: Detector, g: PairGeometry, phase, spec: Optional[QuadratureSpec] = None) -> Dict[str, float]:
    """Scaled residual of each kernel identity between smeared bilinears."""
    v = {kind: smeared_bilinear(kind, a, b, g, phase, spec).value for kind in K}
    gf_conj = smeared_kernel(lambda r: feynman_reduced(r).conjugate(), a, b, g, phase, spec).value

    def residual(lhs, rhs, *terms):
        scale = max(abs(t) for t in terms) or 1.0
        return abs(lhs - rhs) / scale

    W, GF, R, A = v[K.WIGHTMAN], v[K.FEYNMAN], v[K.RETARDED], v[K.ADVANCED]
    D, E, H = v[K.SYMMETRIC_DELTA], v[K.CAUSAL_E], v[K.HADAMARD_H]
    return {
        "W = H/2 + iE/2": residual(W, H / 2 + 0.5j * E, W, H, E),
        "G_F = H/2 + iΔ/2": residual(GF, H / 2 + 0.5j * D, GF, H, D),
        "Δ = G_R + G_A": residual(D, R + A, D, R, A),
        "E = G_R − G_A": residual(E, R - A, E, R, A),
        "iG_R = W − G_F*": residual(1j * R, W - gf_conj, R, W, gf_conj),
        "iG_A = G_F − W": residual(1j * A, GF - W, A, GF, W),
    }


def check_table_identities(n: int = 20, seed: int = 7, tol: float = 1e-8) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        a, b = gaussian_pair(rng.uniform(1, 20))
        g = PairGeometry(L=rng.uniform(2, 20), t0=rng.uniform(0, 20))
        for phase in ((1, 1), (1, -1)):
            worst = max(worst, max(identity_residuals(a, b, g, phase).values()))
    return CheckResult(name="table-identities", passed=worst <= tol, detail=f"worst scaled residual {worst:.2e}")


def check_reduced_algebra() -> CheckResult:
    ok = True
    for r in (0.5, 3.0, 17.0):
        W, GF = kernel_reduced(K.WIGHTMAN, r), kernel_reduced(K.FEYNMAN, r)
        R, A = kernel_reduced(K.RETARDED, r), kernel_reduced(K.ADVANCED, r)
        D, E, H = (kernel_reduced(k, r) for k in (K.SYMMETRIC_DELTA, K.CAUSAL_E, K.HADAMARD_H))
        ok &= W.is_close(H.scale(0.5) + E.scale(0.5j))
        ok &= GF.is_close(H.scale(0.5) + D.scale(0.5j))
        ok &= (R.scale(1j)).is_close(W - GF.conjugate())
        ok &= (A.scale(1j)).is_close(GF - W)
        ok &= A.is_close(R.reflect())
    return CheckResult(name="reduced-kernel-algebra", passed=bool(ok), detail="exact assembly of all kinds")


def check_hermitian_pairing(tol: float = 1e-6) -> CheckResult:
    a, b = gaussian_pair(1.0)
    g = PairGeometry(L=4.0, t0=1.5)
    forward = smeared_bilinear(K.WIGHTMAN, a, b, g, (-1, 1)).value
    backward = smeared_bilinear(K.WIGHTMAN, b, a, g.swapped(), (-1, 1)).value
    err = abs(forward - backward.conjugate()) / abs(forward)
    return CheckResult(name="hermitian-pairing", passed=err <= tol, detail=f"relative mismatch {err:.2e}")


def check_coupling_scaling(c: float = 3.0, tol: float = 1e-13) -> CheckResult:
    a, b = gaussian_pair(1.5)
    g = PairGeometry(L=5.0, t0=2.0)
    base = smeared_bilinear(K.FEYNMAN, a, b, g, (1, 1)).value
    a2 = a.model_copy(update={"coupling": c * a.coupling})
    b2 = b.model_copy(update={"coupling": c * b.coupling})
    scaled = smeared_bilinear(K.FEYNMAN, a2, b2, g, (1, 1)).value
    err = abs(scaled - c * c * base) / abs(c * c * base)
    return CheckResult(name="coupling-scaling", passed=err <= tol, detail=f"relative mismatch {err:.2e}")


def check_qc_causality() -> CheckResult:
    a = Detector(gap=3.0, switching=DiracSwitching(instant=0.0))
    b = Detector(gap=3.0, switching=DiracSwitching(instant=0.0))
    values = []
    for t0 in (0.0, 2.5, 7.0, -4.0):
        g = PairGeometry(L=5.0, t0=t0)
        for phase in ((1, 1), (1, -1)):
            values.append(abs(smeared_bilinear(K.SYMMETRIC_DELTA, a, b, g, phase).value))
    return CheckResult(name="qc-causality", passed=max(values) == 0.0, detail=f"max |Δ-bilinear| {max(values):.1e}")


def check_spacelike_harvesting() -> CheckResult:
    a, b = gaussian_pair(10.0)
    amps = compute_amplitudes(a, b, PairGeometry(L=10.0, theta=0.0, mode=Placement.THETA))
    m, mc = abs(amps.m), abs(amps.m_c)
    return CheckResult(name="spacelike-harvesting", passed=m > 0 and mc < 1e-12 * m,
                       detail=f"|M| = {m:.3e}, |M_c| = {mc:.3e}")


def check_purity_formula(coupling: float = 0.01) -> CheckResult:
    a, b = gaussian_pair(1.0, coupling)
    amps = compute_amplitudes(a, b, PairGeometry(L=10.0, theta=0.0, mode=Placement.THETA))
    gap = abs(purity(assemble_qft_state(amps)) - (1 - 2 * (amps.l_aa + amps.l_bb)))
    return CheckResult(name="purity-formula", passed=gap <= 10 * coupling ** 4, detail=f"deviation {gap:.2e}")


def check_local_unitary_invariance(trials: int = 10, seed: int = 11, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        rho = 0.7 * np.outer(psi, psi.conj()) + 0.3 * np.eye(4) / 4
        u = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
        rotated = u @ rho @ u.conj().T
        worst = max(worst, abs(negativity_exact(rho) - negativity_exact(rotated)),
                    abs(negativity_exact(rho, "A") - negativity_exact(rho, "B")))
    return CheckResult(name="negativity-local-unitaries", passed=worst <= tol, detail=f"worst change {worst:.2e}")


def check_delta_ordering() -> CheckResult:
    ok = True
    for theta_e in np.linspace(0.1, 1.5, 5):
        previous = math.inf
        for l_bb in (0.01, 0.1, 0.2, 0.35, 0.5):
            classical = delta_capacity_bits(theta_e, 1.0)
            quantum = delta_capacity_bits(theta_e, math.exp(-2 * l_bb))
            ok &= classical > quantum and quantum < previous
            previous = quantum
    return CheckResult(name="delta-capacity-ordering", passed=bool(ok), detail="C_qc > C_quantum, decreasing in L_bb")


def check_exchange_dominance(steps: int = 7, tol: float = 1e-10) -> CheckResult:
    a, b = gaussian_pair(10.0)
    worst = math.inf
    for theta in np.linspace(0.0, math.pi / 2 * 0.99, steps):
        amps = compute_amplitudes(a, b, PairGeometry(L=10.0, theta=float(theta), mode=Placement.THETA))
        m, mc = abs(amps.m), abs(amps.m_c)
        worst = min(worst, (m - mc) / m)
    return CheckResult(name="exchange-dominance", passed=worst >= -tol,
                       detail=f"min (|M| − |M_c|)/|M| over θ {worst:.3e}")


def collect_calling_ratios(t0: float, width: float, L: float, omega: float = 1.0):
    a = Detector(gap=omega, switching=GaussianSwitching(width=width), initial_state=SENDER)
    b = Detector(gap=omega, switching=GaussianSwitching(width=width), initial_state=RECEIVER)
    g = PairGeometry(L=L, t0=t0)
    s_q = signalling_term(a, b, g, Model.QUANTUM)
    s_c = signalling_term(a, b, g, Model.QC)
    c_q = capacity_perturbative(a, b, g, Model.QUANTUM).capacity
    c_c = capacity_perturbative(a, b, g, Model.QC).capacity
    return s_c / s_q, c_c / c_q


def check_collect_calling() -> CheckResult:
    s_ratio, c_ratio = collect_calling_ratios(t0=20.0, width=1.0, L=20.0)
    overlap, _ = collect_calling_ratios(t0=0.0, width=1.0, L=0.05)
    ok = abs(s_ratio - 0.5) <= 1e-3 and abs(c_ratio - 0.25) <= 5e-3 and abs(overlap - 1) <= 0.05
    return CheckResult(name="collect-calling-ratio", passed=ok,
                       detail=f"S ratio {s_ratio:.6f}, C ratio {c_ratio:.6f}, overlap {overlap:.4f}")


def check_classical_limit() -> CheckResult:
    g = PairGeometry(L=20.0, theta=math.pi / 4, mode=Placement.THETA)
    high = classical_limit(*gaussian_pair(50.0), g)
    low = classical_limit(*gaussian_pair(1.0), g)
    ok = high.distance_ratio <= 0.05 and low.distance_ratio > 0.5
    return CheckResult(name="classical-limit", passed=ok,
                       detail=f"distance/|M| = {high.distance_ratio:.3g} at ΩT=50, {low.distance_ratio:.3g} at ΩT=1")


CHECKS: Dict[str, Callable[[], CheckResult]] = {
    "reduced-kernel-algebra": check_reduced_algebra,
    "table-identities": check_table_identities,
    "hermitian-pairing": check_hermitian_pairing,
    "coupling-scaling": check_coupling_scaling,
    "qc-causality": check_qc_causality,
    "spacelike-harvesting": check_spacelike_harvesting,
    "exchange-dominance": check_exchange_dominance,
    "purity-formula": check_purity_formula,
    "negativity-local-unitaries": check_local_unitary_invariance,
    "delta-capacity-ordering": check_delta_ordering,
    "collect-calling-ratio": check_collect_calling,
    "classical-limit": check_classical_limit,
}


def run_checks(names: Optional[Iterable[str]] = None) -> List[CheckResult]:
    results = []
    for name in names or CHECKS:
        result = CHECKS[name]()
        logger.debug(f"{name}: {result.detail}")
        results.append(result)
    return results
