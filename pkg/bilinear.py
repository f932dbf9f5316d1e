"""
Quadrature engine for smeared two-point distributions.

Every amplitude of the two mediation models is a bilinear form

    λ_a λ_b ∬ dt dt′ e^{i(s₁Ω_a t + s₂Ω_b t′)} χ_A(t) χ_B(t′) K(t, x_A; t′, x_B)

of a reduced kernel K (see ``kernels``). The t′ integral at fixed lag
v = t − t′ is a Gaussian times a plane wave and is done in closed form, which
leaves a lag density F(v). Lightcone deltas then sift F at v = ±r and the
principal-value part is a one-dimensional Hilbert-type integral handled by
folding around each pole. Gaussian-ball profiles add one radial integral
over the distribution of the separation between the two balls.

Lag densities and mode integrands are normalised by their peak magnitude
before integration; the peak is carried as a logarithm and applied at the
end, so tolerances always act on O(1) integrands and exponentially
suppressed amplitudes keep their relative accuracy.
"""

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate, signal

from config import DEFAULT_ABS_TOL, DEFAULT_MAX_SUBDIVISIONS, DEFAULT_REL_TOL, DEFAULT_WINDOW_SIGMAS
from core import DiracSwitching, Detector, GaussianSwitching, PairGeometry, placed_pair
from errors import DivergentSelfEnergyError, DomainError, QuadratureFailure, SingularGeometryError
from kernels import KernelKind, ReducedKernel, kernel_reduced, regulated_kernel

logger = logging.getLogger(__name__)

Phase = Tuple[int, int]
KernelFactory = Callable[[float], ReducedKernel]

# Pointlike separations below this fraction of the lag-density width are coincident
MIN_RESOLVABLE_SEPARATION = 1e-3
ORACLE_WINDOW_SIGMAS = 8.0


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    abs_tol: float = Field(DEFAULT_ABS_TOL, ge=0, description="Absolute tolerance on peak-normalised integrands")
    rel_tol: float = Field(DEFAULT_REL_TOL, ge=0)
    max_subdivisions: int = Field(DEFAULT_MAX_SUBDIVISIONS, gt=0)
    integration_window_sigmas: float = Field(DEFAULT_WINDOW_SIGMAS, ge=7, description="Truncation half-width in widths")

    @model_validator(mode="after")
    def _some_tolerance(self):
        if self.abs_tol <= 0 and self.rel_tol <= 0:
            raise ValueError("At least one of abs_tol, rel_tol must be positive")
        return self


class BilinearResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: complex
    est_error: float = Field(0.0, ge=0)
    evaluations: int = Field(0, ge=0)


def combine(terms: Iterable[Tuple[complex, BilinearResult]]) -> BilinearResult:
    """Linear combination Σ cᵢ·resultᵢ with errors added in magnitude."""
    value, err, evals = 0j, 0.0, 0
    for c, res in terms:
        value += c * res.value
        err += abs(c) * res.est_error
        evals += res.evaluations
    return BilinearResult(value=value, est_error=err, evaluations=evals)


def _check_phase(phase: Phase) -> Phase:
    if len(phase) != 2 or any(s not in (-1, 0, 1) for s in phase):
        raise DomainError(f"Phase must be a pair of signs in {{-1, 0, +1}}, got {phase!r}")
    return int(phase[0]), int(phase[1])


class _Tally:
    """Runs complex adaptive quadratures and accumulates their error and cost."""

    def __init__(self, spec: QuadratureSpec):
        self.spec = spec
        self.error = 0.0
        self.evaluations = 0

    def _real(self, fn, a: float, b: float) -> float:
        out = integrate.quad(fn, a, b, epsabs=self.spec.abs_tol, epsrel=self.spec.rel_tol,
                             limit=self.spec.max_subdivisions, full_output=1)
        if len(out) > 3:
            raise QuadratureFailure(f"Quadrature on [{a:.6g}, {b:.6g}] did not converge: {out[3]}",
                                    partial=out[0], est_error=out[1])
        value, err, info = out
        self.error += err
        self.evaluations += info["neval"]
        return value

    def quad(self, fn: Callable[[float], complex], a: float, b: float) -> complex:
        if b <= a:
            return 0j
        re = self._real(lambda x: complex(fn(x)).real, a, b)
        im = self._real(lambda x: complex(fn(x)).imag, a, b)
        return complex(re, im)


def _pv(f: Callable[[float], complex], c: float, a: float, b: float, margin: float, tally: _Tally) -> complex:
    """PV ∫_a^b f(x)/(x − c) dx, folding the pole symmetrically."""
    if c < a - margin or c > b + margin:
        return tally.quad(lambda x: f(x) / (x - c), a, b)
    a, b = min(a, c - margin), max(b, c + margin)
    h = min(c - a, b - c)
    total = tally.quad(lambda x: (f(c + x) - f(c - x)) / x, 0.0, h)
    if c - a > h:
        total += tally.quad(lambda x: f(x) / (x - c), a, c - h)
    elif b - c > h:
        total += tally.quad(lambda x: f(x) / (x - c), c + h, b)
    return total


@dataclass(frozen=True)
class LagDensity:
    """
    F(v) = ∬ dt dt′ χ_A(t) χ_B(t′) e^{i(k₁t + k₂t′)} δ(v − t + t′) = e^{log_ref}·shape(v).

    ``width`` is zero for a pair of Dirac switchings, in which case F is a point
    mass at ``centre``.
    """

    centre: float
    width: float
    log_ref: float
    log_mag: Callable[[np.ndarray], np.ndarray]
    phase: Callable[[np.ndarray], np.ndarray]

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return np.exp(self.log_mag(v) + 1j * self.phase(v))


def lag_density(sa, sb, k1: float, k2: float) -> LagDensity:
    if isinstance(sa, GaussianSwitching) and isinstance(sb, GaussianSwitching):
        A2, B2 = sa.width ** 2, sb.width ** 2
        p = 1 / A2 + 1 / B2
        k = k1 + k2
        centre = sa.center - sb.center
        return LagDensity(
            centre=centre,
            width=math.sqrt(A2 + B2),
            log_ref=0.5 * math.log(math.pi / p) - k * k / (4 * p),
            log_mag=lambda v: -((v - centre) ** 2) / (A2 + B2),
            phase=lambda v: k * ((sa.center - v) / A2 + sb.center / B2) / p + k1 * v,
        )
    if isinstance(sa, DiracSwitching) and isinstance(sb, GaussianSwitching):
        ta, B2 = sa.instant, sb.width ** 2
        centre = ta - sb.center
        return LagDensity(
            centre=centre,
            width=sb.width,
            log_ref=math.log(sa.strength),
            log_mag=lambda v: -((v - centre) ** 2) / B2,
            phase=lambda v: k1 * ta + k2 * (ta - v),
        )
    if isinstance(sa, GaussianSwitching) and isinstance(sb, DiracSwitching):
        tb, A2 = sb.instant, sa.width ** 2
        centre = sa.center - tb
        return LagDensity(
            centre=centre,
            width=sa.width,
            log_ref=math.log(sb.strength),
            log_mag=lambda v: -((v - centre) ** 2) / A2,
            phase=lambda v: k1 * (tb + v) + k2 * tb,
        )
    ta, tb = sa.instant, sb.instant
    return LagDensity(
        centre=ta - tb,
        width=0.0,
        log_ref=math.log(sa.strength * sb.strength),
        log_mag=lambda v: np.zeros_like(v),
        phase=lambda v: np.full_like(v, k1 * ta + k2 * tb),
    )


def radial_density(rho, separation: float, width: float):
    """
    Density of |x − x′| for x, x′ drawn from two Gaussian balls whose centres are
    ``separation`` apart and whose widths combine to ``width`` = √(σ_a² + σ_b²).
    """
    rho = np.asarray(rho, dtype=float)
    s, D = width, separation
    pos = np.where(rho > 0, rho, 0.0)
    if D > 1e-12 * s:
        out = pos / (D * s * math.sqrt(math.pi)) * np.exp(-((pos - D) / s) ** 2) * -np.expm1(-4 * pos * D / s ** 2)
    else:
        out = 4 * pos ** 2 / (s ** 3 * math.sqrt(math.pi)) * np.exp(-(pos / s) ** 2)
    return np.where(rho > 0, out, 0.0)


def _pv_regular(F: LagDensity, r: float, spec: QuadratureSpec, tally: _Tally) -> complex:
    """PV ∫ F(v)/(4π²(r² − v²)) dv (shape units)."""
    half = spec.integration_window_sigmas * F.width
    lo, hi = F.centre - half, F.centre + half
    plus = _pv(F, -r, lo, hi, F.width, tally)
    minus = _pv(F, r, lo, hi, F.width, tally)
    return (plus - minus) / (8 * math.pi ** 2 * r)


def _on(x: float, y: float) -> bool:
    return math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-12)


def _pointlike_value(kernel: ReducedKernel, F: LagDensity, spec: QuadratureSpec, tally: _Tally) -> complex:
    if F.width == 0:
        v0 = F.centre
        value = 0j
        if kernel.pv_weight != 0:
            if _on(abs(v0), kernel.r):
                raise SingularGeometryError("Dirac pair on the lightcone: the principal-value part diverges")
            value += complex(kernel.regular_part(v0))
        value += sum((d.weight for d in kernel.deltas if _on(v0, d.location)), 0j)
        return value * complex(F(v0))

    value = sum((d.weight * complex(F(d.location)) for d in kernel.deltas), 0j)
    if kernel.pv_weight != 0:
        value += kernel.pv_weight * _pv_regular(F, kernel.r, spec, tally)
    return value


def _ball_value(kernel_at: KernelFactory, F: LagDensity, D: float, s: float,
                spec: QuadratureSpec, tally: _Tally) -> complex:
    W = spec.integration_window_sigmas
    rho_lo, rho_hi = max(0.0, D - W * s), D + W * s
    prob = partial(radial_density, separation=D, width=s)
    reference = kernel_at(max(D, s))

    if F.width == 0:
        v0 = F.centre
        c = abs(v0)
        value = 0j
        if c > 0:
            value += complex(prob(c)) * sum((d.weight for d in kernel_at(c).deltas if _on(v0, d.location)), 0j)
        if reference.pv_weight != 0:
            if c == 0:
                pv = tally.quad(lambda rho: prob(rho) / rho ** 2, rho_lo, rho_hi)
            else:
                pv = _pv(lambda rho: prob(rho) / (rho + c) if rho > 0 else 0.0, c, rho_lo, rho_hi, s, tally)
            value += reference.pv_weight * pv / (4 * math.pi ** 2)
        return value * complex(F(v0))

    def sifted(rho):
        k = kernel_at(rho)
        return complex(prob(rho)) * sum((d.weight * complex(F(d.location)) for d in k.deltas), 0j)

    value = tally.quad(sifted, rho_lo, rho_hi) if reference.deltas else 0j
    if reference.pv_weight != 0:
        value += reference.pv_weight * tally.quad(
            lambda rho: complex(prob(rho)) * _pv_regular(F, rho, spec, tally), rho_lo, rho_hi)
    return value


def _smear_placed(kernel_at: KernelFactory, pa: Detector, pb: Detector, phase: Phase,
                  spec: QuadratureSpec, log_shift: float) -> BilinearResult:
    s1, s2 = _check_phase(phase)
    F = lag_density(pa.switching, pb.switching, s1 * pa.gap, s2 * pb.gap)
    D = math.dist(pa.profile.position, pb.profile.position)
    s = math.hypot(pa.profile.sigma, pb.profile.sigma)
    tally = _Tally(spec)

    if s == 0:
        if D == 0 or D < MIN_RESOLVABLE_SEPARATION * F.width:
            raise SingularGeometryError(f"Pointlike detectors at separation r = {D:.3g} are coincident")
        shape = _pointlike_value(kernel_at(D), F, spec, tally)
    else:
        shape = _ball_value(kernel_at, F, D, s, spec, tally)

    scale = pa.coupling * pb.coupling * math.exp(F.log_ref + log_shift)
    logger.debug(f"bilinear phase={phase} r={D:.6g} evals={tally.evaluations} err={tally.error:.3g}")
    return BilinearResult(value=scale * shape, est_error=scale * tally.error, evaluations=tally.evaluations)


def smeared_kernel(kernel_at: KernelFactory, a: Detector, b: Detector, g: PairGeometry,
                   phase: Phase, spec: Optional[QuadratureSpec] = None, log_shift: float = 0.0) -> BilinearResult:
    """Bilinear form of an arbitrary reduced kernel family ``r -> ReducedKernel``."""
    pa, pb = placed_pair(a, b, g)
    return _smear_placed(kernel_at, pa, pb, phase, spec or QuadratureSpec(), log_shift)


def smeared_bilinear(kind: Union[KernelKind, str], a: Detector, b: Detector, g: PairGeometry,
                     phase: Phase, spec: Optional[QuadratureSpec] = None, log_shift: float = 0.0) -> BilinearResult:
    """
    λ_aλ_b ∬ e^{i(s₁Ω_a t + s₂Ω_b t′)} χ_A χ_B K for one of the ``KernelKind`` distributions.

    ``log_shift`` multiplies the result by e^{log_shift} before any exponential
    is evaluated.
    """
    try:
        kind = KernelKind(kind)
    except ValueError:
        raise DomainError(f"Unknown kernel kind: {kind!r}") from None
    return smeared_kernel(partial(kernel_reduced, kind), a, b, g, phase, spec, log_shift)


# Positive-frequency (mode sum) path for the Wightman function

def _switching_spectrum(s):
    """(log|X|, arg X, T²) for X(k) = ∫ χ(t) e^{ikt} dt."""
    if isinstance(s, GaussianSwitching):
        T2 = s.width ** 2
        return (lambda k: math.log(math.sqrt(math.pi) * s.width) - k * k * T2 / 4), (lambda k: k * s.center), T2
    return (lambda k: math.log(s.strength) + 0 * k), (lambda k: k * s.instant), 0.0


def _spectral_placed(pa: Detector, pb: Detector, phase: Phase, spec: QuadratureSpec,
                     log_shift: float) -> BilinearResult:
    s1, s2 = _check_phase(phase)
    k1, k2 = s1 * pa.gap, s2 * pb.gap
    D = math.dist(pa.profile.position, pb.profile.position)
    s2_sum = pa.profile.sigma ** 2 + pb.profile.sigma ** 2
    logA, argA, A2 = _switching_spectrum(pa.switching)
    logB, argB, B2 = _switching_spectrum(pb.switching)

    curvature = (A2 + B2 + s2_sum) / 4
    if curvature == 0:
        if D == 0:
            raise DivergentSelfEnergyError("Equal-time Wightman self term of a pointlike Dirac-switched detector")
        raise DomainError("Mode sum needs a Gaussian switching or a Gaussian-ball profile")

    def log_mag(w):
        return logA(k1 - w) + logB(k2 + w) - w * w * s2_sum / 4

    peak = max(0.0, (k1 * A2 - k2 * B2) / (A2 + B2 + s2_sum))
    log_ref = log_mag(peak)
    upper = peak + spec.integration_window_sigmas / math.sqrt(curvature)

    def integrand(w):
        return w * np.sinc(w * D / math.pi) * np.exp(log_mag(w) - log_ref + 1j * (argA(k1 - w) + argB(k2 + w)))

    tally = _Tally(spec)
    shape = tally.quad(integrand, 0.0, upper)
    scale = pa.coupling * pb.coupling * math.exp(log_ref + log_shift) / (4 * math.pi ** 2)
    logger.debug(f"mode sum phase={phase} r={D:.6g} evals={tally.evaluations}")
    return BilinearResult(value=scale * shape, est_error=scale * tally.error, evaluations=tally.evaluations)


def wightman_spectral(a: Detector, b: Detector, g: PairGeometry, phase: Phase = (-1, 1),
                      spec: Optional[QuadratureSpec] = None, log_shift: float = 0.0) -> BilinearResult:
    """
    Wightman bilinear from its mode sum

        (λ_aλ_b/4π²) ∫₀^∞ dω ω e^{−ω²(σ_a²+σ_b²)/4} sinc(ωr) X_A(s₁Ω_a − ω) X_B(s₂Ω_b + ω),

    with X the Fourier transform of the switching. The integrand has no
    cancellations, which makes it the accurate route for vacuum excitation
    terms at large ΩT.
    """
    pa, pb = placed_pair(a, b, g)
    return _spectral_placed(pa, pb, phase, spec or QuadratureSpec(), log_shift)


def self_wightman(d: Detector, spec: Optional[QuadratureSpec] = None, log_shift: float = 0.0) -> BilinearResult:
    """λ²∬ e^{−iΩ(t − t′)} χ(t)χ(t′) W for a single detector (its vacuum excitation probability)."""
    return _spectral_placed(d, d, (-1, 1), spec or QuadratureSpec(), log_shift)


# Brute-force oracle

class OracleResult(BaseModel):
    value: complex
    est_error: float = Field(..., ge=0)
    eps: List[float]


def _oracle_axis(s, k: float, h: float):
    if isinstance(s, DiracSwitching):
        return np.array([s.instant]), np.array([s.strength * np.exp(1j * k * s.instant)])
    n = int(round(2 * ORACLE_WINDOW_SIGMAS * s.width / h)) + 1
    t = s.center + (np.arange(n) - (n - 1) / 2) * h
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return t, s(t) * np.exp(1j * k * t) * w


def _oracle_setup(a: Detector, b: Detector, g: PairGeometry, phase: Phase, grid_n: int):
    """Lags and trapezoid correlation Σ_{t−t′=lag} f_A(t) f_B(t′) on a common spacing."""
    s1, s2 = _check_phase(phase)
    pa, pb = placed_pair(a, b, g)
    if pa.profile.sigma or pb.profile.sigma:
        raise DomainError("The brute-force oracle supports pointlike profiles only")
    r = math.dist(pa.profile.position, pb.profile.position)
    if r == 0:
        raise SingularGeometryError("Pointlike detectors at zero separation")
    widths = [s.width for s in (pa.switching, pb.switching) if isinstance(s, GaussianSwitching)]
    h = 2 * ORACLE_WINDOW_SIGMAS * max(widths, default=1.0) / (grid_n - 1)
    ta, fa = _oracle_axis(pa.switching, s1 * pa.gap, h)
    tb, fb = _oracle_axis(pb.switching, s2 * pb.gap, h)
    corr = signal.fftconvolve(fa, fb[::-1])
    lags = ta[0] - tb[-1] + np.arange(corr.size) * h
    return pa.coupling * pb.coupling, r, lags, corr


def brute_force_bilinear(kind: Union[KernelKind, str], a: Detector, b: Detector, g: PairGeometry,
                         phase: Phase, grid_n: int, eps: float) -> complex:
    """2D trapezoid of the iε-regulated kernel on an equispaced (t, t′) grid."""
    if grid_n < 64:
        raise DomainError("grid_n must be at least 64")
    if not eps > 0:
        raise DomainError("eps must be positive")
    coupling, r, lags, corr = _oracle_setup(a, b, g, phase, grid_n)
    return complex(coupling * np.sum(regulated_kernel(kind, lags, r, eps) * corr))


def extrapolated_oracle(kind: Union[KernelKind, str], a: Detector, b: Detector, g: PairGeometry, phase: Phase,
                        eps0: Optional[float] = None, levels: int = 5, points_per_eps: float = 4.0,
                        max_grid: int = 1 << 20) -> OracleResult:
    """Richardson extrapolation ε → 0 of the brute-force oracle, ε halved per level."""
    if levels < 2:
        raise DomainError("levels must be at least 2")
    switchings = [d.switching for d in (a, b)]
    widths = [s.width for s in switchings if isinstance(s, GaussianSwitching)] or [1.0]
    if eps0 is None:
        gap = max(a.gap, b.gap)
        eps0 = 0.1 * min(min(widths), 1 / gap if gap > 0 else math.inf)
    eps = [eps0 / 2 ** j for j in range(levels)]
    h = eps[-1] / points_per_eps
    grid_n = min(max_grid, max(64, int(math.ceil(2 * ORACLE_WINDOW_SIGMAS * max(widths) / h)) + 1))

    coupling, r, lags, corr = _oracle_setup(a, b, g, phase, grid_n)
    table = [[complex(coupling * np.sum(regulated_kernel(kind, lags, r, e) * corr))] for e in eps]
    for j in range(1, levels):
        for m in range(1, j + 1):
            prev, lower = table[j][m - 1], table[j - 1][m - 1]
            table[j].append(prev + (prev - lower) / (2 ** m - 1))
    value = table[-1][-1]
    err = abs(value - table[-2][-1])
    logger.debug(f"oracle {kind} grid_n={grid_n} value={value:.6g} err={err:.3g}")
    return OracleResult(value=value, est_error=err, eps=eps)
