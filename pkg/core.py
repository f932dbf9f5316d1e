"""
Spacetime, detector and geometry data model.

Natural units ħ = c = 1. Times and lengths are measured in units of the
Gaussian switching width T of detector A, so the dimensionless inputs ΩT, L/T
and t0/T are simply the numbers stored here.
"""

import logging
import math
from enum import Enum
from typing import Annotated, Callable, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, model_validator
from scipy import integrate

from config import STRONG_SUPPORT_HALF_WIDTH
from errors import DomainError

logger = logging.getLogger(__name__)

Vector3 = Tuple[FiniteFloat, FiniteFloat, FiniteFloat]
ORIGIN: Vector3 = (0.0, 0.0, 0.0)


class _Value(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Event(_Value):
    t: FiniteFloat = 0.0
    x: FiniteFloat = 0.0
    y: FiniteFloat = 0.0
    z: FiniteFloat = 0.0

    @property
    def spatial(self) -> Vector3:
        return (self.x, self.y, self.z)

    def spatial_distance(self, other: "Event") -> float:
        return math.dist(self.spatial, other.spatial)

    def interval(self, other: "Event") -> float:
        """Minkowski interval s² = −(Δt)² + |Δx|² (positive when spacelike)."""
        return -(other.t - self.t) ** 2 + self.spatial_distance(other) ** 2


# Switching functions

class GaussianSwitching(_Value):
    kind: Literal["gaussian"] = "gaussian"
    center: FiniteFloat = Field(0.0, description="Centre t_c")
    width: float = Field(1.0, gt=0, description="Width T, χ(t) = exp(−(t − t_c)²/T²)")

    def __call__(self, t):
        return np.exp(-((np.asarray(t) - self.center) / self.width) ** 2)

    def integrate(self, f: Callable[[float], float]) -> float:
        half = 10.0 * self.width
        value, _ = integrate.quad(lambda t: self(t) * f(t), self.center - half, self.center + half, limit=200)
        return value

    def shifted(self, dt: float) -> "GaussianSwitching":
        return self.model_copy(update={"center": self.center + dt})


class DiracSwitching(_Value):
    kind: Literal["delta"] = "delta"
    instant: FiniteFloat = Field(0.0, description="Instant t_i")
    strength: float = Field(1.0, gt=0, description="Strength η (dimensionless·time)")

    def integrate(self, f: Callable[[float], float]) -> float:
        return self.strength * f(self.instant)

    def shifted(self, dt: float) -> "DiracSwitching":
        return self.model_copy(update={"instant": self.instant + dt})


SwitchingFunction = Annotated[Union[GaussianSwitching, DiracSwitching], Field(discriminator="kind")]


# Spatial profiles

class PointProfile(_Value):
    kind: Literal["point"] = "point"
    position: Vector3 = ORIGIN

    @property
    def sigma(self) -> float:
        return 0.0

    def integrate(self, g: Callable[[np.ndarray], float]) -> float:
        return g(np.asarray(self.position))

    def shifted(self, dx: Vector3) -> "PointProfile":
        return self.model_copy(update={"position": tuple(p + d for p, d in zip(self.position, dx))})


class GaussianBallProfile(_Value):
    """Unit-normalised ball f(x) = (πσ²)^(−3/2) exp(−|x − p|²/σ²)."""

    kind: Literal["ball"] = "ball"
    position: Vector3 = ORIGIN
    width: float = Field(..., gt=0, description="Ball width σ")

    @property
    def sigma(self) -> float:
        return self.width

    def density(self, x) -> np.ndarray:
        d2 = np.sum((np.asarray(x) - np.asarray(self.position)) ** 2, axis=-1)
        return (math.pi * self.width ** 2) ** -1.5 * np.exp(-d2 / self.width ** 2)

    def shifted(self, dx: Vector3) -> "GaussianBallProfile":
        return self.model_copy(update={"position": tuple(p + d for p, d in zip(self.position, dx))})


SpatialProfile = Annotated[Union[PointProfile, GaussianBallProfile], Field(discriminator="kind")]


class QubitState(_Value):
    """Pure qubit state α|g⟩ + β|e⟩."""

    alpha: complex = 1.0 + 0j
    beta: complex = 0j

    @model_validator(mode="after")
    def _normalised(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|α|² + |β|² = {norm!r}, expected 1")
        return self

    @classmethod
    def ground(cls) -> "QubitState":
        return cls()

    @property
    def coherence(self) -> complex:
        """α*β, the off-diagonal weight the monopole couples to."""
        return self.alpha.conjugate() * self.beta

    @property
    def ket(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def density(self) -> np.ndarray:
        k = self.ket
        return np.outer(k, k.conj())


class Detector(_Value):
    gap: float = Field(..., ge=0, description="Energy gap Ω (units of 1/T)")
    coupling: float = Field(0.01, ge=0, description="Coupling λ")
    switching: SwitchingFunction = GaussianSwitching()
    profile: SpatialProfile = PointProfile()
    initial_state: QubitState = QubitState()

    def monopole(self, t: float) -> np.ndarray:
        """μ(t) = e^{iΩt}σ⁺ + e^{−iΩt}σ⁻ in the (g, e) basis."""
        phase = np.exp(1j * self.gap * t)
        return np.array([[0, phase.conjugate()], [phase, 0]], dtype=complex)

    def placed(self, centre: Event) -> "Detector":
        """The detector with its switching and profile offset by ``centre``."""
        return self.model_copy(update={
            "switching": self.switching.shifted(centre.t),
            "profile": self.profile.shifted(centre.spatial),
        })


# Pair geometry

class Placement(str, Enum):
    THETA = "theta"
    DELAY = "delay"


class PairGeometry(_Value):
    L: float = Field(..., gt=0, description="Separation scale")
    t0: FiniteFloat = Field(0.0, description="Delay of B (delay placement)")
    theta: FiniteFloat = Field(0.0, description="Angle in [0, π/2] (theta placement)")
    mode: Placement = Placement.DELAY

    def swapped(self, mode: Optional[Placement] = None) -> "PairGeometry":
        """Geometry seen from B: A↔B exchange combined with t0 → −t0."""
        _, b = geometry_to_centers(self, mode)
        return PairGeometry(L=math.hypot(b.x, b.y, b.z), t0=-b.t, mode=Placement.DELAY)


def geometry_to_centers(g: PairGeometry, mode: Union[Placement, str, None] = None) -> Tuple[Event, Event]:
    mode = Placement(mode) if mode is not None else g.mode
    a = Event()
    if mode is Placement.THETA:
        if not 0.0 <= g.theta <= math.pi / 2:
            raise DomainError(f"θ = {g.theta} outside [0, π/2]")
        return a, Event(t=g.L * math.sin(g.theta), x=g.L * math.cos(g.theta))
    return a, Event(t=g.t0, x=g.L)


def placed_pair(a: Detector, b: Detector, g: PairGeometry) -> Tuple[Detector, Detector]:
    ca, cb = geometry_to_centers(g)
    return a.placed(ca), b.placed(cb)


class CausalClass(str, Enum):
    SPACELIKE = "effectively-spacelike"
    LIGHT_CONTACT = "light-contact"
    TIMELIKE = "timelike"


def _support(switching, half_width: float) -> Tuple[float, float]:
    if isinstance(switching, GaussianSwitching):
        return switching.center - half_width * switching.width, switching.center + half_width * switching.width
    return switching.instant, switching.instant


def causal_class(a: Detector, b: Detector, g: PairGeometry,
                 half_width: float = STRONG_SUPPORT_HALF_WIDTH) -> CausalClass:
    """Classify the strong-support regions of the two interactions against the lightcone."""
    pa, pb = placed_pair(a, b, g)
    a_lo, a_hi = _support(pa.switching, half_width)
    b_lo, b_hi = _support(pb.switching, half_width)
    lo, hi = b_lo - a_hi, b_hi - a_lo
    dt_max = max(abs(lo), abs(hi))
    dt_min = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))

    distance = math.dist(pa.profile.position, pb.profile.position)
    spread = half_width * (pa.profile.sigma + pb.profile.sigma)
    r_min, r_max = max(0.0, distance - spread), distance + spread

    if dt_max == dt_min and r_min == r_max and math.isclose(dt_max, r_min, rel_tol=1e-12, abs_tol=1e-12):
        return CausalClass.LIGHT_CONTACT
    if dt_max < r_min:
        return CausalClass.SPACELIKE
    if dt_min > r_max:
        return CausalClass.TIMELIKE
    return CausalClass.LIGHT_CONTACT
