"""
Massless scalar two-point distributions on static comoving worldlines.

Each distribution is reduced to a principal-value part plus lightcone deltas,
as a function of the relative time v = t − t′ (t on detector A, t′ on
detector B) at spatial distance r:

    W   = PV[1/(4π²(r² − v²))] − i/(8πr)·δ(v − r) + i/(8πr)·δ(v + r)
    G_F = PV[1/(4π²(r² − v²))] + i/(8πr)·δ(v − r) + i/(8πr)·δ(v + r)
    G_R = δ(v + r)/(4πr)
    G_A = δ(v − r)/(4πr)
    Δ   = G_R + G_A,   E = G_R − G_A,   H = 2·PV[1/(4π²(r² − v²))]

Sign convention: G_R is supported where the B event lies on the future
lightcone of the A event, and the normalisation is the one for which
Δ = G_R + G_A and E = G_R − G_A hold together with the iε vacuum forms
W = 1/(4π²(r² − (v − iε)²)) and G_F = 1/(4π²(r² − v² − iε)). With it all six
relations W = ½H + (i/2)E, G_F = ½H + (i/2)Δ, Δ = G_R + G_A, E = G_R − G_A,
iG_R = W − G_F*, iG_A = G_F − W hold exactly between reduced kernels.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple, Union

import numpy as np

from errors import DomainError, SingularGeometryError


class KernelKind(str, Enum):
    WIGHTMAN = "Wightman"
    FEYNMAN = "Feynman"
    RETARDED = "Retarded"
    ADVANCED = "Advanced"
    SYMMETRIC_DELTA = "SymmetricDelta"
    CAUSAL_E = "CausalE"
    HADAMARD_H = "HadamardH"


@dataclass(frozen=True)
class DeltaTerm:
    location: float
    weight: complex


@dataclass(frozen=True)
class ReducedKernel:
    """pv_weight·PV[1/(4π²(r² − v²))] + Σ weight·δ(v − location)."""

    r: float
    pv_weight: complex = 0j
    deltas: Tuple[DeltaTerm, ...] = field(default_factory=tuple)

    def regular_part(self, v):
        return self.pv_weight / (4 * math.pi ** 2 * (self.r ** 2 - np.asarray(v) ** 2))

    def __add__(self, other: "ReducedKernel") -> "ReducedKernel":
        if other.r != self.r:
            raise DomainError("Cannot add kernels at different distances")
        weights = {}
        for d in self.deltas + other.deltas:
            weights[d.location] = weights.get(d.location, 0j) + d.weight
        deltas = tuple(DeltaTerm(loc, w) for loc, w in sorted(weights.items()) if w != 0)
        return ReducedKernel(self.r, self.pv_weight + other.pv_weight, deltas)

    def __sub__(self, other: "ReducedKernel") -> "ReducedKernel":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "ReducedKernel":
        return ReducedKernel(self.r, c * self.pv_weight, tuple(DeltaTerm(d.location, c * d.weight) for d in self.deltas))

    def conjugate(self) -> "ReducedKernel":
        return ReducedKernel(self.r, complex(self.pv_weight).conjugate(),
                             tuple(DeltaTerm(d.location, complex(d.weight).conjugate()) for d in self.deltas))

    def reflect(self) -> "ReducedKernel":
        """v → −v, i.e. exchange of the two arguments."""
        return ReducedKernel(self.r, self.pv_weight, tuple(DeltaTerm(-d.location, d.weight) for d in reversed(self.deltas)))

    def is_close(self, other: "ReducedKernel", tol: float = 1e-15) -> bool:
        diff = self - other
        scale = 1.0 / (4 * math.pi * self.r)
        return abs(diff.pv_weight) <= tol and all(abs(d.weight) <= tol * scale for d in diff.deltas)


def _check_distance(r: float) -> None:
    if not r > 0:
        raise SingularGeometryError(f"Spatial distance r = {r} must be positive")


def retarded_reduced(r: float) -> ReducedKernel:
    _check_distance(r)
    return ReducedKernel(r, 0j, (DeltaTerm(-r, 1 / (4 * math.pi * r) + 0j),))


def advanced_reduced(r: float) -> ReducedKernel:
    return retarded_reduced(r).reflect()


def wightman_reduced(r: float) -> ReducedKernel:
    _check_distance(r)
    w = 1j / (8 * math.pi * r)
    return ReducedKernel(r, 1 + 0j, (DeltaTerm(-r, w), DeltaTerm(r, -w)))


def feynman_reduced(r: float) -> ReducedKernel:
    _check_distance(r)
    w = 1j / (8 * math.pi * r)
    return ReducedKernel(r, 1 + 0j, (DeltaTerm(-r, w), DeltaTerm(r, w)))


def kernel_reduced(kind: Union[KernelKind, str], r: float) -> ReducedKernel:
    """Any ``KernelKind``, assembled exactly from the three primitives."""
    try:
        kind = KernelKind(kind)
    except ValueError:
        raise DomainError(f"Unknown kernel kind: {kind!r}") from None

    if kind is KernelKind.WIGHTMAN:
        return wightman_reduced(r)
    if kind is KernelKind.FEYNMAN:
        return feynman_reduced(r)
    if kind is KernelKind.RETARDED:
        return retarded_reduced(r)
    if kind is KernelKind.ADVANCED:
        return advanced_reduced(r)
    if kind is KernelKind.SYMMETRIC_DELTA:
        return retarded_reduced(r) + advanced_reduced(r)
    if kind is KernelKind.CAUSAL_E:
        return retarded_reduced(r) - advanced_reduced(r)
    # H = W + W* = 2·Re W
    w = wightman_reduced(r)
    return w + w.conjugate()


def regulated_kernel(kind: Union[KernelKind, str], v, r: float, eps: float) -> np.ndarray:
    """iε-regulated kernel values at lags ``v``; only used by the brute-force oracle."""
    kind = KernelKind(kind)
    v = np.asarray(v, dtype=float)
    w = 1.0 / (4 * math.pi ** 2 * (r ** 2 - (v - 1j * eps) ** 2))
    gf = 1.0 / (4 * math.pi ** 2 * (r ** 2 - v ** 2 - 2j * eps * r))
    if kind is KernelKind.WIGHTMAN:
        return w
    if kind is KernelKind.FEYNMAN:
        return gf
    g_ret = -1j * (w - gf.conj())
    g_adv = -1j * (gf - w)
    if kind is KernelKind.RETARDED:
        return g_ret
    if kind is KernelKind.ADVANCED:
        return g_adv
    if kind is KernelKind.SYMMETRIC_DELTA:
        return g_ret + g_adv
    if kind is KernelKind.CAUSAL_E:
        return g_ret - g_adv
    return w + w.conj()
