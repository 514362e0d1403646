"""Dark/bright dressed basis of the lower doublet and the dressed-state rate equations.

    |D⟩ = (√r2 |b⟩ − √r1 |c⟩)/√(r1+r2)
    |B⟩ = (√r1 |b⟩ + √r2 |c⟩)/√(r1+r2)

Dressed matrices use the level order (a, D, B).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Basis, DensityMatrix
from .errors import BasisMismatchError, RegimeError, ValidationError
from .steady import build_liouvillian


@dataclass(frozen=True)
class DressedBasis:
    r1: float
    r2: float

    def __post_init__(self):
        if not (math.isfinite(self.r1) and math.isfinite(self.r2)) or self.r1 < 0 or self.r2 < 0:
            raise ValidationError("non-negative rates", f"r1={self.r1!r}, r2={self.r2!r}")
        if not self.r1 + self.r2 > 0:
            raise ValidationError("r1 + r2 > 0", "dressed basis undefined without pumping")

    @classmethod
    def from_params(cls, params):
        return cls(params.r1, params.r2)

    @property
    def matrix(self):
        """Orthogonal U whose rows are ⟨a|, ⟨D|, ⟨B| in bare coordinates."""
        n = math.sqrt(self.r1 + self.r2)
        s1 = math.sqrt(self.r1) / n
        s2 = math.sqrt(self.r2) / n
        return np.array(
            [
                [1.0, 0.0, 0.0],
                [0.0, s2, -s1],
                [0.0, s1, s2],
            ]
        )


def to_dressed(basis, rho):
    if rho.basis is not Basis.BARE:
        raise BasisMismatchError("to_dressed expects a bare-basis state")
    U = basis.matrix
    return DensityMatrix(U @ rho.data @ U.T, Basis.DRESSED, trace_tol=1e-9, herm_tol=1e-9)


def to_bare(basis, rho):
    if rho.basis is not Basis.DRESSED:
        raise BasisMismatchError("to_bare expects a dressed-basis state")
    U = basis.matrix
    return DensityMatrix(U.T @ rho.data @ U, Basis.BARE, trace_tol=1e-9, herm_tol=1e-9)


def dressed_populations(basis, rho):
    """(ρ_DD, ρ_BB) without building a full DensityMatrix."""
    U = basis.matrix
    m = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    d = U[1] @ m @ U[1]
    b = U[2] @ m @ U[2]
    return float(d.real), float(b.real)


@dataclass(frozen=True)
class DressedRateSet:
    d_DD: float
    d_BB: float
    d_aa: float
    d_DB: complex


def dressed_rates(params, rho):
    """Rates of change of ρ_DD, ρ_BB, ρ_aa, ρ_DB at ``rho`` (valid for p=1, Δ=0)."""
    if not params.is_ideal():
        raise RegimeError("dressed rate equations hold only for p=1 and delta=0")
    basis = DressedBasis.from_params(params)
    if rho.basis is Basis.BARE:
        rho = to_dressed(basis, rho)
    r1, r2, g1, g2 = params.rates
    n = r1 + r2
    aa = rho.entry("a", "a").real
    BB = rho.entry("B", "B").real
    DB = rho.entry("D", "B")
    d_DD = (math.sqrt(r2 * g1) - math.sqrt(r1 * g2)) ** 2 * aa / n
    d_BB = ((math.sqrt(r1 * g1) + math.sqrt(r2 * g2)) ** 2 + n**2) * aa / n - n * BB
    d_aa = -(r1 + g1 + r2 + g2) * aa + n * BB
    d_DB = ((g1 - g2) * math.sqrt(r1 * r2) - (r1 - r2) * math.sqrt(g1 * g2)) / n * aa - 0.5 * n * DB
    return DressedRateSet(d_DD=d_DD, d_BB=d_BB, d_aa=d_aa, d_DB=complex(d_DB))


def dressed_generator(params, basis=None):
    """9x9 generator acting on row-major vec of the dressed-basis density matrix."""
    basis = basis or DressedBasis.from_params(params)
    T = np.kron(basis.matrix, basis.matrix)
    return T @ build_liouvillian(params) @ T.T


def decay_rates(params):
    """Relaxation rates read off the dressed equations: bright population,
    D–B coherence and upper level.

    These are the diagonal entries of the dressed generator; only the D–B
    rate is also an eigenvalue, since ρ_aa and ρ_BB feed each other.
    """
    L = dressed_generator(params)
    aa, BB, DB = 0, 3 * 2 + 2, 3 * 1 + 2
    return {
        "bright": float(-L[BB, BB].real),
        "coherence_DB": float(-L[DB, DB].real),
        "upper": float(-L[aa, aa].real),
    }
