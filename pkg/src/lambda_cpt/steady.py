"""Steady states: closed-form CPT solution, Liouvillian null space, symmetric-regime limit."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Basis, DensityMatrix, rhs_array
from .errors import BasisMismatchError, RegimeError, UniquenessError

RANK_TOL = 1e-9
CLASSIFY_TOL = 1e-6

A, B, C = 0, 1, 2


def _ix(i, j):
    return 3 * i + j


class Provenance(enum.Enum):
    ANALYTIC_CPT = "AnalyticCPT"
    NULL_SPACE = "NullSpace"
    DEGENERATE_CLOSED_FORM = "DegenerateClosedForm"
    INTEGRATED = "Integrated"


class Classification(enum.Enum):
    CPT_GENERIC = "CPTGeneric"
    ROBUST = "Robust"
    WEAK = "Weak"
    OTHER = "Other"


@dataclass(frozen=True)
class UniquenessReport:
    discriminant: float
    product: float
    unique: bool
    null_space_dim: int
    analytic_applies: bool = True
    consistent: bool = True

    def as_dict(self):
        return {
            "discriminant": self.discriminant,
            "product": self.product,
            "unique": self.unique,
            "null_space_dim": self.null_space_dim,
            "analytic_applies": self.analytic_applies,
            "consistent": self.consistent,
        }


@dataclass(frozen=True)
class SteadyStateReport:
    state: DensityMatrix
    provenance: Provenance
    classification: Classification
    residual: float
    c0: float | None = None
    notes: tuple = field(default_factory=tuple)

    def as_dict(self):
        s = self.state
        return {
            "rho_aa": s.aa,
            "rho_bb": s.bb,
            "rho_cc": s.cc,
            "re_rho_bc": s.bc.real,
            "im_rho_bc": s.bc.imag,
            "re_rho_ab": s.ab.real,
            "im_rho_ab": s.ab.imag,
            "re_rho_ac": s.ac.real,
            "im_rho_ac": s.ac.imag,
            "provenance": self.provenance.value,
            "classification": self.classification.value,
            "residual": self.residual,
            "c0": self.c0,
            "notes": list(self.notes),
        }


def build_liouvillian(params):
    """Complex 9x9 generator L with vec(dρ/dt) = L @ vec(ρ), row-major vec.

    Written out entry by entry from the master equations, including the
    conjugate equations for ρ_ba, ρ_ca, ρ_cb, so it acts correctly on
    non-Hermitian input too.
    """
    r1, r2, g1, g2, p, delta = params.r1, params.r2, params.gamma1, params.gamma2, params.p, params.delta
    s_r = p * math.sqrt(r1 * r2)
    s_g = p * math.sqrt(g1 * g2)
    L = np.zeros((9, 9), dtype=complex)

    aa, bb, cc = _ix(A, A), _ix(B, B), _ix(C, C)
    bc, cb = _ix(B, C), _ix(C, B)

    L[aa, aa] = -(g1 + g2 + r1 + r2)
    L[aa, bb] = r1
    L[aa, cc] = r2
    L[aa, bc] = L[aa, cb] = s_r

    L[cc, aa] = g2 + r2
    L[cc, cc] = -r2
    L[cc, bc] = L[cc, cb] = -0.5 * s_r

    L[bb, aa] = g1 + r1
    L[bb, bb] = -r1
    L[bb, bc] = L[bb, cb] = -0.5 * s_r

    for (x, y) in ((A, B), (B, A)):
        L[_ix(x, y), _ix(x, y)] = -0.5 * (g1 + g2 + 2 * r1 + r2)
        L[_ix(x, y), _ix(*((A, C) if x == A else (C, A)))] = -0.5 * s_r
    for (x, y) in ((A, C), (C, A)):
        L[_ix(x, y), _ix(x, y)] = -0.5 * (g1 + g2 + r1 + 2 * r2)
        L[_ix(x, y), _ix(*((A, B) if x == A else (B, A)))] = -0.5 * s_r

    for row, sign in ((bc, 1.0), (cb, -1.0)):
        L[row, row] = -0.5 * (r1 + r2) + sign * 1j * delta
        L[row, aa] = s_g + s_r
        L[row, bb] = -0.5 * s_r
        L[row, cc] = -0.5 * s_r
    return L


# Real coordinates of Hermitian 3x3 matrices:
# (ρaa, ρbb, ρcc, Re ρab, Im ρab, Re ρac, Im ρac, Re ρbc, Im ρbc)
_OFFDIAG = ((A, B), (A, C), (B, C))


def hermitian_to_real(m):
    m = np.asarray(m)
    out = [m[0, 0].real, m[1, 1].real, m[2, 2].real]
    for i, j in _OFFDIAG:
        out += [m[i, j].real, m[i, j].imag]
    return np.array(out, dtype=float)


def real_to_hermitian(v):
    m = np.zeros((3, 3), dtype=complex)
    m[0, 0], m[1, 1], m[2, 2] = v[0], v[1], v[2]
    for k, (i, j) in enumerate(_OFFDIAG):
        z = v[3 + 2 * k] + 1j * v[4 + 2 * k]
        m[i, j] = z
        m[j, i] = np.conj(z)
    return m


def real_generator(params):
    """9x9 real generator on the Hermitian coordinates above, derived from ``build_liouvillian``."""
    L = build_liouvillian(params)
    M = np.zeros((9, 9))
    for k in range(9):
        e = np.zeros(9)
        e[k] = 1.0
        d = (L @ real_to_hermitian(e).reshape(9)).reshape(3, 3)
        M[:, k] = hermitian_to_real(d)
    return M


# off-diagonal coordinates scaled by √2 turn the Hilbert–Schmidt norm into the Euclidean one
_HS_WEIGHTS = np.array([1.0, 1.0, 1.0] + [math.sqrt(2.0)] * 6)


def _hs_coords(m):
    return hermitian_to_real(m) * _HS_WEIGHTS


@dataclass(frozen=True)
class NullSpaceResult:
    """Kernel of the generator on Hermitian matrices.

    ``basis`` holds Hilbert–Schmidt orthonormal Hermitian matrices spanning
    the kernel; ``states`` holds unit-trace states when they are determined
    (one when the kernel is one-dimensional).
    """

    dimension: int
    basis: tuple
    singular_values: np.ndarray
    ambiguous: bool
    states: tuple

    def residual(self, rho):
        """Distance from ``rho`` to the kernel span (0 when ρ is steady)."""
        v = _hs_coords(rho.data if isinstance(rho, DensityMatrix) else rho)
        if not self.basis:
            return float(np.linalg.norm(v))
        Q = np.column_stack([_hs_coords(b) for b in self.basis])
        return float(np.linalg.norm(v - Q @ (Q.T @ v)))


def null_space_steady(params, rank_tol=RANK_TOL):
    """SVD null space of the generator; ``rank_tol`` is relative to the largest singular value.

    Singular values within a factor of 10 of the threshold make the rank
    ambiguous; this is flagged on the result and warned about.
    """
    M = real_generator(params)
    w = _HS_WEIGHTS
    Mw = (M * w[:, None]) / w[None, :]
    _, s, vt = np.linalg.svd(Mw)
    smax = s[0]
    if smax == 0.0:
        null_idx = list(range(9))
        ambiguous = False
    else:
        thresh = rank_tol * smax
        null_idx = [k for k in range(9) if s[k] <= thresh]
        ambiguous = bool(np.any((s > thresh / 10) & (s < thresh * 10)))
    if ambiguous:
        warnings.warn(
            f"null-space rank ambiguous: singular values {s} straddle {rank_tol:g}*smax",
            RuntimeWarning,
            stacklevel=2,
        )
    basis = tuple(real_to_hermitian(vt[k] / w) for k in null_idx)
    states = ()
    if len(basis) == 1:
        m = basis[0]
        tr = np.trace(m).real
        if abs(tr) > 1e-12:
            m = m / tr
            m = 0.5 * (m + m.conj().T)
            states = (DensityMatrix(m, trace_tol=1e-10, herm_tol=1e-10),)
    return NullSpaceResult(
        dimension=len(basis),
        basis=basis,
        singular_values=s,
        ambiguous=ambiguous,
        states=states,
    )


def discriminant(params):
    r1, r2, g1, g2 = params.rates
    return r2 * g1 + r1 * g2 - 2.0 * math.sqrt(r1 * r2 * g1 * g2)


def uniqueness(params, rank_tol=RANK_TOL):
    """Closed-form uniqueness test, cross-checked against the numerical kernel dimension.

    ``rank_tol`` is scaled by the square of the largest rate since both the
    discriminant and r1·r2 carry units of rate².
    """
    disc = discriminant(params)
    product = params.r1 * params.r2
    scale = max(1.0, *params.rates) ** 2
    unique = abs(disc) > rank_tol * scale and product > rank_tol * scale
    dim = null_space_steady(params, rank_tol).dimension
    applies = params.is_ideal()
    consistent = (not applies) or (unique == (dim == 1))
    if not consistent:
        warnings.warn(
            f"closed-form uniqueness ({unique}) disagrees with kernel dimension {dim}",
            RuntimeWarning,
            stacklevel=2,
        )
    return UniquenessReport(
        discriminant=disc,
        product=product,
        unique=unique,
        null_space_dim=dim,
        analytic_applies=applies,
        consistent=consistent,
    )


def residual(params, rho):
    return float(np.max(np.abs(rhs_array(params, rho.data))))


def classify(state, tol=CLASSIFY_TOL):
    """Label a (steady) state as Robust, Weak, CPTGeneric or Other."""
    if state.basis is not Basis.BARE:
        raise BasisMismatchError("classify expects a bare-basis state")
    block = state.lower_block
    robust = np.array([[0.5, -0.5], [-0.5, 0.5]])
    weak = np.array([[0.5, 0.5], [0.5, 0.5]])
    if np.max(np.abs(block - robust)) <= tol:
        return Classification.ROBUST
    if np.max(np.abs(block - weak)) <= tol:
        return Classification.WEAK
    dark = -math.sqrt(max(state.bb, 0.0) * max(state.cc, 0.0))
    if abs(state.aa) <= tol and abs(state.bc - dark) <= tol:
        return Classification.CPT_GENERIC
    return Classification.OTHER


def cpt_state(r1, r2):
    """Pure dark state of the lower doublet for pump rates (r1, r2)."""
    n = r1 + r2
    return DensityMatrix.from_entries(
        bb=r2 / n,
        cc=r1 / n,
        bc=-math.sqrt(r1 * r2) / n,
    )


def analytic_cpt(params, rank_tol=RANK_TOL):
    """Closed-form CPT steady state (requires p=1, Δ=0 and the uniqueness condition)."""
    if not params.is_ideal():
        raise RegimeError("closed-form CPT solution requires p=1 and Δ=0")
    disc = discriminant(params)
    scale = max(1.0, *params.rates) ** 2
    if abs(disc) <= rank_tol * scale or params.r1 * params.r2 <= rank_tol * scale:
        raise UniquenessError(
            f"uniqueness condition violated (discriminant={disc:.3e}, r1*r2={params.r1 * params.r2:.3e}); "
            "use degenerate_steady or null_space_steady with an initial condition"
        )
    state = cpt_state(params.r1, params.r2)
    return SteadyStateReport(
        state=state,
        provenance=Provenance.ANALYTIC_CPT,
        classification=classify(state),
        residual=residual(params, state),
    )


def long_time_coherence(r, gamma, c0):
    """Limit of Re ρ_bc in the symmetric regime for conserved value ``c0``."""
    return ((3 * r + 2 * gamma) * c0 - r) / (4 * (2 * r + gamma))


def degenerate_steady(params, initial):
    """Long-time state in the symmetric regime (r1=r2=r, γ1=γ2=γ, p=1, Δ=0).

    The limit is fixed by the conserved C₀ = ρ_aa + 2 Re ρ_bc. For r>0 the
    population difference ρ_bb−ρ_cc and Im ρ_bc decay at rate r; at r=0 both
    are conserved and carried over from ``initial``.
    """
    if not params.is_degenerate():
        raise RegimeError("degenerate_steady requires r1=r2, gamma1=gamma2, p=1, delta=0")
    if initial.basis is not Basis.BARE:
        raise BasisMismatchError("initial state must be in the bare basis")
    r = 0.5 * (params.r1 + params.r2)
    g = 0.5 * (params.gamma1 + params.gamma2)
    c0 = initial.c0()

    if r == 0.0 and g == 0.0:
        state = initial
    else:
        if r > 0.0:
            aa = r * (c0 + 1.0) / (2 * g + 4 * r)
            re_bc = long_time_coherence(r, g, c0)
            im_bc = 0.0
            diff = 0.0
        else:
            aa = 0.0
            re_bc = 0.5 * c0
            im_bc = initial.bc.imag
            diff = initial.bb - initial.cc
        # trace of the initial state is 1 within tolerance; keep it exact here
        lower = 1.0 - aa
        state = DensityMatrix.from_entries(
            aa=aa,
            bb=0.5 * (lower + diff),
            cc=0.5 * (lower - diff),
            bc=complex(re_bc, im_bc),
        )
    return SteadyStateReport(
        state=state,
        provenance=Provenance.DEGENERATE_CLOSED_FORM,
        classification=classify(state),
        residual=residual(params, state),
        c0=c0,
    )
