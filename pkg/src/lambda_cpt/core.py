"""Domain types and the reduced master equations of the incoherently pumped Λ atom.

Levels are ordered ``(a, b, c)``: ``a`` is the upper level, ``b`` and ``c`` the
lower doublet. Pump rates ``r1``/``r2`` and decay rates ``gamma1``/``gamma2``
belong to the ``a-b`` and ``a-c`` transitions respectively.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import BasisMismatchError, ValidationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-9
PSD_WARN = 1e-6

BARE_LABELS = ("a", "b", "c")
DRESSED_LABELS = ("a", "D", "B")


class Basis(enum.Enum):
    BARE = "bare"
    DRESSED = "dressed"

    @property
    def labels(self):
        return BARE_LABELS if self is Basis.BARE else DRESSED_LABELS


@dataclass(frozen=True)
class SystemParams:
    """Reduced pump/decay rates, dipole alignment ``p`` and lower-doublet detuning."""

    r1: float = 0.0
    r2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    p: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        for name in ("r1", "r2", "gamma1", "gamma2", "p", "delta"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ValidationError("finite rates", f"{name}={value!r} is not a real number")
            if not math.isfinite(value):
                raise ValidationError("finite rates", f"{name}={value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("r1", "r2", "gamma1", "gamma2"):
            if getattr(self, name) < 0:
                raise ValidationError("non-negative rates", f"{name}={getattr(self, name)!r}")
        if not -1.0 <= self.p <= 1.0:
            raise ValidationError("p ∈ [−1,1]", f"p={self.p!r}")

    @property
    def rates(self):
        return (self.r1, self.r2, self.gamma1, self.gamma2)

    def is_frozen(self):
        """True when nothing moves: all rates zero and no detuning."""
        return max(self.rates) == 0.0 and self.delta == 0.0

    def is_ideal(self, tol=1e-12):
        """Parallel dipoles and degenerate lower doublet (p=1, Δ=0)."""
        return abs(self.p - 1.0) <= tol and abs(self.delta) <= tol

    def is_degenerate(self, tol=1e-12):
        """Symmetric multi-steady regime: r1=r2, γ1=γ2, p=1, Δ=0."""
        scale = max(1.0, *self.rates)
        return (
            self.is_ideal(tol)
            and abs(self.r1 - self.r2) <= tol * scale
            and abs(self.gamma1 - self.gamma2) <= tol * scale
        )

    def time_unit(self):
        """Physical duration of one reported time unit.

        Times are measured in units of 1/γ1; if γ1 is zero the fastest rate is
        used instead, and 1 when every rate vanishes.
        """
        if self.gamma1 > 0:
            return 1.0 / self.gamma1
        fastest = max(self.rates)
        return 1.0 / fastest if fastest > 0 else 1.0

    def scaled(self, factor):
        """Rates and detuning multiplied by ``factor`` (a change of time unit)."""
        return replace(
            self,
            r1=self.r1 * factor,
            r2=self.r2 * factor,
            gamma1=self.gamma1 * factor,
            gamma2=self.gamma2 * factor,
            delta=self.delta * factor,
        )


def _as_matrix(data):
    arr = np.array(data, dtype=complex)
    if arr.shape != (3, 3):
        raise ValidationError("3x3 shape", f"got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("finite entries")
    return arr


def _restore_density(data, basis):
    rho = object.__new__(DensityMatrix)
    data.setflags(write=False)
    object.__setattr__(rho, "_data", data)
    object.__setattr__(rho, "basis", Basis(basis))
    return rho


class DensityMatrix:
    """Immutable 3x3 Hermitian, unit-trace density matrix tagged with its basis.

    Hermiticity and trace are enforced at construction; positivity is only
    recorded (``min_eigenvalue``) since the printed equations need not
    preserve it away from p=1, Δ=0.
    """

    __slots__ = ("_data", "basis")

    def __init__(self, data, basis=Basis.BARE, *, trace_tol=TRACE_TOL, herm_tol=HERMITIAN_TOL):
        arr = _as_matrix(data)
        herm_err = float(np.max(np.abs(arr - arr.conj().T)))
        if herm_err > herm_tol:
            raise ValidationError("Hermitian", f"max |ρ - ρ†| = {herm_err:.3e}")
        trace_err = abs(np.trace(arr) - 1.0)
        if trace_err > trace_tol:
            raise ValidationError("unit trace", f"|tr ρ - 1| = {trace_err:.3e}")
        arr.setflags(write=False)
        object.__setattr__(self, "_data", arr)
        object.__setattr__(self, "basis", Basis(basis))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __reduce__(self):
        # already validated, possibly under looser tolerances; skip the checks on unpickling
        return _restore_density, (np.array(self._data), self.basis.value)

    @classmethod
    def from_entries(cls, aa=0.0, bb=0.0, cc=0.0, ab=0.0, ac=0.0, bc=0.0, basis=Basis.BARE, **kw):
        """Build from the upper-triangle entries; the lower triangle follows by conjugation."""
        m = np.array(
            [
                [aa, ab, ac],
                [np.conj(ab), bb, bc],
                [np.conj(ac), np.conj(bc), cc],
            ],
            dtype=complex,
        )
        return cls(m, basis, **kw)

    @property
    def data(self):
        return self._data

    def to_array(self):
        return self._data.copy()

    def entry(self, i, j):
        labels = self.basis.labels
        return complex(self._data[labels.index(i), labels.index(j)])

    def __getitem__(self, key):
        return self._data[key]

    @property
    def aa(self):
        return float(self._data[0, 0].real)

    @property
    def bb(self):
        return float(self._data[1, 1].real)

    @property
    def cc(self):
        return float(self._data[2, 2].real)

    @property
    def ab(self):
        return complex(self._data[0, 1])

    @property
    def ac(self):
        return complex(self._data[0, 2])

    @property
    def bc(self):
        return complex(self._data[1, 2])

    @property
    def lower_block(self):
        return self._data[1:, 1:].copy()

    @property
    def trace_error(self):
        return float(abs(np.trace(self._data) - 1.0))

    @property
    def hermiticity_error(self):
        return float(np.max(np.abs(self._data - self._data.conj().T)))

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self._data)[0])

    def c0(self):
        """Value of ρ_aa + ρ_bc + ρ_cb (conserved in the symmetric regime)."""
        return float(self._data[0, 0].real + 2.0 * self._data[1, 2].real)

    def allclose(self, other, atol=1e-12):
        other_data = other.data if isinstance(other, DensityMatrix) else np.asarray(other)
        return bool(np.max(np.abs(self._data - other_data)) <= atol)

    def __repr__(self):
        return f"DensityMatrix(basis={self.basis.value}, data={np.array2string(self._data, precision=6)})"


class DerivativeMatrix:
    """dρ/dt in the bare basis; traceless and Hermitian by construction."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = _as_matrix(data)
        arr.setflags(write=False)
        object.__setattr__(self, "_data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DerivativeMatrix is immutable")

    @property
    def data(self):
        return self._data

    def entry(self, i, j):
        return complex(self._data[BARE_LABELS.index(i), BARE_LABELS.index(j)])

    def __getitem__(self, key):
        return self._data[key]

    @property
    def trace(self):
        return complex(np.trace(self._data))

    def max_norm(self):
        return float(np.max(np.abs(self._data)))

    def __repr__(self):
        return f"DerivativeMatrix({np.array2string(self._data, precision=6)})"


def rhs_array(params, rho):
    """Right-hand side of the master equations on a raw 3x3 array (no validation)."""
    r1, r2, g1, g2, p, delta = params.r1, params.r2, params.gamma1, params.gamma2, params.p, params.delta
    s_r = p * math.sqrt(r1 * r2)
    s_g = p * math.sqrt(g1 * g2)

    aa = rho[0, 0]
    bb = rho[1, 1]
    cc = rho[2, 2]
    ab = rho[0, 1]
    ac = rho[0, 2]
    bc = rho[1, 2]
    cb = rho[2, 1]
    coh = bc + cb

    d_aa = -(g1 + g2 + r1 + r2) * aa + r1 * bb + r2 * cc + s_r * coh
    d_cc = g2 * aa + r2 * (aa - cc) - 0.5 * s_r * coh
    d_bb = g1 * aa + r1 * (aa - bb) - 0.5 * s_r * coh
    d_ab = -0.5 * (g1 + g2 + 2 * r1 + r2) * ab - 0.5 * s_r * ac
    d_ac = -0.5 * (g1 + g2 + r1 + 2 * r2) * ac - 0.5 * s_r * ab
    d_bc = -0.5 * (r1 + r2) * bc + s_g * aa + 0.5 * s_r * (2 * aa - bb - cc) + 1j * delta * bc

    out = np.empty((3, 3), dtype=complex)
    out[0, 0] = d_aa
    out[1, 1] = d_bb
    out[2, 2] = d_cc
    out[0, 1] = d_ab
    out[0, 2] = d_ac
    out[1, 2] = d_bc
    out[1, 0] = np.conj(d_ab)
    out[2, 0] = np.conj(d_ac)
    out[2, 1] = np.conj(d_bc)
    # populations are real for Hermitian input; drop rounding residue
    for k in range(3):
        out[k, k] = out[k, k].real
    return out


def rhs(params, rho):
    """Evaluate dρ/dt for a bare-basis density matrix.

    Raises BasisMismatchError for dressed-basis input.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    if rho.basis is not Basis.BARE:
        raise BasisMismatchError("rhs expects a bare-basis density matrix")
    out = rhs_array(params, rho.data)
    scale = max(1.0, float(np.max(np.abs(out))))
    tr = abs(np.trace(out))
    if tr > 1e-14 * scale:
        raise ValidationError("probability conservation", f"|tr dρ/dt| = {tr:.3e}")
    return DerivativeMatrix(out)


@dataclass(frozen=True)
class ObservableSet:
    rho_aa: float
    rho_bb: float
    rho_cc: float
    inv_ab: float
    inv_ac: float
    re_rho_bc: float
    im_rho_bc: float

    def as_dict(self):
        return {
            "rho_aa": self.rho_aa,
            "rho_bb": self.rho_bb,
            "rho_cc": self.rho_cc,
            "inv_ab": self.inv_ab,
            "inv_ac": self.inv_ac,
            "re_rho_bc": self.re_rho_bc,
            "im_rho_bc": self.im_rho_bc,
        }

    def as_tuple(self):
        return tuple(self.as_dict().values())


def observables(rho):
    """Populations, inversions ρ_aa−ρ_bb and ρ_aa−ρ_cc, and the lower-level coherence."""
    if rho.basis is not Basis.BARE:
        raise BasisMismatchError("observables are defined in the bare basis")
    return ObservableSet(
        rho_aa=rho.aa,
        rho_bb=rho.bb,
        rho_cc=rho.cc,
        inv_ab=rho.aa - rho.bb,
        inv_ac=rho.aa - rho.cc,
        re_rho_bc=rho.bc.real,
        im_rho_bc=rho.bc.imag,
    )


# Reference states

def diag_state(aa, bb, cc):
    return DensityMatrix.from_entries(aa=aa, bb=bb, cc=cc)


def robust_state():
    """Lower doublet in (|b⟩ − |c⟩)/√2: ρ_bb=ρ_cc=1/2, ρ_bc=−1/2."""
    return DensityMatrix.from_entries(bb=0.5, cc=0.5, bc=-0.5)


def weak_state():
    """Lower doublet in (|b⟩ + |c⟩)/√2: ρ_bb=ρ_cc=1/2, ρ_bc=+1/2."""
    return DensityMatrix.from_entries(bb=0.5, cc=0.5, bc=0.5)
