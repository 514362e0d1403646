"""Explicit Runge–Kutta time evolution with steady-state detection.

All times handled here are in units of ``params.time_unit()`` (1/γ1 when γ1>0).
The propagation runs on the 9x9 generator from ``build_liouvillian``, which
is checked against the entrywise master equations in the test suite.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import PSD_WARN, Basis, DensityMatrix, ObservableSet, observables
from .errors import BasisMismatchError, NumericalError, StepUnderflowError, ValidationError
from .steady import build_liouvillian

SAMPLE_TRACE_TOL = 1e-9
SAMPLE_HERM_TOL = 1e-9
CONVERGENCE_STREAK = 10
# h·|λ|max bound for the adaptive stepper; inside the DP5 stability region
STABILITY_FRACTION = 2.0


class Method(enum.Enum):
    FIXED_RK4 = "FixedRK4"
    ADAPTIVE_RK45 = "AdaptiveRK45"


@dataclass(frozen=True)
class IntegratorConfig:
    method: Method = Method.ADAPTIVE_RK45
    step: float = 1e-3
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    horizon: float = 20.0
    convergence_norm_tol: float = 1e-10
    sample_stride: int = 1
    stop_at_convergence: bool = True
    max_step: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        for name in ("step", "abs_tol", "rel_tol", "horizon", "convergence_norm_tol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError("positive step, horizon and tolerances", f"{name}={value!r}")
        if self.max_step is not None and not self.max_step > 0:
            raise ValidationError("positive step, horizon and tolerances", f"max_step={self.max_step!r}")
        if not (isinstance(self.sample_stride, int) and self.sample_stride >= 1):
            raise ValidationError("sample_stride >= 1", f"sample_stride={self.sample_stride!r}")


@dataclass(frozen=True)
class Sample:
    t: float
    state: DensityMatrix
    obs: ObservableSet
    trace_err: float
    herm_err: float
    min_eig: float
    c0: float | None = None


@dataclass(frozen=True)
class Trajectory:
    samples: tuple
    converged_at: float | None
    time_unit: float
    steps: int = 0
    rejected: int = 0

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def final(self):
        return self.samples[-1]

    @property
    def final_state(self):
        return self.samples[-1].state

    def observable_matrix(self):
        return np.array([s.obs.as_tuple() for s in self.samples])

    def max_trace_error(self):
        return max(s.trace_err for s in self.samples)

    def max_hermiticity_error(self):
        return max(s.herm_err for s in self.samples)

    def min_eigenvalue(self):
        return min(s.min_eig for s in self.samples)

    def c0_drift(self):
        values = [s.c0 for s in self.samples if s.c0 is not None]
        if not values:
            return None
        return max(abs(v - values[0]) for v in values)


# Dormand–Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4
_DP_AM = np.zeros((7, 7))
for _i, _row in enumerate(_DP_A):
    _DP_AM[_i, : len(_row)] = _row


def _rk4_vec(L, y, h):
    k1 = L @ y
    k2 = L @ (y + 0.5 * h * k1)
    k3 = L @ (y + 0.5 * h * k2)
    k4 = L @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk45_vec(L, y, h, abs_tol, rel_tol):
    """One Dormand–Prince attempt. Returns (y_new, err_norm); err_norm <= 1 means accept."""
    k = np.empty((7, y.size), dtype=complex)
    k[0] = L @ y
    hA = h * _DP_AM
    for i in range(1, 7):
        k[i] = L @ (y + hA[i, :i] @ k[:i])
    y_new = y + h * (_DP_B5 @ k)
    err = h * (_DP_E @ k)
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    ratio = np.abs(err) / scale
    err_norm = math.sqrt(float(ratio @ ratio) / ratio.size)
    return y_new, err_norm


class _DPCache:
    """Dormand–Prince step for a fixed linear generator.

    For dy/dt = L y every stage is linear in y, so one attempt of size h is
    y_new = P(h) y and err = E(h) y. The matrices are rebuilt only when h
    changes, which is rare once the step sits at the stability cap.
    """

    def __init__(self, L):
        self.L = L
        self.h = None

    def _build(self, h):
        n = self.L.shape[0]
        eye = np.eye(n, dtype=complex)
        K = np.empty((7, n, n), dtype=complex)
        hA = h * _DP_AM
        K[0] = self.L
        for i in range(1, 7):
            K[i] = self.L @ (eye + np.tensordot(hA[i, :i], K[:i], axes=1))
        self.P = eye + h * np.tensordot(_DP_B5, K, axes=1)
        self.E = h * np.tensordot(_DP_E, K, axes=1)
        self.h = h

    def attempt(self, y, h, abs_tol, rel_tol):
        if h != self.h:
            self._build(h)
        y_new = self.P @ y
        err = self.E @ y
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = np.abs(err) / scale
        return y_new, math.sqrt(float(ratio @ ratio) / ratio.size)


def _next_step(h, err_norm, accepted):
    if err_norm == 0.0:
        return h * 5.0
    factor = 0.9 * err_norm ** -0.2
    if accepted:
        return h * min(5.0, max(0.2, factor))
    return h * min(0.9, max(0.2, factor))


def _symmetrize(m):
    return 0.5 * (m + m.conj().T)


def _check_bare(rho):
    if rho.basis is not Basis.BARE:
        raise BasisMismatchError("integration runs in the bare basis")


def step_rk4(params, rho, h):
    """Classical RK4 step of length ``h`` (physical time), Hermiticity restored afterwards."""
    if not h > 0:
        raise ValidationError("h > 0", f"h={h!r}")
    _check_bare(rho)
    y = _rk4_vec(build_liouvillian(params), rho.data.reshape(9), h)
    return DensityMatrix(_symmetrize(y.reshape(3, 3)), trace_tol=SAMPLE_TRACE_TOL)


def step_rk45(params, rho, h, tols=(1e-10, 1e-8)):
    """Embedded Dormand–Prince 5(4) step.

    Returns ``(state, error_estimate, h_next)``. On rejection the input state
    is returned unchanged and ``h_next < h``.
    """
    if not h > 0:
        raise ValidationError("h > 0", f"h={h!r}")
    _check_bare(rho)
    abs_tol, rel_tol = tols
    y_new, err = _rk45_vec(build_liouvillian(params), rho.data.reshape(9), h, abs_tol, rel_tol)
    accepted = err <= 1.0
    h_next = _next_step(h, err, accepted)
    if not accepted:
        return rho, err, h_next
    return DensityMatrix(_symmetrize(y_new.reshape(3, 3)), trace_tol=SAMPLE_TRACE_TOL), err, h_next


class _Recorder:
    def __init__(self, degenerate):
        self.degenerate = degenerate
        self.samples = []
        self.warned = False

    def add(self, t, m, herm_err):
        state = DensityMatrix(m, trace_tol=SAMPLE_TRACE_TOL, herm_tol=SAMPLE_HERM_TOL)
        min_eig = state.min_eigenvalue
        if min_eig < -PSD_WARN and not self.warned:
            warnings.warn(
                f"density matrix lost positivity at t={t:.6g} (min eigenvalue {min_eig:.3e})",
                RuntimeWarning,
                stacklevel=3,
            )
            self.warned = True
        self.samples.append(
            Sample(
                t=t,
                state=state,
                obs=observables(state),
                trace_err=state.trace_error,
                herm_err=herm_err,
                min_eig=min_eig,
                c0=state.c0() if self.degenerate else None,
            )
        )


def integrate(params, initial, config=None):
    """Evolve ``initial`` over ``[0, config.horizon]``.

    Stops early once the max-entry norm of dρ/dt stays below
    ``convergence_norm_tol`` for 10 consecutive states (when
    ``stop_at_convergence``); ``converged_at`` is the time the streak began.
    """
    config = config or IntegratorConfig()
    _check_bare(initial)
    unit = params.time_unit()
    L = build_liouvillian(params.scaled(unit))
    adaptive = config.method is Method.ADAPTIVE_RK45
    max_step = config.max_step or config.horizon
    radius = float(np.max(np.abs(np.linalg.eigvals(L))))
    if adaptive and radius > 0:
        # without this the controller parks h on the stability boundary and
        # the residual never falls below the convergence threshold
        max_step = min(max_step, STABILITY_FRACTION / radius)

    rec = _Recorder(params.is_degenerate())
    y = initial.data.reshape(9).astype(complex)
    t = 0.0
    rec.add(t, y.reshape(3, 3).copy(), initial.hermiticity_error)

    streak = 0
    streak_start = None
    converged_at = None

    def note_norm(t_now, y_now):
        nonlocal streak, streak_start, converged_at
        if float(np.max(np.abs(L @ y_now))) < config.convergence_norm_tol:
            if streak == 0:
                streak_start = t_now
            streak += 1
            if streak >= CONVERGENCE_STREAK and converged_at is None:
                converged_at = streak_start
        else:
            streak = 0

    note_norm(t, y)

    if adaptive:
        h = min(config.step, max_step)
        n_fixed = None
    else:
        n_fixed = max(1, math.ceil(config.horizon / config.step - 1e-9))
        h = config.horizon / n_fixed

    dp = _DPCache(L) if adaptive else None
    steps = rejected = 0
    last_recorded = 0
    while True:
        if converged_at is not None and config.stop_at_convergence:
            break
        if adaptive:
            if t >= config.horizon * (1 - 1e-14):
                break
            h_try = min(h, config.horizon - t)
            if h_try < 16 * np.finfo(float).eps * max(1.0, t):
                raise StepUnderflowError(f"step size underflow at t={t:.6g} (h={h_try:.3e})")
            y_new, err = dp.attempt(y, h_try, config.abs_tol, config.rel_tol)
            if not math.isfinite(err):
                raise NumericalError(f"non-finite state at t={t:.6g}")
            accepted = err <= 1.0
            h = min(_next_step(h_try, err, accepted), max_step)
            if not accepted:
                rejected += 1
                continue
            t = config.horizon if h_try == config.horizon - t else t + h_try
        else:
            if steps >= n_fixed:
                break
            y_new = _rk4_vec(L, y, h)
            t = (steps + 1) * h
        steps += 1
        if not np.all(np.isfinite(y_new)):
            raise NumericalError(f"non-finite state at t={t:.6g}")
        m = y_new.reshape(3, 3)
        herm_err = float(np.max(np.abs(m - m.conj().T)))
        m = _symmetrize(m)
        y = m.reshape(9)
        note_norm(t, y)
        done = (converged_at is not None and config.stop_at_convergence) or (
            t >= config.horizon * (1 - 1e-14) if adaptive else steps >= n_fixed
        )
        if steps % config.sample_stride == 0 or done:
            rec.add(t, m.copy(), herm_err)
            last_recorded = steps
    if last_recorded != steps:
        m = y.reshape(3, 3)
        rec.add(t, m.copy(), 0.0)

    return Trajectory(
        samples=tuple(rec.samples),
        converged_at=converged_at,
        time_unit=unit,
        steps=steps,
        rejected=rejected,
    )


def convergence_time(traj, epsilon):
    """First sample time after which every observable stays within ``epsilon`` of its final value.

    Returns None if only the final sample is within tolerance, i.e. the
    trajectory shows no settled stretch.
    """
    obs = traj.observable_matrix()
    dev = np.max(np.abs(obs - obs[-1]), axis=1)
    outside = np.flatnonzero(dev > epsilon)
    times = traj.times
    if outside.size == 0:
        return float(times[0])
    k = int(outside[-1])
    if k >= len(times) - 2:
        return None
    return float(times[k + 1])
