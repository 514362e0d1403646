"""Named presets (initial-condition cases and reference set-ups) and parameter sweeps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DensityMatrix, SystemParams, diag_state, robust_state, weak_state
from .dressed import DressedBasis, dressed_populations
from .errors import UniquenessError, ValidationError
from .integrator import IntegratorConfig, Trajectory, convergence_time, integrate
from .steady import (
    Classification,
    Provenance,
    SteadyStateReport,
    analytic_cpt,
    classify,
    degenerate_steady,
    null_space_steady,
    residual,
    uniqueness,
)

ANALYTIC_TOL = 1e-6
CONVERGENCE_EPS = 0.01
THREADS_ENV = "LAMBDA_CPT_THREADS"


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


# Expectations: each evaluates itself against a finished run.

@dataclass(frozen=True)
class SteadyValue:
    observable: str
    value: float
    tol: float = ANALYTIC_TOL

    def evaluate(self, run):
        got = run.integrated.state_observables[self.observable]
        return Check(
            f"steady {self.observable} = {self.value:.6g}",
            abs(got - self.value) <= self.tol,
            f"got {got:.10g} (tol {self.tol:g})",
        )


@dataclass(frozen=True)
class Classified:
    tag: Classification

    def evaluate(self, run):
        got = run.integrated.report.classification
        return Check(f"classification {self.tag.value}", got is self.tag, f"got {got.value}")


@dataclass(frozen=True)
class StateConstant:
    tol: float = 1e-9

    def evaluate(self, run):
        first = run.trajectory.samples[0].state.data
        dev = max(float(np.max(np.abs(s.state.data - first))) for s in run.trajectory.samples)
        return Check("state constant", dev <= self.tol, f"max deviation {dev:.3e}")


@dataclass(frozen=True)
class InversionSign:
    """Sign of both steady inversions ρ_aa−ρ_bb and ρ_aa−ρ_cc."""

    positive: bool = False

    def evaluate(self, run):
        obs = run.integrated.state_observables
        inv = (obs["inv_ab"], obs["inv_ac"])
        ok = all(v > 0 for v in inv) if self.positive else all(v < 0 for v in inv)
        label = "population inversion" if self.positive else "no population inversion"
        return Check(label, ok, f"inversions {inv[0]:.6g}, {inv[1]:.6g}")


@dataclass(frozen=True)
class C0Conserved:
    value: float
    tol: float = 1e-9

    def evaluate(self, run):
        drift = run.trajectory.c0_drift()
        c0 = run.trajectory.samples[0].c0
        ok = drift is not None and abs(c0 - self.value) <= 1e-12 and drift <= self.tol
        return Check(f"C0 = {self.value:g} conserved", ok, f"C0(0)={c0}, drift {drift}")


@dataclass(frozen=True)
class MatchesPrediction:
    tol: float = ANALYTIC_TOL

    def evaluate(self, run):
        if run.discrepancy is None:
            return Check("matches independent prediction", False, "no prediction available")
        return Check(
            "matches independent prediction",
            run.discrepancy <= self.tol,
            f"max |Δρ| = {run.discrepancy:.3e} vs {run.predicted.provenance.value}",
        )


@dataclass(frozen=True)
class DarkMonotone:
    tol: float = 1e-12

    def evaluate(self, run):
        dd = run.dark_population
        if dd is None:
            return Check("dark population non-decreasing", False, "dressed basis undefined")
        worst = float(np.min(np.diff(dd))) if len(dd) > 1 else 0.0
        return Check("dark population non-decreasing", worst >= -self.tol, f"min increment {worst:.3e}")


@dataclass(frozen=True)
class ConvergenceTime:
    value: float
    tol: float = 0.5
    epsilon: float = CONVERGENCE_EPS

    def evaluate(self, run):
        t = convergence_time(run.trajectory, self.epsilon)
        ok = t is not None and abs(t - self.value) <= self.tol
        return Check(f"convergence time {self.value:g} ± {self.tol:g}", ok, f"got {t}")


@dataclass(frozen=True)
class Departs:
    threshold: float = 1e-3
    within: float = 5.0

    def evaluate(self, run):
        first = run.trajectory.samples[0].state.data
        dev = max(
            (float(np.max(np.abs(s.state.data - first))) for s in run.trajectory.samples if s.t <= self.within),
            default=0.0,
        )
        return Check(
            f"departs by > {self.threshold:g} within {self.within:g}",
            dev > self.threshold,
            f"max deviation {dev:.3e}",
        )


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: SystemParams
    initial: DensityMatrix
    horizon: float = 20.0
    expected: tuple = ()
    c0: float | None = None
    description: str = ""

    def __post_init__(self):
        if self.c0 is not None and abs(self.initial.c0() - self.c0) > 1e-12:
            raise ValidationError("expected C0 matches initial state", f"{self.initial.c0()} != {self.c0}")


@dataclass(frozen=True)
class IntegratedSteady:
    report: SteadyStateReport
    state_observables: dict


@dataclass(frozen=True)
class ScenarioResult:
    spec: ScenarioSpec
    trajectory: Trajectory
    integrated: IntegratedSteady
    predicted: SteadyStateReport | None
    discrepancy: float | None
    uniqueness: object
    convergence_time: float | None
    dark_population: np.ndarray | None
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def predict_steady(params, initial=None):
    """Independent (non-integrated) steady state, or None if only integration can tell.

    Unique regime: closed-form CPT state. Symmetric regime: closed form driven
    by the initial state. Otherwise a one-dimensional kernel is used if found.
    """
    if params.is_ideal():
        try:
            return analytic_cpt(params)
        except UniquenessError:
            pass
        if params.is_degenerate() and initial is not None:
            return degenerate_steady(params, initial)
    ns = null_space_steady(params)
    if ns.dimension == 1 and ns.states:
        state = ns.states[0]
        return SteadyStateReport(
            state=state,
            provenance=Provenance.NULL_SPACE,
            classification=classify(state),
            residual=residual(params, state),
        )
    return None


def integrated_report(params, traj):
    state = traj.final_state
    report = SteadyStateReport(
        state=state,
        provenance=Provenance.INTEGRATED,
        classification=classify(state),
        residual=residual(params, state),
        c0=state.c0() if params.is_degenerate() else None,
    )
    return IntegratedSteady(report=report, state_observables=traj.final.obs.as_dict())


def dark_population_series(params, traj):
    if not params.r1 + params.r2 > 0:
        return None
    basis = DressedBasis.from_params(params)
    return np.array([dressed_populations(basis, s.state)[0] for s in traj.samples])


def run_scenario(spec, config=None):
    """Integrate a scenario, compare with the prediction, and evaluate its expectations.

    Failed expectations are reported in ``checks``; they do not raise.
    """
    config = config or IntegratorConfig(horizon=spec.horizon)
    traj = integrate(spec.params, spec.initial, config)
    integrated = integrated_report(spec.params, traj)
    predicted = predict_steady(spec.params, spec.initial)
    discrepancy = None
    if predicted is not None:
        discrepancy = float(np.max(np.abs(integrated.report.state.data - predicted.state.data)))
    result = ScenarioResult(
        spec=spec,
        trajectory=traj,
        integrated=integrated,
        predicted=predicted,
        discrepancy=discrepancy,
        uniqueness=uniqueness(spec.params),
        convergence_time=convergence_time(traj, CONVERGENCE_EPS),
        dark_population=dark_population_series(spec.params, traj),
    )
    checks = tuple(e.evaluate(result) for e in spec.expected)
    return replace(result, checks=checks)


# initial states of the symmetric-regime cases, keyed by case, with their C0
CASE_STATES = {
    "case1a": (diag_state(0, 1, 0), 0.0),
    "case1b": (diag_state(0, 0, 1), 0.0),
    "case1c": (diag_state(0, 0.5, 0.5), 0.0),
    "case2a": (weak_state(), 1.0),
    "case2b": (diag_state(1, 0, 0), 1.0),
    "case3": (robust_state(), -1.0),
}

INITIAL_PRESETS = {
    **{name: state for name, (state, _) in CASE_STATES.items()},
    "robust": robust_state(),
    "weak": weak_state(),
    "upper": diag_state(1, 0, 0),
    "b": diag_state(0, 1, 0),
    "c": diag_state(0, 0, 1),
}


def _symmetric(r, gamma=1.0):
    return SystemParams(r1=r, r2=r, gamma1=gamma, gamma2=gamma, p=1.0, delta=0.0)


def builtin_scenarios():
    """All preset scenarios, in a fixed order."""
    specs = []
    for r, horizon in ((2.5, 20.0), (0.5, 50.0)):
        params = _symmetric(r)
        for case in ("case1a", "case1b", "case1c"):
            state, c0 = CASE_STATES[case]
            specs.append(
                ScenarioSpec(
                    name=f"{case}_r{r:g}",
                    params=params,
                    initial=state,
                    horizon=horizon,
                    c0=c0,
                    expected=(InversionSign(False), C0Conserved(c0), MatchesPrediction(), DarkMonotone()),
                    description=f"case I (C0=0), r={r:g}γ",
                )
            )
        for case in ("case2a", "case2b"):
            state, c0 = CASE_STATES[case]
            expected = [C0Conserved(c0), MatchesPrediction(), DarkMonotone()]
            if r > 1.0:
                expected.append(InversionSign(True))
            specs.append(
                ScenarioSpec(
                    name=f"{case}_r{r:g}",
                    params=params,
                    initial=state,
                    horizon=horizon,
                    c0=c0,
                    expected=tuple(expected),
                    description=f"case II (C0=1), r={r:g}γ",
                )
            )
        state, c0 = CASE_STATES["case3"]
        specs.append(
            ScenarioSpec(
                name=f"case3_r{r:g}",
                params=params,
                initial=state,
                horizon=horizon,
                c0=c0,
                expected=(
                    StateConstant(1e-9),
                    Classified(Classification.ROBUST),
                    C0Conserved(c0),
                    MatchesPrediction(),
                    DarkMonotone(),
                ),
                description=f"case III (C0=-1), r={r:g}γ",
            )
        )

    state, _ = CASE_STATES["case1a"]
    specs.append(
        ScenarioSpec(
            name="pump_dominated",
            params=_symmetric(2.5),
            initial=state,
            horizon=20.0,
            c0=0.0,
            expected=(
                InversionSign(False),
                C0Conserved(0.0),
                MatchesPrediction(),
                SteadyValue("rho_aa", 2.5 / 12),
                ConvergenceTime(1.8, 0.5),
            ),
            description="case I from |b⟩, pumping dominated r=2.5γ",
        )
    )
    specs.append(
        ScenarioSpec(
            name="decay_dominated",
            params=_symmetric(0.5),
            initial=state,
            horizon=50.0,
            c0=0.0,
            expected=(InversionSign(False), C0Conserved(0.0), MatchesPrediction(), SteadyValue("rho_aa", 0.125)),
            description="case I from |b⟩, decay dominated r=0.5γ",
        )
    )
    specs.append(
        ScenarioSpec(
            name="robust_fixed",
            params=_symmetric(1.0),
            initial=robust_state(),
            horizon=20.0,
            c0=-1.0,
            expected=(StateConstant(1e-9), Classified(Classification.ROBUST), C0Conserved(-1.0), MatchesPrediction()),
            description="case III: robust state stays put",
        )
    )
    specs.append(
        ScenarioSpec(
            name="weak_formation",
            params=_symmetric(0.0, 1.0),
            initial=diag_state(1, 0, 0),
            horizon=20.0,
            c0=1.0,
            expected=(
                SteadyValue("rho_aa", 0.0),
                SteadyValue("rho_bb", 0.5),
                SteadyValue("rho_cc", 0.5),
                SteadyValue("re_rho_bc", 0.5),
                Classified(Classification.WEAK),
                C0Conserved(1.0),
                MatchesPrediction(),
            ),
            description="no pumping, decay from |a⟩ builds the weak state",
        )
    )
    specs.append(
        ScenarioSpec(
            name="weak_unstable",
            params=_symmetric(1.0),
            initial=weak_state(),
            horizon=20.0,
            c0=1.0,
            expected=(Departs(1e-3, 5.0), C0Conserved(1.0), MatchesPrediction()),
            description="weak state under nonzero pumping drifts to the C0=1 limit",
        )
    )
    specs.append(
        ScenarioSpec(
            name="cpt_generic",
            params=SystemParams(r1=1.0, r2=3.0, gamma1=3.0, gamma2=0.2),
            initial=diag_state(0, 0, 1),
            horizon=200.0,
            expected=(
                SteadyValue("rho_aa", 0.0),
                SteadyValue("rho_bb", 0.75),
                SteadyValue("rho_cc", 0.25),
                SteadyValue("re_rho_bc", -math.sqrt(3) / 4),
                Classified(Classification.CPT_GENERIC),
                MatchesPrediction(),
                DarkMonotone(),
            ),
            description="unique CPT state, r1≠r2",
        )
    )
    return specs


def get_scenario(name):
    for spec in builtin_scenarios():
        if spec.name == name:
            return spec
    raise KeyError(f"unknown scenario {name!r}")


@dataclass(frozen=True)
class SweepRow:
    index: int
    params: SystemParams
    report: SteadyStateReport
    label: str
    uniqueness: object


def _sweep_point(args):
    index, params, initial, config = args
    report = predict_steady(params, initial)
    if report is not None and report.provenance is Provenance.ANALYTIC_CPT:
        label = "unique"
    elif report is not None and report.provenance is Provenance.DEGENERATE_CLOSED_FORM:
        label = "multi-steady"
    elif report is not None:
        label = "unique-numerical"
    else:
        traj = integrate(params, initial, config)
        report = integrated_report(params, traj).report
        label = "integrated"
    return SweepRow(index=index, params=params, report=report, label=label, uniqueness=uniqueness(params))


def sweep_workers():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} is a positive integer", f"got {raw!r}") from None


def sweep(params_grid, initial, config=None, workers=None):
    """Steady state for every grid point, in grid order.

    Symmetric-regime points are resolved from ``initial`` (labelled
    ``multi-steady``); points with no closed form or one-dimensional kernel
    are integrated.
    """
    config = config or IntegratorConfig()
    jobs = [(i, p, initial, config) for i, p in enumerate(params_grid)]
    workers = workers or sweep_workers()
    if workers <= 1 or len(jobs) <= 1:
        return [_sweep_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_sweep_point, jobs))
