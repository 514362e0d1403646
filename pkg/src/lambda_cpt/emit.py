"""CSV and JSON writers for trajectories, steady reports and sweeps."""
from __future__ import annotations

import csv
import io
import json
import math

from .dressed import DressedBasis, dressed_populations

TRAJECTORY_COLUMNS = (
    "t", "rho_aa", "rho_bb", "rho_cc", "re_rho_bc", "im_rho_bc", "inv_ab", "inv_ac",
    "rho_DD", "rho_BB", "c0", "trace_err", "min_eig",
)
SWEEP_COLUMNS = (
    "index", "r1", "r2", "gamma1", "gamma2", "p", "delta", "label", "provenance",
    "classification", "rho_aa", "rho_bb", "rho_cc", "re_rho_bc", "im_rho_bc", "c0",
)


def fmt(x):
    """12 significant digits, scientific, '.' decimal separator regardless of locale."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.11e}"


def time_unit_label(params):
    if params.gamma1 > 0:
        return "1/gamma1"
    if max(params.rates) > 0:
        return "1/max_rate"
    return "1"


def trajectory_rows(params, traj):
    basis = DressedBasis.from_params(params) if params.r1 + params.r2 > 0 else None
    for s in traj.samples:
        o = s.obs
        dd, bb = dressed_populations(basis, s.state) if basis else (math.nan, math.nan)
        c0 = s.c0 if s.c0 is not None else math.nan
        yield (
            s.t, o.rho_aa, o.rho_bb, o.rho_cc, o.re_rho_bc, o.im_rho_bc, o.inv_ab, o.inv_ac,
            dd, bb, c0, s.trace_err, s.min_eig,
        )


def trajectory_csv(params, traj):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for row in trajectory_rows(params, traj):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        p, rep = row.params, row.report
        s = rep.state
        w.writerow(
            [row.index]
            + [fmt(v) for v in (p.r1, p.r2, p.gamma1, p.gamma2, p.p, p.delta)]
            + [row.label, rep.provenance.value, rep.classification.value]
            + [fmt(v) for v in (s.aa, s.bb, s.cc, s.bc.real, s.bc.imag, rep.c0)]
        )
    return buf.getvalue()


def params_dict(params):
    return {k: getattr(params, k) for k in ("r1", "r2", "gamma1", "gamma2", "p", "delta")}


def _clean(obj):
    # JSON has no NaN/inf
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def scenario_summary(result):
    spec = result.spec
    traj = result.trajectory
    return {
        "scenario": spec.name,
        "description": spec.description,
        "params": params_dict(spec.params),
        "time_unit": time_unit_label(spec.params),
        "time_unit_value": traj.time_unit,
        "steady": result.integrated.report.as_dict(),
        "predicted": result.predicted.as_dict() if result.predicted else None,
        "discrepancy": result.discrepancy,
        "uniqueness": result.uniqueness.as_dict(),
        "convergence_time": result.convergence_time,
        "converged_at": traj.converged_at,
        "classification": result.integrated.report.classification.value,
        "provenance": result.integrated.report.provenance.value,
        "diagnostics": {
            "max_trace_err": traj.max_trace_error(),
            "max_hermiticity_err": traj.max_hermiticity_error(),
            "min_eig": traj.min_eigenvalue(),
            "c0_drift": traj.c0_drift(),
            "steps": traj.steps,
            "rejected_steps": traj.rejected,
        },
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks],
        "passed": result.passed,
    }


def to_json(obj):
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False)
