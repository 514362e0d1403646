"""Flat ``key = value`` run configuration with dotted sections.

Example::

    # robust-state preset with explicit pump rates
    scenario = robust_fixed
    params.r1 = 2.0
    params.r2 = 2.0
    integrator.horizon = 20
    output.dir = out/robust_fixed

Lines starting with ``#`` are comments. Unknown keys are rejected.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .core import PSD_TOL, DensityMatrix, SystemParams
from .errors import LambdaCPTError, ValidationError
from .integrator import IntegratorConfig, Method

COMMANDS = ("simulate", "steady", "sweep", "dressed", "scenarios")
PARAM_KEYS = ("r1", "r2", "gamma1", "gamma2", "p", "delta")
ENTRY_KEYS = {
    "rho_aa": (0, 0), "rho_bb": (1, 1), "rho_cc": (2, 2),
    "rho_ab": (0, 1), "rho_ac": (0, 2), "rho_bc": (1, 2),
    "rho_ba": (1, 0), "rho_ca": (2, 0), "rho_cb": (2, 1),
}
INTEGRATOR_KEYS = {
    "method": "method",
    "step": "step",
    "abs_tol": "abs_tol",
    "rel_tol": "rel_tol",
    "horizon": "horizon",
    "convergence_norm_tol": "convergence_norm_tol",
    "sample_stride": "sample_stride",
    "stop_at_convergence": "stop_at_convergence",
    "max_step": "max_step",
}
OUTPUT_KEYS = ("dir", "csv", "json")
METHOD_ALIASES = {
    "rk4": Method.FIXED_RK4,
    "fixedrk4": Method.FIXED_RK4,
    "rk45": Method.ADAPTIVE_RK45,
    "adaptiverk45": Method.ADAPTIVE_RK45,
}


class ConfigError(LambdaCPTError, ValueError):
    """Syntax error at ``line``/``column`` (both 1-based)."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class OutputSpec:
    dir: str | None = None
    csv: str = "trajectory.csv"
    json: str = "summary.json"


@dataclass(frozen=True)
class RunConfig:
    command: str = "simulate"
    params: SystemParams = field(default_factory=SystemParams)
    initial: DensityMatrix | None = None
    initial_name: str | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    output: OutputSpec = field(default_factory=OutputSpec)
    scenario: str | None = None
    sweep: tuple = ()
    dressed_basis: tuple | None = None

    def sweep_grid(self):
        """Cartesian product of the ``sweep.*`` value lists over the base parameters."""
        if not self.sweep:
            return [self.params]
        names = [k for k, _ in self.sweep]
        grid = []
        for combo in itertools.product(*(v for _, v in self.sweep)):
            grid.append(replace(self.params, **dict(zip(names, combo))))
        return grid

    def same_as(self, other):
        """Semantic equality (density matrices compared entrywise)."""
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, DensityMatrix) or isinstance(b, DensityMatrix):
                if a is None or b is None or not np.array_equal(a.data, b.data):
                    return False
            elif a != b:
                return False
        return True


def _parse_float(text, line, col):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", line, col) from None
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {text!r}", line, col)
    return value


def _parse_complex(text, line, col):
    try:
        value = complex(text.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"expected a (complex) number, got {text!r}", line, col) from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ConfigError(f"expected a finite number, got {text!r}", line, col)
    return value


def _parse_bool(text, line, col):
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}", line, col)


def _tokenize(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        hash_pos = raw.find("#")
        body = raw if hash_pos < 0 else raw[:hash_pos]
        eq = body.find("=")
        if eq < 0:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key = body[:eq].strip()
        value = body[eq + 1:].strip()
        key_col = len(body) - len(body.lstrip()) + 1
        if not key:
            raise ConfigError("empty key", lineno, eq + 1)
        value_col = eq + 2 + (len(body[eq + 1:]) - len(body[eq + 1:].lstrip()))
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno, eq + 2)
        yield lineno, key, key_col, value, value_col


def validate_initial(m):
    """Validate an explicit density matrix: Hermitian, unit trace, PSD."""
    rho = DensityMatrix(m)
    if rho.min_eigenvalue < -PSD_TOL:
        raise ValidationError("positive semidefinite", f"min eigenvalue {rho.min_eigenvalue:.3e}")
    return rho


def parse_config(text, command=None):
    """Parse and validate configuration text into a RunConfig.

    ``command`` (from the command line) overrides any ``command`` key.
    """
    from .scenarios import INITIAL_PRESETS, get_scenario

    seen = {}
    values = {}
    for lineno, key, key_col, value, value_col in _tokenize(text):
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", lineno, key_col)
        seen[key] = lineno
        section, _, name = key.partition(".")
        if key in ("command", "scenario", "initial"):
            values[key] = value
        elif section == "params" and name in PARAM_KEYS:
            values[key] = _parse_float(value, lineno, value_col)
        elif section == "initial" and name in ENTRY_KEYS:
            values[key] = _parse_complex(value, lineno, value_col)
        elif section == "integrator" and name in INTEGRATOR_KEYS:
            if name == "method":
                method = METHOD_ALIASES.get(value.lower().replace("_", ""))
                if method is None:
                    raise ConfigError(f"unknown integrator method {value!r}", lineno, value_col)
                values[key] = method
            elif name == "sample_stride":
                try:
                    values[key] = int(value)
                except ValueError:
                    raise ConfigError(f"expected an integer, got {value!r}", lineno, value_col) from None
            elif name == "stop_at_convergence":
                values[key] = _parse_bool(value, lineno, value_col)
            else:
                values[key] = _parse_float(value, lineno, value_col)
        elif section == "output" and name in OUTPUT_KEYS:
            values[key] = value
        elif section == "sweep" and name in PARAM_KEYS:
            items = [v.strip() for v in value.split(",")]
            if any(not v for v in items):
                raise ConfigError("empty entry in sweep list", lineno, value_col)
            values[key] = tuple(_parse_float(v, lineno, value_col) for v in items)
        elif section == "dressed" and name in ("r1", "r2"):
            values[key] = _parse_float(value, lineno, value_col)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno, key_col)

    cmd = command or values.get("command", "simulate")
    if cmd not in COMMANDS:
        raise ValidationError("known command", f"{cmd!r} not in {COMMANDS}")

    scenario = values.get("scenario")
    base_params = SystemParams()
    base_initial = None
    horizon = None
    if scenario is not None:
        try:
            spec = get_scenario(scenario)
        except KeyError:
            raise ValidationError("known scenario", f"{scenario!r}") from None
        base_params = spec.params
        base_initial = spec.initial
        horizon = spec.horizon

    overrides = {k.split(".")[1]: v for k, v in values.items() if k.startswith("params.")}
    # SystemParams validates rates and p on construction
    params = SystemParams(**{**{k: getattr(base_params, k) for k in PARAM_KEYS}, **overrides})

    initial_name = values.get("initial")
    entry_values = {k.split(".")[1]: v for k, v in values.items() if k.startswith("initial.")}
    if initial_name is not None and entry_values:
        raise ValidationError("single initial-state source", "give either 'initial' or 'initial.*' entries")
    if initial_name is not None:
        if initial_name not in INITIAL_PRESETS:
            raise ValidationError("known initial preset", f"{initial_name!r}")
        initial = INITIAL_PRESETS[initial_name]
    elif entry_values:
        m = np.zeros((3, 3), dtype=complex)
        upper = {}
        for name, val in entry_values.items():
            i, j = ENTRY_KEYS[name]
            if i == j:
                if abs(val.imag) > 0:
                    raise ValidationError("Hermitian", f"{name} must be real")
                m[i, i] = val.real
            elif i < j:
                m[i, j] = val
                m[j, i] = np.conj(val)
                upper[(i, j)] = val
        for name, val in entry_values.items():
            i, j = ENTRY_KEYS[name]
            if i > j:
                expected = np.conj(upper.get((j, i), 0.0))
                if abs(val - expected) > 1e-12:
                    raise ValidationError("Hermitian", f"{name} is not the conjugate of its partner")
                m[i, j] = val
                m[j, i] = np.conj(val)
        initial = validate_initial(m)
    else:
        initial = base_initial

    integ_kwargs = {INTEGRATOR_KEYS[k.split(".")[1]]: v for k, v in values.items() if k.startswith("integrator.")}
    if horizon is not None:
        integ_kwargs.setdefault("horizon", horizon)
    integrator = IntegratorConfig(**integ_kwargs)

    output = OutputSpec(**{k.split(".")[1]: v for k, v in values.items() if k.startswith("output.")})

    sweep = tuple((k.split(".")[1], v) for k, v in values.items() if k.startswith("sweep."))
    for name, vals in sweep:
        for v in vals:
            SystemParams(**{**{k: getattr(params, k) for k in PARAM_KEYS}, name: v})

    dressed_basis = None
    if "dressed.r1" in values or "dressed.r2" in values:
        dressed_basis = (values.get("dressed.r1", params.r1), values.get("dressed.r2", params.r2))

    if initial is None and cmd in ("simulate", "dressed"):
        raise ValidationError("initial state given", "set 'initial', 'initial.*' or 'scenario'")

    return RunConfig(
        command=cmd,
        params=params,
        initial=initial,
        initial_name=initial_name,
        integrator=integrator,
        output=output,
        scenario=scenario,
        sweep=sweep,
        dressed_basis=dressed_basis,
    )


def serialize_config(cfg):
    """Fully explicit text form of ``cfg``; ``parse_config`` reads it back."""
    lines = [f"command = {cfg.command}"]
    if cfg.scenario is not None:
        lines.append(f"scenario = {cfg.scenario}")
    for k in PARAM_KEYS:
        lines.append(f"params.{k} = {getattr(cfg.params, k)!r}")
    if cfg.initial_name is not None:
        lines.append(f"initial = {cfg.initial_name}")
    elif cfg.initial is not None:
        for name, (i, j) in ENTRY_KEYS.items():
            if i > j:
                continue
            z = complex(cfg.initial.data[i, j])
            lines.append(f"initial.{name} = {z.real!r}" if i == j else f"initial.{name} = {z!r}")
    ic = cfg.integrator
    lines.append(f"integrator.method = {ic.method.value}")
    for k in ("step", "abs_tol", "rel_tol", "horizon", "convergence_norm_tol", "sample_stride"):
        lines.append(f"integrator.{k} = {getattr(ic, k)!r}")
    lines.append(f"integrator.stop_at_convergence = {str(ic.stop_at_convergence).lower()}")
    if ic.max_step is not None:
        lines.append(f"integrator.max_step = {ic.max_step!r}")
    for k in OUTPUT_KEYS:
        v = getattr(cfg.output, k)
        if v is not None:
            lines.append(f"output.{k} = {v}")
    for name, vals in cfg.sweep:
        lines.append(f"sweep.{name} = " + ", ".join(repr(v) for v in vals))
    if cfg.dressed_basis is not None:
        lines.append(f"dressed.r1 = {cfg.dressed_basis[0]!r}")
        lines.append(f"dressed.r2 = {cfg.dressed_basis[1]!r}")
    return "\n".join(lines) + "\n"
