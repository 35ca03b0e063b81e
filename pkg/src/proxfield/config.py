"""Problem configuration: one JSON document, sections {space, field, atoms,
linear, W, solver}.

Atom parameters are flat numeric arrays keyed by name so configs stay
human-writable and diffable; linear-family matrices are nested arrays.  A
parsed config is plain data and compares field by field, which is what the
write/parse round-trip test relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import functions, operators
from .errors import ShapeError
from .field import AtomicMeasureSpace, HilbertField
from .functions import ConvexAtom, ConvexSetAtom, DirectIntegralFunction, DirectIntegralSet
from .linear import CompositeFunction, LinearFamily
from .operators import DirectIntegralOperator, MonotoneAtom
from .solver import PrimalDualProblem, SolverConfig

__all__ = [
    "ProblemConfig",
    "ConfigError",
    "parse_config",
    "config_to_dict",
    "write_config",
    "bundled_config_path",
    "build_field",
    "build_operator_atom",
    "build_function_atom",
    "build_set_atom",
    "build_operator",
    "build_function",
    "build_sets",
    "build_family",
    "build_problem",
    "build_solver_config",
    "BUNDLED_CONFIGS",
]

BUNDLED_CONFIGS = ("closed_form_quadratic", "split_common_zero", "stochastic_feasibility")


class ConfigError(ShapeError):
    """Config parse/validation failure, naming the offending JSON path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class ProblemConfig:
    """Plain-data mirror of a config document."""

    weights: list
    dims: list
    operator_atoms: list = dc_field(default_factory=list)  # [{"name":..., "params": {...}}]
    function_atoms: list = dc_field(default_factory=list)
    set_atoms: list = dc_field(default_factory=list)
    source_dim: int | None = None
    mats: list = dc_field(default_factory=list)  # nested arrays, one per atom
    W: dict | None = None
    solver: dict = dc_field(default_factory=dict)


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _num_list(value, path) -> list:
    _expect(isinstance(value, (list, tuple)), path, "expected an array of numbers")
    out = []
    for i, v in enumerate(value):
        _expect(isinstance(v, (int, float)) and not isinstance(v, bool), f"{path}[{i}]", "expected a number")
        out.append(float(v))
    return out


def _atom_specs(value, path) -> list:
    _expect(isinstance(value, list), path, "expected an array of atom specs")
    out = []
    for i, spec in enumerate(value):
        p = f"{path}[{i}]"
        _expect(isinstance(spec, dict), p, "expected an object")
        _expect(isinstance(spec.get("name"), str), f"{p}.name", "expected a string")
        params = spec.get("params", {})
        _expect(isinstance(params, dict), f"{p}.params", "expected an object")
        clean = {"name": spec["name"], "params": {}}
        for key, v in params.items():
            kp = f"{p}.params.{key}"
            if isinstance(v, (list, tuple)):
                clean["params"][key] = _num_list(v, kp)
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                clean["params"][key] = float(v)
            elif isinstance(v, str):
                clean["params"][key] = v
            elif isinstance(v, dict):  # nested atom (wrappers)
                clean["params"][key] = _atom_specs([v], kp)[0]
            else:
                raise ConfigError(kp, "expected a number, string, array, or nested spec")
        out.append(clean)
    return out


def parse_config(source) -> ProblemConfig:
    """Parse a config from a dict, a JSON string, or a file path."""
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(str(source), f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(str(source), f"invalid JSON: {exc}") from exc
    elif isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError("<string>", f"invalid JSON: {exc}") from exc
    else:
        doc = source
    _expect(isinstance(doc, dict), "$", "config must be a JSON object")

    _expect(isinstance(doc.get("space"), dict), "space", "missing section")
    weights = _num_list(doc["space"].get("weights"), "space.weights")
    _expect(isinstance(doc.get("field"), dict), "field", "missing section")
    dims_raw = doc["field"].get("dims")
    _expect(isinstance(dims_raw, list), "field.dims", "expected an array of integers")
    dims = []
    for i, d in enumerate(dims_raw):
        _expect(isinstance(d, int) and not isinstance(d, bool) and d >= 1, f"field.dims[{i}]", "expected an integer >= 1")
        dims.append(int(d))
    _expect(len(dims) == len(weights), "field.dims", f"got {len(dims)} dims for {len(weights)} weights")

    atoms = doc.get("atoms", {})
    _expect(isinstance(atoms, dict), "atoms", "expected an object")
    cfg = ProblemConfig(weights=weights, dims=dims)
    if "operators" in atoms:
        cfg.operator_atoms = _atom_specs(atoms["operators"], "atoms.operators")
    if "functions" in atoms:
        cfg.function_atoms = _atom_specs(atoms["functions"], "atoms.functions")
    if "sets" in atoms:
        cfg.set_atoms = _atom_specs(atoms["sets"], "atoms.sets")
    for key, specs in (
        ("atoms.operators", cfg.operator_atoms),
        ("atoms.functions", cfg.function_atoms),
        ("atoms.sets", cfg.set_atoms),
    ):
        _expect(not specs or len(specs) == len(dims), key, f"got {len(specs)} atoms for {len(dims)} field atoms")

    if "linear" in doc:
        lin = doc["linear"]
        _expect(isinstance(lin, dict), "linear", "expected an object")
        m = lin.get("source_dim")
        _expect(isinstance(m, int) and not isinstance(m, bool) and m >= 1, "linear.source_dim", "expected an integer >= 1")
        cfg.source_dim = int(m)
        mats = lin.get("mats")
        _expect(isinstance(mats, list) and len(mats) == len(dims), "linear.mats", f"expected {len(dims)} matrices")
        parsed = []
        for k, M in enumerate(mats):
            p = f"linear.mats[{k}]"
            _expect(isinstance(M, list) and len(M) == dims[k], p, f"expected {dims[k]} rows")
            rows = [_num_list(row, f"{p}[{r}]") for r, row in enumerate(M)]
            for r, row in enumerate(rows):
                _expect(len(row) == m, f"{p}[{r}]", f"expected {m} columns")
            parsed.append(rows)
        cfg.mats = parsed

    if "W" in doc:
        cfg.W = _atom_specs([doc["W"]], "W")[0]

    if "solver" in doc:
        sol = doc["solver"]
        _expect(isinstance(sol, dict), "solver", "expected an object")
        clean: dict[str, Any] = {}
        for key in ("gamma", "tol"):
            if key in sol and sol[key] is not None:
                _expect(isinstance(sol[key], (int, float)) and not isinstance(sol[key], bool), f"solver.{key}", "expected a number")
                clean[key] = float(sol[key])
        if "max_iters" in sol:
            _expect(isinstance(sol["max_iters"], int) and not isinstance(sol["max_iters"], bool), "solver.max_iters", "expected an integer")
            clean["max_iters"] = int(sol["max_iters"])
        if "start" in sol and sol["start"] is not None:
            clean["start"] = _num_list(sol["start"], "solver.start")
        cfg.solver = clean

    # shape checks that need the registries
    build_field(cfg)
    for i, spec in enumerate(cfg.operator_atoms):
        _check_atom(spec, cfg.dims[i], f"atoms.operators[{i}]", _OPERATOR_BUILDERS)
    for i, spec in enumerate(cfg.function_atoms):
        _check_atom(spec, cfg.dims[i], f"atoms.functions[{i}]", _FUNCTION_BUILDERS)
    for i, spec in enumerate(cfg.set_atoms):
        _check_atom(spec, cfg.dims[i], f"atoms.sets[{i}]", _SET_BUILDERS)
    if cfg.W is not None:
        dim = cfg.source_dim if cfg.source_dim is not None else 1
        _check_atom(cfg.W, dim, "W", _OPERATOR_BUILDERS)
    return cfg


def config_to_dict(cfg: ProblemConfig) -> dict:
    """Canonical JSON document for a config; inverse of parse_config."""
    doc: dict[str, Any] = {
        "space": {"weights": list(cfg.weights)},
        "field": {"dims": list(cfg.dims)},
    }
    atoms = {}
    if cfg.operator_atoms:
        atoms["operators"] = cfg.operator_atoms
    if cfg.function_atoms:
        atoms["functions"] = cfg.function_atoms
    if cfg.set_atoms:
        atoms["sets"] = cfg.set_atoms
    if atoms:
        doc["atoms"] = atoms
    if cfg.source_dim is not None:
        doc["linear"] = {"source_dim": cfg.source_dim, "mats": cfg.mats}
    if cfg.W is not None:
        doc["W"] = cfg.W
    if cfg.solver:
        doc["solver"] = cfg.solver
    return doc


def write_config(cfg: ProblemConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a demo config shipped with the package."""
    if name not in BUNDLED_CONFIGS:
        raise ConfigError(name, f"unknown bundled config; available: {', '.join(BUNDLED_CONFIGS)}")
    return Path(resources.files("proxfield").joinpath(f"configs/{name}.json"))


# ---------------------------------------------------------------------------
# Builders: specs -> runtime objects
# ---------------------------------------------------------------------------

_OPERATOR_BUILDERS = {
    "scaled_identity": lambda dim, p: operators.scaled_identity(dim, p["scale"]),
    "affine_psd": lambda dim, p: operators.affine_psd(
        np.reshape(p["mat"], (dim, dim)), p["shift"]
    ),
    "normal_cone_box": lambda dim, p: operators.normal_cone_box(p["lo"], p["hi"]),
    "normal_cone_ball": lambda dim, p: operators.normal_cone_ball(p["center"], p["radius"]),
    "normal_cone_halfspace": lambda dim, p: operators.normal_cone_halfspace(p["normal"], p["offset"]),
    "normal_cone_point": lambda dim, p: operators.normal_cone_point(p["point"]),
    "scalar_graph": lambda dim, p: operators.scalar_graph(p["kind"]),
    "yosida_regularized": lambda dim, p: operators.yosida_regularized(
        build_operator_atom(p["base"], dim), p["reg"]
    ),
    "subdifferential": lambda dim, p: operators.subdifferential(
        build_function_atom(p["inner"], dim)
    ),
}

_FUNCTION_BUILDERS = {
    "quadratic": lambda dim, p: functions.quadratic(np.reshape(p["mat"], (dim, dim)), p["shift"]),
    "abs_value": lambda dim, p: functions.abs_value(),
    "euclidean_norm": lambda dim, p: functions.euclidean_norm(dim),
    "linear": lambda dim, p: functions.linear(p["shift"]),
    "zero": lambda dim, p: functions.zero(dim),
    "support_box": lambda dim, p: functions.support_box(p["lo"], p["hi"]),
    "indicator": lambda dim, p: functions.indicator(build_set_atom(p["set"], dim)),
}

_SET_BUILDERS = {
    "box": lambda dim, p: functions.box_set(p["lo"], p["hi"]),
    "ball": lambda dim, p: functions.ball_set(p["center"], p["radius"]),
    "halfspace": lambda dim, p: functions.halfspace_set(p["normal"], p["offset"]),
    "orthant": lambda dim, p: functions.orthant_set(dim),
    "affine": lambda dim, p: functions.affine_set(
        np.reshape(p["mat"], (int(p["rows"]), dim)), p["rhs"]
    ),
    "point": lambda dim, p: functions.point_set(p["point"]),
}


def _check_atom(spec, dim, path, builders) -> None:
    name = spec["name"]
    if name not in builders:
        raise ConfigError(f"{path}.name", f"unknown atom '{name}'; available: {', '.join(sorted(builders))}")
    try:
        built = builders[name](dim, spec["params"])
    except KeyError as exc:
        raise ConfigError(f"{path}.params", f"missing parameter {exc}") from exc
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{path}.params", str(exc)) from exc
    if built.dim != dim:
        raise ConfigError(path, f"atom dimension {built.dim} does not match field dim {dim}")


def build_operator_atom(spec: dict, dim: int) -> MonotoneAtom:
    return _OPERATOR_BUILDERS[spec["name"]](dim, spec["params"])


def build_function_atom(spec: dict, dim: int) -> ConvexAtom:
    return _FUNCTION_BUILDERS[spec["name"]](dim, spec["params"])


def build_set_atom(spec: dict, dim: int) -> ConvexSetAtom:
    return _SET_BUILDERS[spec["name"]](dim, spec["params"])


def build_field(cfg: ProblemConfig) -> HilbertField:
    try:
        return HilbertField(AtomicMeasureSpace(cfg.weights), cfg.dims)
    except ShapeError as exc:
        raise ConfigError("space/field", str(exc)) from exc


def build_operator(cfg: ProblemConfig) -> DirectIntegralOperator:
    fld = build_field(cfg)
    if not cfg.operator_atoms:
        raise ConfigError("atoms.operators", "section required for this command")
    atoms = [build_operator_atom(s, d) for s, d in zip(cfg.operator_atoms, cfg.dims)]
    return DirectIntegralOperator(fld, atoms)


def build_function(cfg: ProblemConfig) -> DirectIntegralFunction:
    fld = build_field(cfg)
    if not cfg.function_atoms:
        raise ConfigError("atoms.functions", "section required for this command")
    atoms = [build_function_atom(s, d) for s, d in zip(cfg.function_atoms, cfg.dims)]
    return DirectIntegralFunction(fld, atoms)


def build_sets(cfg: ProblemConfig) -> DirectIntegralSet:
    fld = build_field(cfg)
    if not cfg.set_atoms:
        raise ConfigError("atoms.sets", "section required for this command")
    atoms = [build_set_atom(s, d) for s, d in zip(cfg.set_atoms, cfg.dims)]
    return DirectIntegralSet(fld, atoms)


def build_family(cfg: ProblemConfig) -> LinearFamily:
    fld = build_field(cfg)
    if cfg.source_dim is None:
        raise ConfigError("linear", "section required for this command")
    return LinearFamily(fld, cfg.source_dim, [np.array(M, dtype=float) for M in cfg.mats])


def build_composite(cfg: ProblemConfig) -> CompositeFunction:
    return CompositeFunction(build_function(cfg), build_family(cfg))


def build_problem(cfg: ProblemConfig) -> PrimalDualProblem:
    family = build_family(cfg)
    op = build_operator(cfg)
    if cfg.W is None:
        raise ConfigError("W", "section required for solve")
    W = build_operator_atom(cfg.W, family.source_dim)
    return PrimalDualProblem(W=W, family=family, operator=op)


def build_solver_config(cfg: ProblemConfig) -> SolverConfig:
    kw = dict(cfg.solver)
    if "start" in kw:
        fld = build_field(cfg)
        from .field import BlockVector

        flat = np.asarray(kw.pop("start"), dtype=float)
        m = cfg.source_dim or 1
        z0 = flat[:m]
        dual0 = BlockVector.from_flat(fld, flat[m:])
        kw["start"] = (z0, dual0)
    return SolverConfig(**kw)
