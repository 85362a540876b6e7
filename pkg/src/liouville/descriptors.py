"""JSON descriptors for solution fields, developing maps and run configs."""
from __future__ import annotations

import math

import jsonschema

from .developing import DevelopingMap, ExpFamily, Mobius, OdeQuotient
from .polynomial import PolynomialP
from .rays import IntegratorSettings
from .solution import Constant, FromMap, OneDim, Radial, SolutionField, TFamily, Transform, make_solution
from .sphere import MobiusMap, SphereRotation

NUMBER = {"type": "number"}
POSITIVE = {"type": "number", "exclusiveMinimum": 0}
COMPLEX = {"oneOf": [NUMBER, {"type": "array", "items": NUMBER, "minItems": 2, "maxItems": 2}]}
WINDOW = {"type": "array", "items": NUMBER, "minItems": 4, "maxItems": 4}
RADII = {"type": "array", "items": POSITIVE, "minItems": 5}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


TRANSFORM_SCHEMA = _obj({k: NUMBER for k in ("scale_re", "scale_im", "shift_re", "shift_im")})

INTEGRATOR_SCHEMA = _obj({"order": {"type": "integer", "minimum": 8, "maximum": 60},
                          "tol": POSITIVE, "max_steps": {"type": "integer", "minimum": 1}})

MAP_SCHEMA = {"oneOf": [
    _obj({"kind": {"const": "mobius"},
          "coefficients": {"type": "array", "items": COMPLEX, "minItems": 4, "maxItems": 4}},
         ["kind", "coefficients"]),
    _obj({"kind": {"const": "exp_family"}, "t": {"type": "number", "minimum": 0},
          "rotation": _obj({"p": COMPLEX, "q": COMPLEX}, ["p", "q"])},
         ["kind"]),
    _obj({"kind": {"const": "ode_quotient"},
          "P": {"type": "array", "items": COMPLEX, "minItems": 1},
          "seeds": {"type": "array", "minItems": 2, "maxItems": 2,
                    "items": {"type": "array", "items": COMPLEX, "minItems": 2, "maxItems": 2}},
          "integrator": INTEGRATOR_SCHEMA},
         ["kind", "P"]),
]}

SOLUTION_SCHEMA = _obj({
    "family": {"enum": ["radial", "t_family", "one_dim", "from_map", "constant"]},
    "t": {"type": "number", "minimum": 0},
    "lambda": POSITIVE,
    "b": NUMBER,
    "omega": {"type": "array", "items": NUMBER, "minItems": 2, "maxItems": 2},
    "map": MAP_SCHEMA,
    "value": NUMBER,
    "transform": TRANSFORM_SCHEMA,
}, ["family"])

_COMMAND_SCHEMAS = {
    "verify": _obj({"points": {"type": "integer", "minimum": 1}, "window": WINDOW,
                    "structured": {"type": "integer", "minimum": 0}, "threshold": POSITIVE,
                    "step": POSITIVE, "random_transforms": {"type": "integer", "minimum": 0}}),
    "classify": _obj({"radii": RADII, "directions": {"type": "integer", "minimum": 64},
                      "threshold": POSITIVE, "expected_k": NUMBER}),
    "diameter": _obj({"levels": {"type": "integer", "minimum": 1, "maximum": 4},
                      "coarse_spacing": POSITIVE, "window": WINDOW, "boundary_ratio": POSITIVE,
                      "expected": NUMBER, "rel_tol": POSITIVE}),
    "asymptotics": _obj({"sectors": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                         "radii": RADII, "directions": {"type": "integer", "minimum": 9},
                         "margin": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                         "exponent_tol": POSITIVE, "ray_radius": POSITIVE,
                         "ray_samples": {"type": "integer", "minimum": 2}}),
    "profile": _obj({"grid": _obj({"window": WINDOW, "nx": {"type": "integer", "minimum": 2},
                                   "ny": {"type": "integer", "minimum": 2}}, ["window", "nx", "ny"]),
                     "rays": _obj({"thetas": {"type": "array", "items": NUMBER, "minItems": 1},
                                   "radius": POSITIVE, "samples": {"type": "integer", "minimum": 2},
                                   "centre": COMPLEX}, ["thetas", "radius"])}),
}

COMMANDS = tuple(_COMMAND_SCHEMAS)


def config_schema(command: str) -> dict:
    return _obj({"solution": SOLUTION_SCHEMA, command: _COMMAND_SCHEMAS[command]}, ["solution"])


class DescriptorError(ValueError):
    """A descriptor or config that fails validation."""


def _c(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def validate_config(config, command: str) -> dict:
    if command not in _COMMAND_SCHEMAS:
        raise DescriptorError(f"unknown command {command!r}")
    try:
        jsonschema.validate(config, config_schema(command))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DescriptorError(f"{where}: {exc.message}") from None
    return config


def parse_map(d: dict) -> DevelopingMap:
    try:
        jsonschema.validate(d, MAP_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DescriptorError(exc.message) from None
    kind = d["kind"]
    try:
        if kind == "mobius":
            return Mobius(MobiusMap(*(_c(v) for v in d["coefficients"])))
        if kind == "exp_family":
            rot = d.get("rotation")
            rot = None if rot is None else SphereRotation(_c(rot["p"]), _c(rot["q"]))
            return ExpFamily(float(d.get("t", 0.0)), rot)
        P = PolynomialP(tuple(_c(v) for v in d["P"]))
        seeds = d.get("seeds", [[1.0, 0.0], [0.0, 1.0]])
        settings = IntegratorSettings(**d.get("integrator", {}))
        return OdeQuotient(P, tuple((_c(a), _c(b)) for a, b in seeds), settings)
    except (ValueError, ZeroDivisionError) as exc:
        raise DescriptorError(f"invalid {kind} map: {exc}") from None


def parse_solution(d: dict) -> SolutionField:
    """SolutionField from a descriptor; raises DescriptorError on any invalid content."""
    try:
        jsonschema.validate(d, SOLUTION_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DescriptorError(exc.message) from None
    fam = d["family"]
    allowed = {"radial": set(), "t_family": {"t"}, "one_dim": {"lambda", "b", "omega"},
               "from_map": {"map"}, "constant": {"value"}}[fam] | {"family", "transform"}
    extra = set(d) - allowed
    if extra:
        raise DescriptorError(f"fields {sorted(extra)} do not apply to family {fam!r}")
    try:
        tr = d.get("transform", {})
        transform = Transform(complex(tr.get("scale_re", 1.0), tr.get("scale_im", 0.0)),
                              complex(tr.get("shift_re", 0.0), tr.get("shift_im", 0.0)))
        if fam == "radial":
            prov = Radial()
        elif fam == "t_family":
            prov = TFamily(float(d.get("t", 0.0)))
        elif fam == "one_dim":
            prov = OneDim(float(d.get("lambda", 1.0)), float(d.get("b", 0.0)),
                          tuple(d.get("omega", (1.0, 0.0))))
        elif fam == "constant":
            prov = Constant(float(d.get("value", 0.0)))
        else:
            if "map" not in d:
                raise DescriptorError("from_map needs a 'map' descriptor")
            prov = FromMap(parse_map(d["map"]))
    except ValueError as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError(str(exc)) from None
    return make_solution(prov, transform)


def solution_to_json(u: SolutionField) -> dict:
    p = u.provenance
    out: dict = {"family": p.family}
    if isinstance(p, TFamily):
        out["t"] = p.t
    elif isinstance(p, OneDim):
        out.update({"lambda": p.lam, "b": p.b, "omega": list(p.omega)})
    elif isinstance(p, Constant):
        out["value"] = p.value
    elif isinstance(p, FromMap):
        out["map"] = map_to_json(p.f)
    T = u.transform
    if not T.is_identity:
        out["transform"] = {"scale_re": T.scale.real, "scale_im": T.scale.imag,
                            "shift_re": T.shift.real, "shift_im": T.shift.imag}
    return out


def map_to_json(f: DevelopingMap) -> dict:
    out = f.to_json()
    if isinstance(f, OdeQuotient) and f.settings != IntegratorSettings():
        s = f.settings
        out["integrator"] = {"order": s.order, "tol": s.tol, "max_steps": s.max_steps}
    return out


def format_float(x: float) -> str | None:
    return format(x, ".17g") if math.isfinite(x) else None
