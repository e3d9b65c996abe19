"""Minimal-JSON codec and validation for CAD construction sequences.

Canonical layout (field names are exact)::

    {"parts": [{
        "coordinate_system": {"origin": [x, y, z], "x_axis": [...], "y_axis": [...], "z_axis": [...]},
        "sketch": {"profiles": [{"loops": [{"curves": [
            {"type": "line", "start": [u, v], "end": [u, v]},
            {"type": "arc", "start": [u, v], "mid": [u, v], "end": [u, v]},
            {"type": "circle", "center": [u, v], "radius": r}]}]}]},
        "extrusion": {"distance_toward": d1, "distance_opposite": d2,
                      "operation": "new_body" | "join" | "cut" | "intersect",
                      "sketch_scale": s}}]}

Parsing is strict: unknown keys are rejected, and every failure names the JSON
path where it happened.
"""
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from config import AXIS_TOLERANCE, LOOP_CLOSURE_TOLERANCE, MIN_LINE_LENGTH
from cad.sequence import (
    Arc,
    CadSequence,
    Circle,
    CoordinateSystem,
    Curve,
    Extrusion,
    Line,
    Loop,
    Operation,
    Part,
    Profile,
)
from cad.errors import KernelError
from cad.kernel import build_profile
from cad.tessellate import TessellationParams

logger = logging.getLogger(__name__)


class CadSchemaError(ValueError):
    """Base class for parse failures; path is a JSON path such as parts[0].extrusion."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class MalformedJson(CadSchemaError):
    pass


class SchemaViolation(CadSchemaError):
    pass


class InvariantViolation(CadSchemaError):
    def __init__(self, path: str, code: str, message: str):
        super().__init__(path, f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Violation:
    path: str
    code: str
    message: str = ""

    def to_dict(self) -> dict:
        return {"path": self.path, "code": self.code, "message": self.message}


# --- parsing -----------------------------------------------------------------

def _object(value: Any, path: str, keys: Sequence[str]) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise SchemaViolation(path, f"expected object, got {type(value).__name__}")
    missing = [k for k in keys if k not in value]
    if missing:
        raise SchemaViolation(f"{path}.{missing[0]}", "missing field")
    extra = sorted(k for k in value if k not in keys)
    if extra:
        raise SchemaViolation(f"{path}.{extra[0]}", "unknown field")
    return value


def _array(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaViolation(path, f"expected array, got {type(value).__name__}")
    return value


def _number(value: Any, path: str) -> float:
    # bool is an int subclass but never a coordinate
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(path, f"expected number, got {type(value).__name__}")
    try:
        return float(value)
    except OverflowError:
        raise SchemaViolation(path, "number out of range")


def _vector(value: Any, path: str, size: int) -> tuple:
    items = _array(value, path)
    if len(items) != size:
        raise SchemaViolation(path, f"expected {size} numbers, got {len(items)}")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(items))


def _parse_curve(value: Any, path: str) -> Curve:
    if not isinstance(value, dict):
        raise SchemaViolation(path, f"expected object, got {type(value).__name__}")
    kind = value.get("type")
    if kind == "line":
        obj = _object(value, path, ("type", "start", "end"))
        return Line(_vector(obj["start"], f"{path}.start", 2), _vector(obj["end"], f"{path}.end", 2))
    if kind == "arc":
        obj = _object(value, path, ("type", "start", "mid", "end"))
        return Arc(
            start=_vector(obj["start"], f"{path}.start", 2),
            end=_vector(obj["end"], f"{path}.end", 2),
            mid=_vector(obj["mid"], f"{path}.mid", 2),
        )
    if kind == "circle":
        obj = _object(value, path, ("type", "center", "radius"))
        return Circle(_vector(obj["center"], f"{path}.center", 2), _number(obj["radius"], f"{path}.radius"))
    raise SchemaViolation(f"{path}.type", f"unknown curve type {kind!r}")


def _parse_part(value: Any, path: str) -> Part:
    obj = _object(value, path, ("coordinate_system", "sketch", "extrusion"))

    cs_path = f"{path}.coordinate_system"
    cs = _object(obj["coordinate_system"], cs_path, ("origin", "x_axis", "y_axis", "z_axis"))
    coordinate_system = CoordinateSystem(
        **{k: _vector(cs[k], f"{cs_path}.{k}", 3) for k in ("origin", "x_axis", "y_axis", "z_axis")}
    )

    sketch_path = f"{path}.sketch"
    sketch = _object(obj["sketch"], sketch_path, ("profiles",))
    profiles = []
    for i, raw_profile in enumerate(_array(sketch["profiles"], f"{sketch_path}.profiles")):
        profile_path = f"{sketch_path}.profiles[{i}]"
        profile = _object(raw_profile, profile_path, ("loops",))
        loops = []
        for j, raw_loop in enumerate(_array(profile["loops"], f"{profile_path}.loops")):
            loop_path = f"{profile_path}.loops[{j}]"
            loop = _object(raw_loop, loop_path, ("curves",))
            curves = tuple(
                _parse_curve(c, f"{loop_path}.curves[{k}]")
                for k, c in enumerate(_array(loop["curves"], f"{loop_path}.curves"))
            )
            loops.append(Loop(curves))
        profiles.append(Profile(tuple(loops)))

    ex_path = f"{path}.extrusion"
    ex = _object(obj["extrusion"], ex_path,
                 ("distance_toward", "distance_opposite", "operation", "sketch_scale"))
    try:
        operation = Operation(ex["operation"])
    except ValueError:
        raise SchemaViolation(f"{ex_path}.operation", f"unknown operation {ex['operation']!r}")
    extrusion = Extrusion(
        distance_toward=_number(ex["distance_toward"], f"{ex_path}.distance_toward"),
        distance_opposite=_number(ex["distance_opposite"], f"{ex_path}.distance_opposite"),
        operation=operation,
        sketch_scale=_number(ex["sketch_scale"], f"{ex_path}.sketch_scale"),
    )
    return Part(coordinate_system, tuple(profiles), extrusion)


def load_sequence(text: str) -> CadSequence:
    """Structural parse only: syntax, keys and types, no geometric invariants."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedJson("$", f"{e.msg} at line {e.lineno} column {e.colno}") from e
    except (TypeError, ValueError) as e:
        raise MalformedJson("$", str(e)) from e

    root = _object(data, "$", ("parts",))
    parts = tuple(_parse_part(p, f"parts[{i}]") for i, p in enumerate(_array(root["parts"], "parts")))
    return CadSequence(parts)


def parse_sequence(text: str) -> CadSequence:
    """Parse and fully validate a minimal-JSON construction sequence."""
    seq = load_sequence(text)
    violations = validate(seq)
    if violations:
        first = violations[0]
        logger.debug(f"Sequence rejected with {len(violations)} violations, first at {first.path}")
        raise InvariantViolation(first.path, first.code, first.message)
    return seq


# --- validation --------------------------------------------------------------

def _finite(values, path: str, out: List[Violation]) -> bool:
    if all(math.isfinite(v) for v in values):
        return True
    out.append(Violation(path, "NonFinite", "value is NaN or infinite"))
    return False


def _validate_frame(cs: CoordinateSystem, path: str, out: List[Violation]) -> None:
    ok = True
    for name in ("origin", "x_axis", "y_axis", "z_axis"):
        ok &= _finite(getattr(cs, name), f"{path}.{name}", out)
    if not ok:
        return
    x, y, z = (np.asarray(a) for a in (cs.x_axis, cs.y_axis, cs.z_axis))
    for name, axis in (("x_axis", x), ("y_axis", y), ("z_axis", z)):
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > AXIS_TOLERANCE:
            out.append(Violation(f"{path}.{name}", "NonUnitAxis", f"norm {norm!r}"))
    for (na, a), (nb, b) in ((("x_axis", x), ("y_axis", y)), (("y_axis", y), ("z_axis", z)), (("x_axis", x), ("z_axis", z))):
        if abs(float(np.dot(a, b))) > AXIS_TOLERANCE:
            out.append(Violation(f"{path}.{nb}", "NonOrthogonalAxes", f"{na} . {nb} = {float(np.dot(a, b))!r}"))
    if float(np.linalg.norm(np.cross(x, y) - z)) > AXIS_TOLERANCE:
        out.append(Violation(f"{path}.z_axis", "LeftHandedFrame", "z_axis != x_axis x y_axis"))


def _validate_curve(curve: Curve, path: str, out: List[Violation]) -> bool:
    if isinstance(curve, Line):
        if not (_finite(curve.start, f"{path}.start", out) and _finite(curve.end, f"{path}.end", out)):
            return False
        if math.dist(curve.start, curve.end) <= MIN_LINE_LENGTH:
            out.append(Violation(path, "DegenerateLine", "start equals end"))
            return False
    elif isinstance(curve, Arc):
        if not all(_finite(getattr(curve, k), f"{path}.{k}", out) for k in ("start", "mid", "end")):
            return False
        if min(math.dist(curve.start, curve.mid), math.dist(curve.mid, curve.end),
               math.dist(curve.start, curve.end)) <= MIN_LINE_LENGTH:
            out.append(Violation(path, "DegenerateArc", "arc points are not distinct"))
            return False
        try:
            curve.circumcircle()
        except ValueError:
            out.append(Violation(path, "DegenerateArc", "arc points are collinear"))
            return False
    else:
        if not (_finite(curve.center, f"{path}.center", out) and _finite((curve.radius,), f"{path}.radius", out)):
            return False
        if not curve.radius > 0:
            out.append(Violation(f"{path}.radius", "NonPositiveRadius", f"radius {curve.radius!r}"))
            return False
    return True


def _validate_loop(loop: Loop, path: str, out: List[Violation]) -> bool:
    if not loop.curves:
        out.append(Violation(f"{path}.curves", "BadLoopComposition", "loop has no curves"))
        return False
    ok = all([_validate_curve(c, f"{path}.curves[{i}]", out) for i, c in enumerate(loop.curves)])
    circles = sum(isinstance(c, Circle) for c in loop.curves)
    if circles and not loop.is_circle:
        out.append(Violation(f"{path}.curves", "BadLoopComposition", "a circle must be alone in its loop"))
        return False
    if not circles and len(loop.curves) < 2:
        out.append(Violation(f"{path}.curves", "BadLoopComposition", "open chains need at least two curves"))
        return False
    if not ok or loop.is_circle:
        return ok
    for i, curve in enumerate(loop.curves):
        following = loop.curves[(i + 1) % len(loop.curves)]
        gap = math.dist(curve.end, following.start)
        if gap > LOOP_CLOSURE_TOLERANCE:
            out.append(Violation(f"{path}.curves[{i}]", "OpenLoop", f"gap {gap!r} to next curve"))
            return False
    return True


def _validate_profile(profile: Profile, path: str, params: TessellationParams, out: List[Violation]) -> None:
    if not profile.loops:
        out.append(Violation(f"{path}.loops", "EmptyProfile", "profile has no loops"))
        return
    if not all([_validate_loop(loop, f"{path}.loops[{i}]", out) for i, loop in enumerate(profile.loops)]):
        return

    try:
        build_profile(profile, params)
    except KernelError as e:
        where = f"{path}.loops[{e.loop_index}]" if e.loop_index is not None else path
        out.append(Violation(where, e.code, e.message))


def _validate_extrusion(ex: Extrusion, path: str, out: List[Violation]) -> None:
    for name in ("distance_toward", "distance_opposite", "sketch_scale"):
        value = getattr(ex, name)
        if not math.isfinite(value):
            out.append(Violation(f"{path}.{name}", "NonFinite", "value is NaN or infinite"))
            return
    if ex.distance_toward < 0:
        out.append(Violation(f"{path}.distance_toward", "NegativeDistance", f"{ex.distance_toward!r}"))
    if ex.distance_opposite < 0:
        out.append(Violation(f"{path}.distance_opposite", "NegativeDistance", f"{ex.distance_opposite!r}"))
    if not ex.extent > 0:
        out.append(Violation(path, "ZeroExtent", "distance_toward + distance_opposite must be > 0"))
    if not ex.sketch_scale > 0:
        out.append(Violation(f"{path}.sketch_scale", "NonPositiveScale", f"{ex.sketch_scale!r}"))


def validate(seq: CadSequence, params: TessellationParams = None) -> List[Violation]:
    """All invariant violations of a sequence; empty when the sequence is valid."""
    params = params or TessellationParams()
    out: List[Violation] = []
    if not seq.parts:
        out.append(Violation("parts", "EmptyParts", "sequence has no parts"))
        return out
    if seq.parts[0].extrusion.operation is not Operation.NEW_BODY:
        out.append(Violation("parts[0].extrusion.operation", "FirstOpNotNewBody",
                             f"first operation is {seq.parts[0].extrusion.operation.value}"))
    for i, part in enumerate(seq.parts):
        path = f"parts[{i}]"
        _validate_frame(part.coordinate_system, f"{path}.coordinate_system", out)
        if not part.profiles:
            out.append(Violation(f"{path}.sketch.profiles", "EmptyProfiles", "part has no profiles"))
        for j, profile in enumerate(part.profiles):
            _validate_profile(profile, f"{path}.sketch.profiles[{j}]", params, out)
        _validate_extrusion(part.extrusion, f"{path}.extrusion", out)
    return out


# --- serialization -----------------------------------------------------------

def _curve_to_dict(curve: Curve) -> dict:
    if isinstance(curve, Line):
        return {"type": "line", "start": list(curve.start), "end": list(curve.end)}
    if isinstance(curve, Arc):
        return {"type": "arc", "start": list(curve.start), "mid": list(curve.mid), "end": list(curve.end)}
    return {"type": "circle", "center": list(curve.center), "radius": curve.radius}


def sequence_to_dict(seq: CadSequence) -> dict:
    return {"parts": [
        {
            "coordinate_system": {
                "origin": list(part.coordinate_system.origin),
                "x_axis": list(part.coordinate_system.x_axis),
                "y_axis": list(part.coordinate_system.y_axis),
                "z_axis": list(part.coordinate_system.z_axis),
            },
            "sketch": {"profiles": [
                {"loops": [{"curves": [_curve_to_dict(c) for c in loop.curves]} for loop in profile.loops]}
                for profile in part.profiles
            ]},
            "extrusion": {
                "distance_toward": part.extrusion.distance_toward,
                "distance_opposite": part.extrusion.distance_opposite,
                "operation": part.extrusion.operation.value,
                "sketch_scale": part.extrusion.sketch_scale,
            },
        }
        for part in seq.parts
    ]}


def serialize_sequence(seq: CadSequence) -> str:
    """Canonical text: fixed key order, shortest round-trip float repr."""
    # json renders floats with repr(), which is the shortest round-trip form
    return json.dumps(sequence_to_dict(seq), indent=2, allow_nan=False) + "\n"
