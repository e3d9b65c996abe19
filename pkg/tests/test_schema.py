import json
import random

import numpy as np
import pytest

from cad.schema import (
    InvariantViolation,
    MalformedJson,
    SchemaViolation,
    load_sequence,
    parse_sequence,
    serialize_sequence,
    validate,
)
from cad.sequence import Arc, CadSequence, Circle, CoordinateSystem, Extrusion, Line, Loop, Operation, Part, Profile

from conftest import circle_loop, cube_seq, fixture_text, make_part, make_seq, square_loop


def test_parse_documented_example(unit_square_text):
    seq = parse_sequence(unit_square_text)
    assert len(seq.parts) == 1
    assert len(seq.parts[0].profiles) == 1
    curves = seq.parts[0].profiles[0].loops[0].curves
    assert len(curves) == 4
    assert all(isinstance(c, Line) for c in curves)
    assert seq.parts[0].extrusion.operation is Operation.NEW_BODY


def test_negative_radius_names_path():
    seq = make_seq(make_part(circle_loop(0.0, 0.0, 1.0)))
    data = json.loads(serialize_sequence(seq))
    data["parts"][0]["sketch"]["profiles"][0]["loops"][0]["curves"][0]["radius"] = -1
    with pytest.raises(InvariantViolation) as info:
        parse_sequence(json.dumps(data))
    assert info.value.code == "NonPositiveRadius"
    assert info.value.path.startswith("parts[0].sketch")
    assert info.value.path.endswith("radius")


def test_truncated_text_is_malformed():
    with pytest.raises(MalformedJson):
        parse_sequence(fixture_text("truncated.json"))


def test_unknown_key_rejected(unit_square_text):
    data = json.loads(unit_square_text)
    data["parts"][0]["extrusion"]["taper"] = 0.0
    with pytest.raises(SchemaViolation) as info:
        parse_sequence(json.dumps(data))
    assert "parts[0].extrusion" in info.value.path


def test_missing_key_rejected(unit_square_text):
    data = json.loads(unit_square_text)
    del data["parts"][0]["coordinate_system"]["origin"]
    with pytest.raises(SchemaViolation):
        parse_sequence(json.dumps(data))


def test_wrong_type_rejected(unit_square_text):
    data = json.loads(unit_square_text)
    data["parts"][0]["extrusion"]["distance_toward"] = "1"
    with pytest.raises(SchemaViolation):
        parse_sequence(json.dumps(data))


def test_serialize_round_trip(unit_square_text):
    seq = parse_sequence(unit_square_text)
    text = serialize_sequence(seq)
    assert parse_sequence(text) == seq
    assert serialize_sequence(parse_sequence(text)) == text


def test_serialize_is_deterministic():
    assert serialize_sequence(cube_seq()) == serialize_sequence(cube_seq())


def test_float_round_trip_exact():
    rng = random.Random(7)
    for _ in range(1000):
        x = rng.uniform(-1e3, 1e3)
        cs = CoordinateSystem((x, 0.1 + 0.2, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
        seq = make_seq(make_part(square_loop(), cs=cs))
        back = load_sequence(serialize_sequence(seq))
        assert back.parts[0].coordinate_system.origin == (x, 0.1 + 0.2, 0.0)


def test_validate_valid_sequence_is_empty():
    assert validate(cube_seq()) == []


def test_first_operation_must_be_new_body():
    seq = make_seq(make_part(square_loop(), op=Operation.CUT))
    codes = [v.code for v in validate(seq)]
    assert codes == ["FirstOpNotNewBody"]


def test_open_loop_detected():
    loop = Loop((
        Line((0.0, 0.0), (1.0, 0.0)),
        Line((1.0, 0.0), (1.0, 1.0)),
        Line((1.0, 1.0), (0.0, 1.0)),
        Line((0.0, 1.0), (0.0, 0.001)),
    ))
    violations = validate(make_seq(make_part(loop)))
    assert [v.code for v in violations] == ["OpenLoop"]
    assert violations[0].path == "parts[0].sketch.profiles[0].loops[0].curves[3]"


def test_left_handed_frame_detected():
    cs = CoordinateSystem((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, -1.0))
    codes = {v.code for v in validate(make_seq(make_part(square_loop(), cs=cs)))}
    assert "LeftHandedFrame" in codes


def test_non_unit_axis_detected():
    cs = CoordinateSystem((0.0, 0.0, 0.0), (2.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    codes = {v.code for v in validate(make_seq(make_part(square_loop(), cs=cs)))}
    assert "NonUnitAxis" in codes


def test_zero_extent_detected():
    seq = make_seq(make_part(square_loop(), toward=0.0, opposite=0.0))
    assert [v.code for v in validate(seq)] == ["ZeroExtent"]


def test_self_intersecting_loop_detected():
    bowtie = Loop((
        Line((0.0, 0.0), (1.0, 1.0)),
        Line((1.0, 1.0), (1.0, 0.0)),
        Line((1.0, 0.0), (0.0, 1.0)),
        Line((0.0, 1.0), (0.0, 0.0)),
    ))
    assert [v.code for v in validate(make_seq(make_part(bowtie)))] == ["SelfIntersectingLoop"]


def test_hole_outside_outer_detected():
    seq = make_seq(make_part([square_loop(), square_loop(2.0, 2.0, 0.5)]))
    violations = validate(seq)
    assert [v.code for v in violations] == ["HoleOutsideOuter"]
    assert violations[0].path.endswith("loops[1]")


def test_validate_reports_every_violation():
    seq = make_seq(
        make_part(square_loop(), op=Operation.JOIN),
        make_part(square_loop(), toward=-1.0, opposite=2.0),
    )
    codes = [v.code for v in validate(seq)]
    assert codes == ["FirstOpNotNewBody", "NegativeDistance"]


def test_integer_too_large_for_float(unit_square_text):
    data = json.loads(unit_square_text)
    data["parts"][0]["coordinate_system"]["origin"][0] = 10 ** 400
    with pytest.raises(SchemaViolation) as info:
        load_sequence(json.dumps(data))
    assert info.value.path == "parts[0].coordinate_system.origin[0]"
    assert "out of range" in info.value.message


def test_integer_literal_past_digit_limit_is_malformed():
    with pytest.raises(MalformedJson):
        load_sequence('{"parts": [' + "9" * 5000 + "]}")


def random_frame(rng: random.Random) -> CoordinateSystem:
    q = np.array([rng.gauss(0.0, 1.0) for _ in range(4)])
    w, x, y, z = q / np.linalg.norm(q)
    rot = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
    x_axis, y_axis = rot[:, 0], rot[:, 1]
    z_axis = np.cross(x_axis, y_axis)
    origin = [rng.uniform(-50.0, 50.0) for _ in range(3)]
    return CoordinateSystem(*(tuple(float(c) for c in v) for v in (origin, x_axis, y_axis, z_axis)))


def random_part(rng: random.Random, first: bool) -> Part:
    """Rectangle capped by an outward arc, with up to three circular holes."""
    w, h = rng.uniform(1.0, 20.0), rng.uniform(1.0, 20.0)
    bulge = rng.uniform(0.1, 0.45) * w
    outer = Loop((
        Line((0.0, 0.0), (w, 0.0)),
        Line((w, 0.0), (w, h)),
        Arc(start=(w, h), end=(0.0, h), mid=(w / 2.0, h + bulge)),
        Line((0.0, h), (0.0, 0.0)),
    ))
    holes = rng.randint(0, 3)
    radius = 0.25 * min(w / (holes + 1), h)
    loops = [outer] + [Loop((Circle((w * (k + 1) / (holes + 1), h / 2.0), radius),)) for k in range(holes)]
    op = Operation.NEW_BODY if first else rng.choice(list(Operation))
    opposite = rng.choice([0.0, rng.uniform(0.1, 5.0)])
    extrusion = Extrusion(rng.uniform(0.1, 5.0), opposite, op, rng.uniform(0.5, 2.0))
    return Part(random_frame(rng), (Profile(tuple(loops)),), extrusion)


def test_generated_sequences_round_trip():
    rng = random.Random(11)
    for _ in range(200):
        seq = CadSequence(tuple(random_part(rng, i == 0) for i in range(rng.randint(1, 4))))
        assert validate(seq) == []
        text = serialize_sequence(seq)
        assert parse_sequence(text) == seq
        assert serialize_sequence(parse_sequence(text)) == text
