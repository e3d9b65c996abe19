"""Shared mesh and sequence builders."""
import os

import numpy as np
import pytest
import trimesh

from config import FIXTURES_DIR
from cad.mesh import TriangleMesh
from cad.schema import serialize_sequence
from cad.sequence import CadSequence, Circle, CoordinateSystem, Extrusion, Line, Loop, Operation, Part, Profile


def fixture_text(name: str) -> str:
    with open(os.path.join(FIXTURES_DIR, name), "r") as f:
        return f.read()


def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriangleMesh:
    """Axis-aligned box, 8 vertices and 12 outward triangles."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    box = trimesh.creation.box(extents=hi - lo)
    return TriangleMesh(np.asarray(box.vertices) + (lo + hi) / 2.0, np.asarray(box.faces))


def icosphere_mesh(subdivisions: int = 4, radius: float = 1.0) -> TriangleMesh:
    return TriangleMesh.from_trimesh(trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius))


def square_loop(x0=0.0, y0=0.0, size=1.0, clockwise=False) -> Loop:
    corners = [(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size)]
    if clockwise:
        corners = corners[::-1]
    return Loop(tuple(Line(corners[i], corners[(i + 1) % 4]) for i in range(4)))


def circle_loop(cx=0.0, cy=0.0, r=1.0) -> Loop:
    return Loop((Circle((cx, cy), r),))


def make_part(loops, toward=1.0, opposite=0.0, op=Operation.NEW_BODY, scale=1.0, cs=None) -> Part:
    if isinstance(loops, Loop):
        loops = [loops]
    return Part(
        cs or CoordinateSystem.identity(),
        (Profile(tuple(loops)),),
        Extrusion(toward, opposite, op, scale),
    )


def make_seq(*parts: Part) -> CadSequence:
    return CadSequence(tuple(parts))


def cube_seq(size=1.0, x0=0.0, y0=0.0) -> CadSequence:
    return make_seq(make_part(square_loop(x0, y0, size), toward=size))


def holed_block_seq(holes: int = 1) -> CadSequence:
    """Block 2*holes+1 wide with `holes` square through-holes."""
    width = 2.0 * holes + 1.0
    outer = Loop((
        Line((0.0, 0.0), (width, 0.0)),
        Line((width, 0.0), (width, 3.0)),
        Line((width, 3.0), (0.0, 3.0)),
        Line((0.0, 3.0), (0.0, 0.0)),
    ))
    inner = [square_loop(2.0 * k + 1.0, 1.0, 1.0) for k in range(holes)]
    return make_seq(make_part([outer, *inner], toward=1.0))


@pytest.fixture
def unit_cube() -> TriangleMesh:
    return box_mesh()


@pytest.fixture
def unit_square_text() -> str:
    return fixture_text("unit_square.json")


@pytest.fixture
def cube_text() -> str:
    return serialize_sequence(cube_seq())
