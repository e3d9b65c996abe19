"""Mesh exchange: binary STL and v/f-only OBJ."""
import logging
from pathlib import Path

import trimesh
from trimesh.exchange.obj import export_obj
from trimesh.exchange.stl import export_stl

from cad.mesh import TriangleMesh

logger = logging.getLogger(__name__)

MESH_SUFFIXES = (".stl", ".obj")


def export_mesh(mesh: TriangleMesh, path) -> None:
    """Write a mesh; the format follows the file suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    tm = mesh.to_trimesh()
    if suffix == ".stl":
        path.write_bytes(export_stl(tm))
    elif suffix == ".obj":
        text = export_obj(tm, include_normals=False, include_color=False, include_texture=False, header=None)
        path.write_text(text)
    else:
        raise ValueError(f"Unsupported mesh format: {suffix}")
    logger.info(f"Wrote {len(mesh.triangles)} triangles to {path}")


def load_mesh(path) -> TriangleMesh:
    """Read an STL or OBJ file and weld coincident vertices into an indexed mesh."""
    path = Path(path)
    if path.suffix.lower() not in MESH_SUFFIXES:
        raise ValueError(f"Unsupported mesh format: {path.suffix}")
    tm = trimesh.load_mesh(str(path), process=False)
    # STL stores three fresh vertices per facet
    tm.merge_vertices()
    return TriangleMesh.from_trimesh(tm)
