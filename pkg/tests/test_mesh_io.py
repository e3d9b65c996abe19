import numpy as np
import pytest

from cad.kernel import build_model
from cad.mesh_io import export_mesh, load_mesh
from metrics.topology import euler_characteristic, is_watertight

from conftest import holed_block_seq


@pytest.mark.parametrize("suffix", [".stl", ".obj"])
def test_export_and_load(tmp_path, suffix):
    mesh = build_model(holed_block_seq(1))
    path = tmp_path / f"block{suffix}"
    export_mesh(mesh, path)
    loaded = load_mesh(path)
    assert len(loaded.triangles) == len(mesh.triangles)
    assert is_watertight(loaded)
    assert euler_characteristic(loaded) == 0
    assert loaded.signed_volume() == pytest.approx(mesh.signed_volume(), rel=1e-6)
    assert np.allclose(loaded.bounds(), mesh.bounds(), atol=1e-6)


def test_unsupported_suffix(tmp_path, unit_cube):
    with pytest.raises(ValueError):
        export_mesh(unit_cube, tmp_path / "cube.ply")
    with pytest.raises(ValueError):
        load_mesh(tmp_path / "cube.ply")
