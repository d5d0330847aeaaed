# tests/unit/repositories/test_mesh_repository.py
import numpy as np
import pytest

from src.models.errors import Errors, StabilizerError
from src.repositories.mesh_repository import export_obj, read_model_mesh, read_obj, write_obj


def test_obj_round_trip_is_exact(psi, pairs, tmp_path):
    path = tmp_path / "mesh.obj"
    export_obj(psi, pairs[0].source_full, path)
    block = read_model_mesh(path, psi)
    assert np.array_equal(block, pairs[0].source_full)
    _, faces = read_obj(path)
    assert np.array_equal(faces, psi.faces)


def test_polygons_are_fan_triangulated(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text(
        "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\n", encoding="utf-8"
    )
    block, faces = read_obj(path)
    assert block.shape == (4, 4)
    assert faces.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_malformed_line(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 zero 0\n", encoding="utf-8")
    with pytest.raises(StabilizerError) as exc:
        read_obj(path)
    assert exc.value.code == Errors.INVALID_DATA_FORMAT
    assert exc.value.detail.context["line"] == 2


def test_mesh_without_vertices(tmp_path):
    path = tmp_path / "empty.obj"
    path.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(StabilizerError) as exc:
        read_obj(path)
    assert exc.value.code == Errors.EMPTY_INPUT


def test_model_mesh_vertex_count_mismatch(psi, tmp_path):
    path = tmp_path / "small.obj"
    write_obj(path, np.vstack([np.eye(3), np.ones((1, 3))]))
    with pytest.raises(StabilizerError) as exc:
        read_model_mesh(path, psi)
    assert exc.value.code == Errors.SHAPE_MISMATCH


def test_export_rejects_other_topology(psi, tmp_path):
    with pytest.raises(StabilizerError) as exc:
        export_obj(psi, np.ones((4, 3)), tmp_path / "x.obj")
    assert exc.value.code == Errors.SHAPE_MISMATCH
