# src/repositories/mesh_repository.py
"""ASCII OBJ meshes in model topology (positions and triangles only)."""

from pathlib import Path

import numpy as np

from src.geometry.rigid import check_block
from src.models.errors import Errors, StabilizerError
from src.models.morphable import ModelData
from src.repositories.container import atomic_write_text


def write_obj(path: Path, vertices: np.ndarray, faces: np.ndarray | None = None) -> None:
    """Write a (4, N) block and optional (F, 3) zero-based faces."""
    block = check_block(vertices, "vertices")
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in block[:3].T.tolist()]
    if faces is not None:
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(faces).tolist()]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_obj(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """(4, N) vertex block and (F, 3) zero-based faces; texture/normal indices are ignored."""
    path = Path(path)
    if not path.exists():
        raise StabilizerError(Errors.FILE_NOT_FOUND, f"Mesh not found: {path}", filepath=str(path))
    vertices = []
    faces = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            values = line.split()
            if not values:
                continue
            try:
                if values[0] == "v":
                    vertices.append([float(values[k]) for k in range(1, 4)])
                elif values[0] == "f":
                    face = [int(v.split("/")[0]) - 1 for v in values[1:]]
                    # fan-triangulate polygons
                    faces.extend([face[0], face[k], face[k + 1]] for k in range(1, len(face) - 1))
            except (ValueError, IndexError) as e:
                raise StabilizerError(
                    Errors.INVALID_DATA_FORMAT,
                    f"{path}:{lineno}: malformed OBJ line",
                    filepath=str(path),
                    line=lineno,
                ) from e
    if not vertices:
        raise StabilizerError(Errors.EMPTY_INPUT, f"{path} has no vertices", filepath=str(path))
    points = np.array(vertices, dtype=np.float64).T
    block = np.vstack([points, np.ones((1, points.shape[1]))])
    return block, np.array(faces, dtype=np.int64).reshape(-1, 3)


def export_obj(psi: ModelData, vertices: np.ndarray, path: Path) -> None:
    """Write vertices in the model's topology."""
    block = check_block(vertices, "vertices")
    if block.shape[1] != psi.n_vertices:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"expected {psi.n_vertices} vertices, got {block.shape[1]}",
        )
    write_obj(path, block, psi.faces)


def read_model_mesh(path: Path, psi: ModelData) -> np.ndarray:
    """Read an OBJ and check it has the model's vertex count."""
    block, _ = read_obj(path)
    if block.shape[1] != psi.n_vertices:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"{path} has {block.shape[1]} vertices, model has {psi.n_vertices}",
            filepath=str(path),
        )
    return block
