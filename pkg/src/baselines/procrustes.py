# src/baselines/procrustes.py
import numpy as np

from src.geometry.procrustes import procrustes_transform
from src.models.geometry import RigidTransform
from src.models.morphable import ModelData
from src.morphable.model import masked, region_mask


def proc_baseline(
    vs_full: np.ndarray, vt_full: np.ndarray, psi: ModelData, region: str
) -> RigidTransform:
    """Procrustes on one region of two model-topology meshes (world frame)."""
    mask = region_mask(psi, region)
    return procrustes_transform(masked(vs_full, mask), masked(vt_full, mask))
