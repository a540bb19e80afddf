"""Seeded Monte-Carlo fingertip workspaces and thumb opposability volumes.

Sampling is counter-based: the uniforms for sample i come from a Philox
stream keyed by (seed, i), so results are independent of batch size and
identical whether samples are drawn serially or in parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .kinematics import batch_tip_positions
from .model import HandModel, KinematicChain

DEFAULT_SAMPLES = 25000
DEFAULT_SEED = 0
# two ~17.5 mm soft fingertip pad radii
DEFAULT_THRESHOLD = 0.035
DEFAULT_VOXEL = 0.005


def sample_uniforms(seed: int, n: int, dim: int) -> np.ndarray:
    """(n, dim) uniforms in [0, 1); row i comes from Philox key (seed, i)."""
    out = np.empty((n, dim))
    for i in range(n):
        bits = np.random.Philox(key=np.array([seed, i], dtype=np.uint64))
        out[i] = np.random.Generator(bits).random(dim)
    return out


def _scale_to_limits(u: np.ndarray, limits: np.ndarray) -> np.ndarray:
    return limits[:, 0] + u * (limits[:, 1] - limits[:, 0])


@dataclass(frozen=True)
class WorkspaceSample:
    chain_name: str
    q: np.ndarray
    tip: np.ndarray


def workspace_cloud(chain: KinematicChain, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(n, dof) in-limit configurations and their (n, 3) tip positions."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    q = _scale_to_limits(sample_uniforms(seed, n, chain.dof), chain.joint_limits())
    return q, batch_tip_positions(chain, q)


def sample_workspace(
    chain: KinematicChain, n: int, seed: int, chain_name: str = ""
) -> list[WorkspaceSample]:
    q, tips = workspace_cloud(chain, n, seed)
    return [WorkspaceSample(chain_name, q[i], tips[i]) for i in range(n)]


@dataclass(frozen=True)
class ContactRecord:
    sample_index: int
    finger_q: np.ndarray
    thumb_q: np.ndarray
    point: np.ndarray  # midpoint of the two tips, meters
    tip_distance: float


@dataclass(frozen=True)
class OpposabilityResult:
    finger: str
    sample_count: int
    contact_count: int
    volume_mm3: float
    seed: int
    threshold: float
    voxel: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "finger": self.finger,
                "sample_count": self.sample_count,
                "contact_count": self.contact_count,
                "volume_mm3": self.volume_mm3,
                "seed": self.seed,
                "threshold_m": self.threshold,
                "voxel_m": self.voxel,
            },
            sort_keys=True,
            indent=2,
        )


def voxel_volume(points: np.ndarray, voxel: float) -> float:
    """Occupied-voxel volume of a point set, in mm^3.

    Points are binned by floor(p / voxel) per axis; the volume is the count
    of distinct occupied voxels times voxel^3.  Empty input gives 0.
    """
    if voxel <= 0:
        raise ValueError(f"voxel size must be > 0, got {voxel}")
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if points.shape[0] == 0:
        return 0.0
    cells = np.unique(np.floor(points / voxel).astype(np.int64), axis=0)
    return float(cells.shape[0]) * voxel**3 * 1e9


def opposability(
    model: HandModel,
    finger: str,
    n: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    threshold: float = DEFAULT_THRESHOLD,
    voxel: float = DEFAULT_VOXEL,
) -> tuple[OpposabilityResult, list[ContactRecord]]:
    """Sample (finger q, thumb q) pairs and voxelize where the tips touch.

    Sample i spends its Philox stream on the finger angles first, then the
    thumb's, so a contact is reproducible from (seed, i) alone.
    """
    if finger == "thumb" or finger not in model.chains:
        raise KeyError(f"finger must be a non-thumb chain of the model, got {finger!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    if voxel <= 0:
        raise ValueError(f"voxel size must be > 0, got {voxel}")
    fchain = model.chains[finger]
    tchain = model.chains["thumb"]
    df, dt = fchain.dof, tchain.dof
    u = sample_uniforms(seed, n, df + dt)
    fq = _scale_to_limits(u[:, :df], fchain.joint_limits())
    tq = _scale_to_limits(u[:, df:], tchain.joint_limits())
    ftips = batch_tip_positions(fchain, fq)
    ttips = batch_tip_positions(tchain, tq)
    dist = np.linalg.norm(ftips - ttips, axis=1)
    hits = np.flatnonzero(dist < threshold)  # already in sample-index order
    contacts = [
        ContactRecord(int(i), fq[i], tq[i], 0.5 * (ftips[i] + ttips[i]), float(dist[i]))
        for i in hits
    ]
    points = np.array([c.point for c in contacts]).reshape(-1, 3)
    result = OpposabilityResult(
        finger=finger,
        sample_count=n,
        contact_count=len(contacts),
        volume_mm3=voxel_volume(points, voxel),
        seed=seed,
        threshold=threshold,
        voxel=voxel,
    )
    return result, contacts


def opposability_volume(
    model: HandModel,
    finger: str,
    n: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    threshold: float = DEFAULT_THRESHOLD,
    voxel: float = DEFAULT_VOXEL,
) -> OpposabilityResult:
    return opposability(model, finger, n, seed, threshold, voxel)[0]
