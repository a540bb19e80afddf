"""In-hand cube-rotation reward, recomputed offline over recorded trajectories.

The per-tick reward is a clipped vertical angular velocity plus four
penalties: deviation from the cached grasp pose, mechanical work, motor
torques, and object linear velocity.  Scales follow the training setup;
penalty functional forms are configurable so alternates can be audited.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

ROTATION_CLIP = 0.25
JOINT_COUNT = 16

L2_SQUARED = "l2_squared"
L2 = "l2"
L1 = "l1"
ABS_WORK = "abs_sum"
NET_WORK = "net_sum"

_NORMS = {
    L2_SQUARED: lambda v: float(v @ v),
    L2: lambda v: float(np.linalg.norm(v)),
    L1: lambda v: float(np.abs(v).sum()),
}


@dataclass(frozen=True)
class RewardScales:
    rotation: float = 1.25
    pose: float = -0.1
    work: float = -1.0
    torque: float = -0.1
    linvel: float = -0.3

    def __post_init__(self):
        if not self.rotation > 0:
            raise ValueError(f"rotation scale must be > 0, got {self.rotation}")
        for label, s in (("pose", self.pose), ("work", self.work),
                         ("torque", self.torque), ("linvel", self.linvel)):
            if s > 0:
                raise ValueError(f"{label} penalty scale must be <= 0, got {s}")


@dataclass(frozen=True)
class PenaltyForms:
    pose: str = L2_SQUARED
    work: str = ABS_WORK
    torque: str = L2_SQUARED
    linvel: str = L2_SQUARED

    def __post_init__(self):
        for label, form in (("pose", self.pose), ("torque", self.torque), ("linvel", self.linvel)):
            if form not in _NORMS:
                raise ValueError(f"{label} form must be one of {sorted(_NORMS)}, got {form!r}")
        if self.work not in (ABS_WORK, NET_WORK):
            raise ValueError(f"work form must be {ABS_WORK!r} or {NET_WORK!r}, got {self.work!r}")


@dataclass(frozen=True)
class TrajectoryStep:
    q: np.ndarray
    q_target: np.ndarray
    tau: np.ndarray
    dq: np.ndarray
    omega_z: float
    v_obj: np.ndarray
    q_grasp: np.ndarray

    def __post_init__(self):
        for name, want in (("q", JOINT_COUNT), ("q_target", JOINT_COUNT), ("tau", JOINT_COUNT),
                           ("dq", JOINT_COUNT), ("v_obj", 3), ("q_grasp", JOINT_COUNT)):
            v = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if v.size != want:
                raise ValueError(f"{name}: expected {want} values, got {v.size}")
            if not np.isfinite(v).all():
                raise ValueError(f"{name}: non-finite values")
            object.__setattr__(self, name, v)
        if not np.isfinite(self.omega_z):
            raise ValueError("omega_z: non-finite value")


@dataclass(frozen=True)
class RewardBreakdown:
    """Unscaled per-tick terms plus the scaled total."""

    r_rot: float
    p_pose: float
    p_work: float
    p_torque: float
    p_linvel: float
    total: float

    def as_dict(self) -> dict:
        return {
            "r_rot": self.r_rot,
            "p_pose": self.p_pose,
            "p_work": self.p_work,
            "p_torque": self.p_torque,
            "p_linvel": self.p_linvel,
            "total": self.total,
        }


def rotation_reward(omega_z: float) -> float:
    """clip(omega_z, -0.25, 0.25)."""
    if not np.isfinite(omega_z):
        raise ValueError(f"omega_z must be finite, got {omega_z}")
    return float(min(max(omega_z, -ROTATION_CLIP), ROTATION_CLIP))


def step_reward(
    step: TrajectoryStep,
    scales: RewardScales = RewardScales(),
    forms: PenaltyForms = PenaltyForms(),
) -> RewardBreakdown:
    r_rot = rotation_reward(step.omega_z)
    p_pose = _NORMS[forms.pose](step.q - step.q_grasp)
    work_terms = step.tau * step.dq
    p_work = float(np.abs(work_terms).sum() if forms.work == ABS_WORK else work_terms.sum())
    p_torque = _NORMS[forms.torque](step.tau)
    p_linvel = _NORMS[forms.linvel](step.v_obj)
    total = (
        scales.rotation * r_rot
        + scales.pose * p_pose
        + scales.work * p_work
        + scales.torque * p_torque
        + scales.linvel * p_linvel
    )
    return RewardBreakdown(r_rot, p_pose, p_work, p_torque, p_linvel, total)


@dataclass(frozen=True)
class EpisodeSummary:
    steps: int
    total: float
    term_sums: dict
    mean_omega_z: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "steps": self.steps,
                "total": self.total,
                "term_sums": self.term_sums,
                "mean_omega_z": self.mean_omega_z,
            },
            sort_keys=True,
            indent=2,
        )


def episode_return(
    steps,
    scales: RewardScales = RewardScales(),
    forms: PenaltyForms = PenaltyForms(),
) -> EpisodeSummary:
    """Sum per-step breakdowns; the headline statistic is the mean omega_z."""
    breakdowns = [step_reward(s, scales, forms) for s in steps]
    if not breakdowns:
        raise ValueError("episode must contain at least one step")
    sums = {k: float(sum(b.as_dict()[k] for b in breakdowns)) for k in breakdowns[0].as_dict()}
    total = sums.pop("total")
    mean_wz = float(np.mean([s.omega_z for s in steps]))
    return EpisodeSummary(len(breakdowns), total, sums, mean_wz)


# -- trajectory CSV -----------------------------------------------------------

def _columns() -> list[str]:
    cols = ["t"]
    cols += [f"q{i}" for i in range(JOINT_COUNT)]
    cols += [f"qt{i}" for i in range(JOINT_COUNT)]
    cols += [f"tau{i}" for i in range(JOINT_COUNT)]
    cols += [f"dq{i}" for i in range(JOINT_COUNT)]
    cols += ["wz", "vx", "vy", "vz"]
    cols += [f"qg{i}" for i in range(JOINT_COUNT)]
    return cols


TRAJECTORY_COLUMNS = _columns()


def read_trajectory_csv(text: str) -> tuple[list[float], list[TrajectoryStep]]:
    """Parse a trajectory; raises naming the first missing column."""
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for col in TRAJECTORY_COLUMNS:
        if col not in header:
            raise ValueError(f"missing column: {col}")
    times, steps = [], []
    for row in reader:
        times.append(float(row["t"]))
        steps.append(
            TrajectoryStep(
                q=[float(row[f"q{i}"]) for i in range(JOINT_COUNT)],
                q_target=[float(row[f"qt{i}"]) for i in range(JOINT_COUNT)],
                tau=[float(row[f"tau{i}"]) for i in range(JOINT_COUNT)],
                dq=[float(row[f"dq{i}"]) for i in range(JOINT_COUNT)],
                omega_z=float(row["wz"]),
                v_obj=[float(row["vx"]), float(row["vy"]), float(row["vz"])],
                q_grasp=[float(row[f"qg{i}"]) for i in range(JOINT_COUNT)],
            )
        )
    return times, steps


def write_trajectory_csv(times, steps) -> str:
    """Inverse of :func:`read_trajectory_csv`; used to build fixtures."""
    lines = [",".join(TRAJECTORY_COLUMNS)]
    for t, s in zip(times, steps):
        vals = [t, *s.q, *s.q_target, *s.tau, *s.dq, s.omega_z, *s.v_obj, *s.q_grasp]
        lines.append(",".join(f"{v:.9g}" for v in vals))
    return "\n".join(lines) + "\n"
