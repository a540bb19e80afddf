"""Forward kinematics and geometric Jacobians for chain end-effectors.

All poses are expressed in the palm frame.  The finite-difference Jacobian is
an independent numerical check on the geometric construction and is kept
deliberately separate from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import KinematicChain
from .transforms import Transform, rotation_about_axis, rotation_log


@dataclass(frozen=True)
class Jacobian:
    """End-effector Jacobian split into linear (m/rad) and angular (rad/rad) blocks."""

    linear: np.ndarray  # (3, n)
    angular: np.ndarray  # (3, n)
    joint_names: tuple[str, ...]

    @property
    def full(self) -> np.ndarray:
        return np.vstack([self.linear, self.angular])

    def block(self, which: str) -> np.ndarray:
        if which == "linear":
            return self.linear
        if which == "angular":
            return self.angular
        raise ValueError(f"unknown Jacobian block {which!r}; expected 'linear' or 'angular'")


def _check_q(chain: KinematicChain, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != chain.dof:
        raise ValueError(f"dimension mismatch: chain has {chain.dof} DoF, got {q.size} angles")
    return q


def chain_frames(chain: KinematicChain, q) -> tuple[list[tuple[np.ndarray, np.ndarray]], Transform]:
    """Per-revolute-joint (world axis, world origin) pairs plus the tip pose."""
    q = _check_q(chain, q)
    t = Transform.identity()
    frames = []
    k = 0
    for joint in chain.joints:
        t = t @ joint.origin
        if joint.is_revolute:
            frames.append((t.rotation @ joint.axis, t.translation.copy()))
            t = t @ Transform(rotation_about_axis(joint.axis, q[k]))
            k += 1
    return frames, t @ chain.tip_offset


def forward_kinematics(chain: KinematicChain, q) -> Transform:
    """Palm-frame fingertip pose.  Joint limits are deliberately not enforced."""
    return chain_frames(chain, q)[1]


def geometric_jacobian(chain: KinematicChain, q) -> Jacobian:
    """Columns (z x (p_tip - p_joint); z) per revolute joint, palm frame."""
    frames, tip = chain_frames(chain, q)
    n = len(frames)
    linear = np.empty((3, n))
    angular = np.empty((3, n))
    for i, (axis, origin) in enumerate(frames):
        linear[:, i] = np.cross(axis, tip.translation - origin)
        angular[:, i] = axis
    names = tuple(j.name for j in chain.joints if j.is_revolute)
    return Jacobian(linear, angular, names)


def finite_difference_jacobian(chain: KinematicChain, q, h: float = 1e-6) -> Jacobian:
    """Central-difference Jacobian; the angular block uses the rotation log.

    Probe points may leave the joint limits; FK ignores limits by contract.
    """
    if not 0.0 < h <= 1e-3:
        raise ValueError(f"step h must be in (0, 1e-3], got {h}")
    q = _check_q(chain, q)
    n = chain.dof
    linear = np.empty((3, n))
    angular = np.empty((3, n))
    for i in range(n):
        dq = np.zeros(n)
        dq[i] = h
        hi = forward_kinematics(chain, q + dq)
        lo = forward_kinematics(chain, q - dq)
        linear[:, i] = (hi.translation - lo.translation) / (2.0 * h)
        angular[:, i] = rotation_log(hi.rotation @ lo.rotation.T) / (2.0 * h)
    names = tuple(j.name for j in chain.joints if j.is_revolute)
    return Jacobian(linear, angular, names)


def pack_chain(chain: KinematicChain):
    """Flatten a chain into the array layout the batch FK kernels consume."""
    n_joints = len(chain.joints)
    rot0 = np.empty((n_joints, 3, 3))
    trans0 = np.empty((n_joints, 3))
    axes = np.zeros((n_joints, 3))
    is_rev = np.zeros(n_joints, dtype=np.uint8)
    for j, joint in enumerate(chain.joints):
        rot0[j] = joint.origin.rotation
        trans0[j] = joint.origin.translation
        if joint.is_revolute:
            axes[j] = joint.axis
            is_rev[j] = 1
    return rot0, trans0, axes, is_rev, chain.tip_offset.translation.copy()


def batch_tip_positions(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """(N, 3) tip positions for an (N, dof) batch of configurations."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[1] != chain.dof:
        raise ValueError(f"dimension mismatch: expected (N, {chain.dof}) batch, got {q.shape}")
    return kernels.batch_tip_positions(*pack_chain(chain), q)
