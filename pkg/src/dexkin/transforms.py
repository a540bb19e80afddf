"""Rigid transforms (SE(3)) and the rotation helpers used by the FK stack."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHONORMALITY_TOL = 1e-9


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit axis."""
    x, y, z = axis
    c = np.cos(angle)
    s = np.sin(angle)
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def rotation_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Extrinsic XYZ roll-pitch-yaw, i.e. R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


def rpy_from_rotation(r: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`rotation_from_rpy`; picks pitch in [-pi/2, pi/2]."""
    pitch = np.arctan2(-r[2, 0], np.hypot(r[0, 0], r[1, 0]))
    if abs(np.cos(pitch)) < 1e-12:
        # gimbal lock: fold yaw into roll
        roll = np.arctan2(-r[1, 2], r[1, 1])
        yaw = 0.0
    else:
        roll = np.arctan2(r[2, 1], r[2, 2])
        yaw = np.arctan2(r[1, 0], r[0, 0])
    return float(roll), float(pitch), float(yaw)


def rotation_log(r: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (the so(3) logarithm).

    Stable for small angles (series) and near pi (axis from the symmetric
    part), which is what the finite-difference Jacobian needs.
    """
    trace = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(trace)
    skew = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if angle < 1e-7:
        return 0.5 * skew
    if angle > np.pi - 1e-5:
        # near pi the skew part vanishes; recover axis from R + I
        m = 0.5 * (r + np.eye(3))
        axis = np.sqrt(np.maximum(np.diag(m), 0.0))
        # fix signs from the off-diagonal terms
        i = int(np.argmax(axis))
        if axis[i] > 0:
            axis = m[i] / axis[i]
            axis[i] = np.sqrt(max(m[i, i], 0.0))
        n = np.linalg.norm(axis)
        if n > 0:
            axis = axis / n
        if np.dot(axis, skew) < 0:
            axis = -axis
        return angle * axis
    return angle * skew / (2.0 * np.sin(angle))


def quaternion_wxyz(r: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0."""
    t = np.trace(r)
    if t > 0:
        w = 0.5 * np.sqrt(1.0 + t)
        f = 0.25 / w
        q = np.array(
            [w, f * (r[2, 1] - r[1, 2]), f * (r[0, 2] - r[2, 0]), f * (r[1, 0] - r[0, 1])]
        )
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(1.0 + r[i, i] - r[j, j] - r[k, k], 0.0))
        v = np.zeros(4)
        v[1 + i] = 0.5 * s
        f = 0.25 / (0.5 * s)
        v[0] = f * (r[k, j] - r[j, k])
        v[1 + j] = f * (r[j, i] + r[i, j])
        v[1 + k] = f * (r[k, i] + r[i, k])
        q = v
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


@dataclass(frozen=True)
class Transform:
    """Rotation (3x3, orthonormal, det +1) plus translation (meters)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=float).reshape(3)
        )

    @staticmethod
    def identity() -> "Transform":
        return Transform()

    @staticmethod
    def from_rpy(xyz, rpy) -> "Transform":
        return Transform(rotation_from_rpy(*rpy), np.asarray(xyz, dtype=float))

    def compose(self, other: "Transform") -> "Transform":
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "Transform") -> "Transform":
        return self.compose(other)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def inverse(self) -> "Transform":
        rt = self.rotation.T
        return Transform(rt, -rt @ self.translation)

    def rotation_defect(self) -> float:
        """Max deviation from orthonormality / unit determinant."""
        r = self.rotation
        ortho = float(np.max(np.abs(r.T @ r - np.eye(3))))
        return max(ortho, abs(float(np.linalg.det(r)) - 1.0))

    def is_orthonormal(self, tol: float = ORTHONORMALITY_TOL) -> bool:
        return self.rotation_defect() <= tol

    def allclose(self, other: "Transform", atol: float = 0.0) -> bool:
        return np.allclose(self.rotation, other.rotation, atol=atol, rtol=0.0) and np.allclose(
            self.translation, other.translation, atol=atol, rtol=0.0
        )
