"""Pure-NumPy batched fingertip FK, vectorized over the sample axis.

Drop-in fallback for the compiled kernel in ``_fk_cy``.
"""

import numpy as np


def batch_tip_positions(rot0, trans0, axes, is_rev, tip_trans, q):
    """Fingertip positions for a batch of joint configurations.

    rot0      (J, 3, 3) per-joint origin rotations, palm to tip order
    trans0    (J, 3)    per-joint origin translations
    axes      (J, 3)    unit joint axes (ignored for fixed joints)
    is_rev    (J,)      1 for revolute, 0 for fixed
    tip_trans (3,)      fingertip point in the last joint frame
    q         (N, n)    joint angles, one column per revolute joint

    Returns (N, 3) tip positions in the chain's base frame.
    """
    q = np.asarray(q, dtype=float)
    n_samples = q.shape[0]
    rot = np.broadcast_to(np.eye(3), (n_samples, 3, 3)).copy()
    pos = np.zeros((n_samples, 3))
    k = 0
    for j in range(rot0.shape[0]):
        pos += np.einsum("nij,j->ni", rot, trans0[j])
        rot = rot @ rot0[j]
        if is_rev[j]:
            rot = rot @ _axis_rotations(axes[j], q[:, k])
            k += 1
    pos += np.einsum("nij,j->ni", rot, tip_trans)
    return pos


def _axis_rotations(axis, angles):
    """(N, 3, 3) Rodrigues rotations about one axis for a vector of angles."""
    x, y, z = axis
    kmat = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    kmat2 = kmat @ kmat
    c = np.cos(angles)[:, None, None]
    s = np.sin(angles)[:, None, None]
    return np.eye(3) + s * kmat + (1.0 - c) * kmat2
