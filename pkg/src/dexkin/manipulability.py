"""Manipulability-ellipsoid volume measures for the linear and angular
Jacobian blocks, evaluated at named finger pose presets.

The measure is sqrt(det(B B^T)) for a 3xn block B, computed as the product
of the singular values of B.  The two are identical in exact arithmetic, but
the singular-value route resolves rank-deficient blocks to ~1e-16 instead of
the ~1e-8 noise floor a floating-point determinant leaves behind, which is
what makes the structurally-zero angular rows come out as clean zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import geometric_jacobian
from .model import HandModel, KinematicChain, joint_role

BLOCKS = ("linear", "angular")
PRESET_NAMES = ("down", "up", "curled")

# presets keep a small constant splay so the splay motor is never exactly
# at its dead point; flexion patterns follow the named finger positions
PRESET_ABDUCTION = 0.1


@dataclass(frozen=True)
class PosePreset:
    """A named single-finger joint configuration."""

    name: str
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(-1))


def named_preset(chain: KinematicChain, name: str, abduction: float = PRESET_ABDUCTION) -> PosePreset:
    """Build one of the down/up/curled presets for a finger chain.

    down: all flexion at zero (finger extended); up: first flexion joint at
    its upper limit, the rest extended; curled: every flexion joint at half
    its upper limit.
    """
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    q = []
    for joint in chain.revolute_joints:
        role = joint_role(joint.name)
        lo, hi = joint.limits
        if role == "abduction":
            v = abduction
        elif role == "mcp":
            v = {"down": 0.0, "up": hi, "curled": hi / 2.0}[name]
        else:
            v = {"down": 0.0, "up": 0.0, "curled": hi / 2.0}[name]
        q.append(min(max(v, lo), hi))
    preset = PosePreset(name, np.array(q))
    _check_within_limits(chain, preset)
    return preset


def default_presets(chain: KinematicChain) -> list[PosePreset]:
    return [named_preset(chain, name) for name in PRESET_NAMES]


def _check_within_limits(chain: KinematicChain, preset: PosePreset):
    lim = chain.joint_limits()
    q = preset.q
    if q.size != chain.dof:
        raise ValueError(f"preset {preset.name!r}: expected {chain.dof} angles, got {q.size}")
    bad = (q < lim[:, 0] - 1e-12) | (q > lim[:, 1] + 1e-12)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(
            f"preset {preset.name!r}: joint {chain.revolute_joints[i].name} value "
            f"{q[i]} outside limits {tuple(lim[i])}"
        )


def yoshikawa_measure(block: np.ndarray) -> float:
    """Ellipsoid-volume measure sqrt(det(B B^T)) of a 3xn block, >= 0.

    Rank-deficient blocks give (numerically) zero rather than an error.
    """
    block = np.asarray(block, dtype=float)
    if block.ndim != 2 or block.shape[0] != 3 or block.shape[1] < 1:
        raise ValueError(f"expected a 3xn block with n >= 1, got shape {block.shape}")
    if not np.isfinite(block).all():
        raise ValueError("block contains non-finite entries")
    if block.shape[1] < 3:
        return 0.0  # rank < 3 by shape, so det(B B^T) = 0
    s = np.linalg.svd(block, compute_uv=False)
    if s[0] == 0.0 or s[-1] / s[0] < 1e-12:
        return 0.0  # rank-deficient within working precision
    return float(np.prod(s))


def manipulability_at(model: HandModel, chain_name: str, q, block: str) -> float:
    if chain_name not in model.chains:
        raise KeyError(f"unknown chain {chain_name!r}; model has {sorted(model.chains)}")
    jac = geometric_jacobian(model.chains[chain_name], q)
    return yoshikawa_measure(jac.block(block))


@dataclass(frozen=True)
class ManipReport:
    """Rows of (model, preset, block, measure) in deterministic order."""

    rows: tuple[tuple[str, str, str, float], ...]

    def to_csv(self) -> str:
        lines = ["model,preset,block,measure"]
        for model, preset, block, measure in self.rows:
            lines.append(f"{model},{preset},{block},{measure:.5e}")
        return "\n".join(lines) + "\n"


def manipulability_report(
    models: list[HandModel],
    presets: list[PosePreset] | None = None,
    chain_name: str = "index",
) -> ManipReport:
    """Measures for every (model, preset, block), in that nesting order."""
    rows = []
    for model in models:
        chain = model.chains.get(chain_name)
        if chain is None:
            raise KeyError(f"model {model.name!r} has no chain {chain_name!r}")
        model_presets = presets if presets is not None else default_presets(chain)
        for preset in model_presets:
            _check_within_limits(chain, preset)
            jac = geometric_jacobian(chain, preset.q)
            for block in BLOCKS:
                measure = yoshikawa_measure(jac.block(block))
                rows.append((model.name, preset.name, block, measure))
    return ManipReport(tuple(rows))
