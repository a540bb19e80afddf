"""Hand kinematic models: joints, chains, and the three MCP design archetypes.

The archetypes differ only in how the knuckle's two motors are arranged:

* ``leap-c``  -- splay motor first, axis along the palm normal, fixed to the palm.
* ``allegro`` -- splay motor first, axis in the palm plane along the finger.
* ``leap``    -- flexion motor first; the splay axis rides in its rotating frame,
  perpendicular to it, so neither motor is ever parallel to the finger.

Palm frame convention: +x distal (toward fingertips), +y radial (thumb side),
+z out of the palmar surface.  Flexion axes are -y so positive angles curl
fingers toward +z.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transforms import Transform, rotation_from_rpy

ARCHETYPE_KINDS = ("leap", "leap-c", "allegro")
FINGER_NAMES = ("index", "middle", "ring")
CANONICAL_CHAIN_ORDER = ("thumb", "index", "middle", "ring")

AXIS_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Joint:
    """One joint in a chain; ``origin`` maps parent frame -> joint frame at zero."""

    name: str
    kind: str  # "revolute" | "fixed"
    origin: Transform
    axis: np.ndarray | None = None  # unit vector, joint frame; revolute only
    limits: tuple[float, float] | None = None  # radians; revolute only

    def __post_init__(self):
        if self.axis is not None:
            object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float).reshape(3))

    @property
    def is_revolute(self) -> bool:
        return self.kind == "revolute"


@dataclass(frozen=True)
class KinematicChain:
    """Joints ordered palm to tip, plus the last-joint-frame -> fingertip offset."""

    joints: tuple[Joint, ...]
    tip_offset: Transform = field(default_factory=Transform.identity)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))

    @property
    def dof(self) -> int:
        return sum(1 for j in self.joints if j.is_revolute)

    @property
    def revolute_joints(self) -> tuple[Joint, ...]:
        return tuple(j for j in self.joints if j.is_revolute)

    def joint_limits(self) -> np.ndarray:
        """(dof, 2) array of [lower, upper] for the revolute joints in order."""
        return np.array([j.limits for j in self.revolute_joints], dtype=float)


@dataclass(frozen=True)
class HandModel:
    name: str
    palm_frame: Transform
    chains: dict[str, KinematicChain]

    def chain_order(self) -> tuple[str, ...]:
        """Declared q layout: thumb, index, middle, ring, then extras sorted."""
        canonical = [c for c in CANONICAL_CHAIN_ORDER if c in self.chains]
        extras = sorted(c for c in self.chains if c not in CANONICAL_CHAIN_ORDER)
        return tuple(canonical + extras)

    @property
    def dof(self) -> int:
        return sum(c.dof for c in self.chains.values())

    def chain_slices(self) -> dict[str, slice]:
        out = {}
        start = 0
        for name in self.chain_order():
            d = self.chains[name].dof
            out[name] = slice(start, start + d)
            start += d
        return out

    def split_config(self, q) -> dict[str, np.ndarray]:
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.size != self.dof:
            raise ValueError(f"expected {self.dof} values, got {q.size}")
        return {name: q[s] for name, s in self.chain_slices().items()}

    def joint_limits(self) -> np.ndarray:
        return np.vstack([self.chains[c].joint_limits() for c in self.chain_order()])

    def clamp_config(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.size != self.dof:
            raise ValueError(f"expected {self.dof} values, got {q.size}")
        lim = self.joint_limits()
        return np.clip(q, lim[:, 0], lim[:, 1])

    def zero_config(self) -> np.ndarray:
        return self.clamp_config(np.zeros(self.dof))


def joint_role(name: str) -> str:
    """Functional role inferred from the joint name suffix."""
    if name.endswith("_abd"):
        return "abduction"
    if name.endswith("_mcp_flex") or name.endswith("_cmc_flex"):
        return "mcp"
    if name.endswith("_pip") or name.endswith("_mcp"):
        return "pip"
    if name.endswith("_dip") or name.endswith("_ip"):
        return "dip"
    return "unknown"


def _default_thumb_mount() -> Transform:
    # radial palm edge, slightly palmar, rotated a quarter turn to point
    # across the palm and nosed down 20 deg so the thumb sweeps the low
    # region above the palm where it can meet every finger
    rot = rotation_from_rpy(0.0, 0.0, -np.pi / 2) @ rotation_from_rpy(0.0, np.deg2rad(20), 0.0)
    return Transform(rot, np.array([0.025, 0.065, -0.005]))


@dataclass(frozen=True)
class ArchetypeParams:
    """Canonical dimensions; all lengths in meters, limits in radians.

    ``mcp_bracket`` is the offset between the two stacked knuckle motors
    (first MCP joint frame -> second MCP joint frame).  Its out-of-line
    component is what lets the leap design keep full fingertip mobility at
    straight-finger poses; the other designs route it before their flexion
    group, which therefore stays collinear and singular when extended.

    Flexion ranges follow human joints (MCP ~90, PIP ~110, DIP ~80 deg);
    the splay range matches direct-driven hand hardware rather than the
    narrower human one.
    """

    proximal: float = 0.050
    medial: float = 0.040
    distal: float = 0.032
    tip_offset: tuple[float, float, float] = (0.015, 0.0, 0.0)
    mcp_bracket: tuple[float, float, float] = (0.012, 0.0, 0.010)
    spacing: float = 0.045
    palm_length: float = 0.095
    thumb_mount: Transform = field(default_factory=_default_thumb_mount)
    mcp_limits: tuple[float, float] = (0.0, 1.6)
    pip_limits: tuple[float, float] = (0.0, 1.9)
    dip_limits: tuple[float, float] = (0.0, 1.4)
    abduction_limits: tuple[float, float] = (-1.0, 1.0)
    thumb_cmc_limits: tuple[float, float] = (-0.5, 1.6)
    thumb_abduction_limits: tuple[float, float] = (-0.6, 0.6)
    thumb_flexion_limits: tuple[float, float] = (0.0, 1.0)

    def validate(self):
        for label, v in (
            ("proximal", self.proximal),
            ("medial", self.medial),
            ("distal", self.distal),
            ("spacing", self.spacing),
            ("palm_length", self.palm_length),
        ):
            if not v > 0:
                raise ValueError(f"{label} must be > 0, got {v}")
        for label, (lo, hi) in (
            ("mcp_limits", self.mcp_limits),
            ("pip_limits", self.pip_limits),
            ("dip_limits", self.dip_limits),
            ("abduction_limits", self.abduction_limits),
            ("thumb_cmc_limits", self.thumb_cmc_limits),
            ("thumb_abduction_limits", self.thumb_abduction_limits),
            ("thumb_flexion_limits", self.thumb_flexion_limits),
        ):
            if not lo <= hi:
                raise ValueError(f"{label} ill-ordered: {lo} > {hi}")


FLEXION_AXIS = (0.0, -1.0, 0.0)
PALM_NORMAL_AXIS = (0.0, 0.0, 1.0)
DISTAL_AXIS = (1.0, 0.0, 0.0)


def _finger_chain(kind: str, finger: str, mount: Transform, p: ArchetypeParams) -> KinematicChain:
    abd = p.abduction_limits
    bracket = Transform(np.eye(3), p.mcp_bracket)
    if kind == "leap":
        mcp = [
            Joint(f"{finger}_mcp_flex", "revolute", mount, FLEXION_AXIS, p.mcp_limits),
            Joint(f"{finger}_mcp_abd", "revolute", bracket, PALM_NORMAL_AXIS, abd),
        ]
    elif kind == "leap-c":
        mcp = [
            Joint(f"{finger}_mcp_abd", "revolute", mount, PALM_NORMAL_AXIS, abd),
            Joint(f"{finger}_mcp_flex", "revolute", bracket, FLEXION_AXIS, p.mcp_limits),
        ]
    elif kind == "allegro":
        mcp = [
            Joint(f"{finger}_mcp_abd", "revolute", mount, DISTAL_AXIS, abd),
            Joint(f"{finger}_mcp_flex", "revolute", bracket, FLEXION_AXIS, p.mcp_limits),
        ]
    else:
        raise ValueError(f"unknown archetype kind {kind!r}; expected one of {ARCHETYPE_KINDS}")
    joints = mcp + [
        Joint(f"{finger}_pip", "revolute", Transform(np.eye(3), (p.proximal, 0, 0)), FLEXION_AXIS, p.pip_limits),
        Joint(f"{finger}_dip", "revolute", Transform(np.eye(3), (p.medial, 0, 0)), FLEXION_AXIS, p.dip_limits),
    ]
    tip = Transform(np.eye(3), np.asarray(p.tip_offset) + (p.distal, 0.0, 0.0))
    return KinematicChain(tuple(joints), tip)


def _thumb_chain(p: ArchetypeParams) -> KinematicChain:
    # common 4-DoF thumb across all archetypes; splay axis rides in the CMC
    # flexion frame like the leap fingers
    joints = (
        Joint("thumb_mount", "fixed", p.thumb_mount),
        Joint("thumb_cmc_flex", "revolute", Transform.identity(), FLEXION_AXIS, p.thumb_cmc_limits),
        Joint("thumb_cmc_abd", "revolute", Transform(np.eye(3), p.mcp_bracket), PALM_NORMAL_AXIS, p.thumb_abduction_limits),
        Joint("thumb_mcp", "revolute", Transform(np.eye(3), (p.proximal, 0, 0)), FLEXION_AXIS, p.thumb_flexion_limits),
        Joint("thumb_ip", "revolute", Transform(np.eye(3), (p.medial, 0, 0)), FLEXION_AXIS, p.thumb_flexion_limits),
    )
    tip = Transform(np.eye(3), np.asarray(p.tip_offset) + (p.distal, 0.0, 0.0))
    return KinematicChain(joints, tip)


def build_archetype(kind: str, params: ArchetypeParams | None = None) -> HandModel:
    """Build a 4-finger, 16-DoF hand with the requested MCP design."""
    if kind not in ARCHETYPE_KINDS:
        raise ValueError(f"unknown archetype kind {kind!r}; expected one of {ARCHETYPE_KINDS}")
    p = params or ArchetypeParams()
    p.validate()
    chains = {"thumb": _thumb_chain(p)}
    offsets = {"index": p.spacing, "middle": 0.0, "ring": -p.spacing}
    for finger in FINGER_NAMES:
        mount = Transform(np.eye(3), (p.palm_length, offsets[finger], 0.0))
        chains[finger] = _finger_chain(kind, finger, mount, p)
    return HandModel(name=kind, palm_frame=Transform.identity(), chains=chains)


def validate_model(model: HandModel) -> list[str]:
    """Check every type invariant; returns diagnostics (empty means valid)."""
    diags = []
    if not model.palm_frame.is_orthonormal():
        diags.append("palm_frame: rotation not orthonormal within 1e-9")
    if "thumb" not in model.chains:
        diags.append("model: missing required chain 'thumb'")
    for cname, chain in model.chains.items():
        if chain.dof == 0:
            diags.append(f"chain '{cname}': no revolute joint")
        seen = set()
        for j in chain.joints:
            loc = f"chain '{cname}', joint '{j.name}'"
            if j.name in seen:
                diags.append(f"{loc}: duplicate joint name")
            seen.add(j.name)
            if not j.origin.is_orthonormal():
                diags.append(f"{loc}: origin rotation not orthonormal within 1e-9")
            if j.is_revolute:
                if j.axis is None:
                    diags.append(f"{loc}: revolute joint without axis")
                elif abs(np.linalg.norm(j.axis) - 1.0) > AXIS_UNIT_TOL:
                    diags.append(f"{loc}: non-unit axis {tuple(j.axis)}")
                if j.limits is None:
                    diags.append(f"{loc}: revolute joint without limits")
                elif j.limits[0] > j.limits[1]:
                    diags.append(f"{loc}: limits ill-ordered ({j.limits[0]} > {j.limits[1]})")
            elif j.kind == "fixed":
                if j.axis is not None or j.limits is not None:
                    diags.append(f"{loc}: fixed joint must not carry axis or limits")
            else:
                diags.append(f"{loc}: unknown joint kind {j.kind!r}")
        if not chain.tip_offset.is_orthonormal():
            diags.append(f"chain '{cname}': tip_offset rotation not orthonormal within 1e-9")
    if set(model.chains) == set(CANONICAL_CHAIN_ORDER) and model.dof != 16:
        diags.append(f"model: 4-finger hand must have 16 revolute DoF, has {model.dof}")
    return diags
