"""Human-to-robot hand retargeting.

Two routes, matching how anthropomorphic and non-anthropomorphic hands are
driven in practice:

* an energy route: match displacement vectors between palm/fingertip sites
  on the human hand and the robot hand, minimizing the summed squared error
  over joint angles with a damped Gauss-Newton descent (analytic gradient
  assembled from chain Jacobians, backtracking line search, monotone
  accepted energies);
* a direct route: measure named human joint angles from keypoints and map
  them through per-joint affine gains onto robot joints.

Human frames are 21 keypoints in the wrist frame, ordered wrist; thumb
CMC/MCP/IP/TIP; then index, middle, ring, pinky as MCP/PIP/DIP/TIP.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .kinematics import forward_kinematics, geometric_jacobian
from .model import HandModel

WRIST = 0
THUMB_CMC, THUMB_MCP, THUMB_IP, THUMB_TIP = 1, 2, 3, 4
INDEX_MCP, INDEX_PIP, INDEX_DIP, INDEX_TIP = 5, 6, 7, 8
MIDDLE_MCP, MIDDLE_PIP, MIDDLE_DIP, MIDDLE_TIP = 9, 10, 11, 12
RING_MCP, RING_PIP, RING_DIP, RING_TIP = 13, 14, 15, 16
PINKY_MCP, PINKY_PIP, PINKY_DIP, PINKY_TIP = 17, 18, 19, 20

KEYPOINT_COUNT = 21
KEY_VECTOR_COUNT = 10

NOMINAL_HUMAN_REACH = 0.17  # palm to middle fingertip, meters

TIP_KEYPOINT = {"thumb": THUMB_TIP, "index": INDEX_TIP, "middle": MIDDLE_TIP, "ring": RING_TIP}


@dataclass(frozen=True)
class HumanHandFrame:
    timestamp: float
    keypoints: np.ndarray  # (21, 3) meters, wrist frame

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=float)
        if kp.shape != (KEYPOINT_COUNT, 3):
            raise ValueError(f"expected ({KEYPOINT_COUNT}, 3) keypoints, got {kp.shape}")
        if not np.isfinite(kp).all():
            raise ValueError("keypoints contain non-finite values")
        object.__setattr__(self, "keypoints", kp)


def parse_frame_line(line: str) -> HumanHandFrame:
    """One line-delimited JSON record {"t": seconds, "kp": [[x,y,z] x 21]}."""
    rec = json.loads(line)
    return HumanHandFrame(float(rec["t"]), np.array(rec["kp"], dtype=float))


def format_frame_line(frame: HumanHandFrame) -> str:
    return json.dumps({"t": frame.timestamp, "kp": frame.keypoints.tolist()})


@dataclass(frozen=True)
class KeyVectorSpec:
    """Ten ordered endpoint pairs plus positive per-pair scales.

    Each endpoint is (human keypoint index, robot point), where the robot
    point is "palm" or a chain name meaning that chain's fingertip.  Vector
    i runs from endpoint a to endpoint b on both hands.
    """

    pairs: tuple[tuple[tuple[int, str], tuple[int, str]], ...]
    scales: np.ndarray

    def __post_init__(self):
        if len(self.pairs) != KEY_VECTOR_COUNT:
            raise ValueError(f"expected {KEY_VECTOR_COUNT} pairs, got {len(self.pairs)}")
        scales = np.asarray(self.scales, dtype=float).reshape(-1)
        if scales.size != KEY_VECTOR_COUNT or not (scales > 0).all():
            raise ValueError("scales must be 10 positive reals")
        object.__setattr__(self, "scales", scales)
        for (ha, _), (hb, _) in self.pairs:
            for h in (ha, hb):
                if not 0 <= h < KEYPOINT_COUNT:
                    raise ValueError(f"human keypoint index {h} out of range")

    def to_json(self) -> str:
        return json.dumps(
            {
                "pairs": [
                    {
                        "a": {"human": ha, "robot": ra},
                        "b": {"human": hb, "robot": rb},
                    }
                    for (ha, ra), (hb, rb) in self.pairs
                ],
                "scales": self.scales.tolist(),
            },
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "KeyVectorSpec":
        doc = json.loads(text)
        pairs = tuple(
            (
                (int(p["a"]["human"]), str(p["a"]["robot"])),
                (int(p["b"]["human"]), str(p["b"]["robot"])),
            )
            for p in doc["pairs"]
        )
        return KeyVectorSpec(pairs, np.array(doc["scales"], dtype=float))


def default_key_vector_spec(model: HandModel) -> KeyVectorSpec:
    """Palm-to-tip, thumb-to-tip, adjacent-tip and wrist-to-thumb vectors.

    One shared scale: nominal human reach over the robot's palm-to-middle-tip
    reach at the zero pose, so scaled robot vectors live at human scale.
    """
    pairs = (
        ((WRIST, "palm"), (THUMB_TIP, "thumb")),
        ((WRIST, "palm"), (INDEX_TIP, "index")),
        ((WRIST, "palm"), (MIDDLE_TIP, "middle")),
        ((WRIST, "palm"), (RING_TIP, "ring")),
        ((THUMB_TIP, "thumb"), (INDEX_TIP, "index")),
        ((THUMB_TIP, "thumb"), (MIDDLE_TIP, "middle")),
        ((THUMB_TIP, "thumb"), (RING_TIP, "ring")),
        ((INDEX_TIP, "index"), (MIDDLE_TIP, "middle")),
        ((MIDDLE_TIP, "middle"), (RING_TIP, "ring")),
        ((WRIST, "palm"), (THUMB_TIP, "thumb")),
    )
    reach = np.linalg.norm(forward_kinematics(model.chains["middle"], np.zeros(model.chains["middle"].dof)).translation)
    c = NOMINAL_HUMAN_REACH / reach
    return KeyVectorSpec(pairs, np.full(KEY_VECTOR_COUNT, c))


def key_vectors_human(frame: HumanHandFrame, spec: KeyVectorSpec) -> np.ndarray:
    kp = frame.keypoints
    return np.array([kp[hb] - kp[ha] for (ha, _), (hb, _) in spec.pairs])


def _robot_points(model: HandModel, q) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Chain tip positions and their (3, 16) position Jacobians in hand-q layout."""
    split = model.split_config(q)
    slices = model.chain_slices()
    points = {"palm": np.zeros(3)}
    jacs = {"palm": np.zeros((3, model.dof))}
    for name in model.chain_order():
        chain = model.chains[name]
        jac = geometric_jacobian(chain, split[name])
        points[name] = forward_kinematics(chain, split[name]).translation
        full = np.zeros((3, model.dof))
        full[:, slices[name]] = jac.linear
        jacs[name] = full
    return points, jacs


def _robot_tips(model: HandModel, q) -> dict[str, np.ndarray]:
    split = model.split_config(q)
    points = {"palm": np.zeros(3)}
    for name in model.chain_order():
        points[name] = forward_kinematics(model.chains[name], split[name]).translation
    return points


def key_vectors_robot(model: HandModel, q, spec: KeyVectorSpec) -> np.ndarray:
    points = _robot_tips(model, q)
    try:
        return np.array([points[rb] - points[ra] for (_, ra), (_, rb) in spec.pairs])
    except KeyError as exc:
        raise KeyError(f"key vector spec references unknown robot point {exc}") from None


def retarget_energy(v_h: np.ndarray, model: HandModel, q, spec: KeyVectorSpec) -> float:
    v_r = key_vectors_robot(model, q, spec)
    diff = np.asarray(v_h, dtype=float) - spec.scales[:, None] * v_r
    return float(np.sum(diff * diff))


def _energy_only(v_h, model, q, spec, lam=0.0, q_ref=None) -> float:
    energy = retarget_energy(v_h, model, q, spec)
    if lam > 0.0:
        dq = np.asarray(q, dtype=float) - q_ref
        energy += lam * float(dq @ dq)
    return energy


def _energy_gradient(v_h, model, q, spec, lam=0.0, q_ref=None):
    """Energy, gradient, and the Gauss-Newton normal matrix at q."""
    points, jacs = _robot_points(model, q)
    energy = 0.0
    grad = np.zeros(model.dof)
    gn = np.zeros((model.dof, model.dof))
    for i, ((_, ra), (_, rb)) in enumerate(spec.pairs):
        c = spec.scales[i]
        r = c * (points[rb] - points[ra]) - v_h[i]
        jr = c * (jacs[rb] - jacs[ra])
        energy += float(r @ r)
        grad += 2.0 * (jr.T @ r)
        gn += 2.0 * (jr.T @ jr)
    if lam > 0.0:
        dq = np.asarray(q, dtype=float) - q_ref
        energy += lam * float(dq @ dq)
        grad += 2.0 * lam * dq
        gn += 2.0 * lam * np.eye(model.dof)
    return energy, grad, gn


@dataclass(frozen=True)
class RetargetOptions:
    max_iterations: int = 100
    tolerance: float = 1e-10  # stop when an accepted step decreases E by less
    damping: float = 1e-9
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 10
    max_damping_boosts: int = 8
    max_step: float = 0.5  # per-iteration cap on any joint's change, radians
    clamp: bool = True
    smoothing: float = 0.0  # lambda weight on ||q - q_prev||^2
    # box-constrained fingers fold into local minima from unlucky starts, so
    # when the q0 descent stays above this energy, retry from canonical poses
    restart_energy: float = 1e-8

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max iterations must be >= 1")
        if self.smoothing < 0:
            raise ValueError("smoothing weight must be >= 0")


@dataclass(frozen=True)
class RetargetResult:
    q: np.ndarray
    energy: float
    iterations: int
    status: str  # "tolerance" | "max_iterations" | "stalled"
    energies: tuple[float, ...]  # accepted-iterate energies, E(q0) first


def retarget_frame(
    frame: HumanHandFrame,
    model: HandModel,
    spec: KeyVectorSpec,
    q0,
    opts: RetargetOptions = RetargetOptions(),
    _q_ref=None,
) -> RetargetResult:
    """Minimize the key-vector energy starting from q0.

    Runs a damped Gauss-Newton descent whose accepted energies never
    increase; if the q0 run finishes above ``opts.restart_energy`` it is
    retried from the mid-range and near-curled poses and the best run wins.
    """
    q0 = np.asarray(q0, dtype=float)
    if q0.size != model.dof:
        raise ValueError(f"expected {model.dof} values, got {q0.size}")
    limits = model.joint_limits()
    best = _descend(frame, model, spec, q0, opts, _q_ref)
    if best.energy > opts.restart_energy:
        for start in _canonical_starts(model, limits):
            trial = _descend(frame, model, spec, start, opts, _q_ref)
            if trial.energy < best.energy:
                best = trial
            if best.energy <= opts.restart_energy:
                break
    return best


def _canonical_starts(model: HandModel, limits: np.ndarray) -> list[np.ndarray]:
    """Mid-range, near-curled, and splayed poses; together with a caller's
    q0 these cover the fold-over local minima of every archetype's fingers."""
    from .model import joint_role

    mid = 0.5 * (limits[:, 0] + limits[:, 1])
    curled = limits[:, 0] + 0.9 * (limits[:, 1] - limits[:, 0])
    roles = [joint_role(j.name) for c in model.chain_order() for j in model.chains[c].revolute_joints]
    abd = np.array([r == "abduction" for r in roles])
    splay_pos, splay_neg = mid.copy(), mid.copy()
    splay_pos[abd] = 0.8 * limits[abd, 1]
    splay_neg[abd] = 0.8 * limits[abd, 0]
    return [mid, curled, splay_pos, splay_neg]


def _descend(
    frame: HumanHandFrame,
    model: HandModel,
    spec: KeyVectorSpec,
    q0,
    opts: RetargetOptions,
    _q_ref=None,
) -> RetargetResult:
    v_h = key_vectors_human(frame, spec)
    limits = model.joint_limits()
    q = np.asarray(q0, dtype=float).copy()
    q_ref = q.copy() if _q_ref is None else np.asarray(_q_ref, dtype=float)
    lam = opts.smoothing

    def project(v):
        return np.clip(v, limits[:, 0], limits[:, 1]) if opts.clamp else v

    q = project(q)
    energy, grad, gn = _energy_gradient(v_h, model, q, spec, lam, q_ref)
    if not np.isfinite(energy) or not np.isfinite(grad).all():
        raise ValueError("non-finite energy or gradient; check the input frame")
    energies = [energy]
    status = "max_iterations"
    iterations = 0
    mu = opts.damping
    eye = np.eye(q.size)
    for _ in range(opts.max_iterations):
        accepted = None
        # widen the damping until a backtracked projected step decreases E;
        # the Armijo test uses the actual (post-projection) displacement
        for _ in range(opts.max_damping_boosts):
            try:
                direction = np.linalg.solve(gn + mu * eye, -grad)
            except np.linalg.LinAlgError:
                direction = -grad
            biggest = float(np.abs(direction).max())
            if biggest > opts.max_step:
                direction = direction * (opts.max_step / biggest)
            step = 1.0
            for _ in range(opts.max_backtracks):
                cand = project(q + step * direction)
                moved = cand - q
                if float(np.abs(moved).max()) == 0.0:
                    break
                cand_energy = _energy_only(v_h, model, cand, spec, lam, q_ref)
                if cand_energy <= energy + opts.armijo * float(grad @ moved):
                    accepted = (cand, cand_energy)
                    break
                step *= opts.backtrack
            if accepted is not None:
                mu = max(mu * 0.3, opts.damping)
                break
            mu *= 100.0
        if accepted is None:
            status = "stalled"
            break
        iterations += 1
        q, new_energy = accepted
        decrease = energy - new_energy
        energy = new_energy
        energies.append(energy)
        if not np.isfinite(energy):
            raise ValueError("non-finite energy during descent; check the input frame")
        if decrease < opts.tolerance:
            status = "tolerance"
            break
        # keep the accepted line-search energy canonical; the recompute only
        # refreshes the gradient and normal matrix at the new iterate
        _, grad, gn = _energy_gradient(v_h, model, q, spec, lam, q_ref)
    return RetargetResult(q, energy, iterations, status, tuple(energies))


def finite_difference_energy_gradient(frame, model, spec, q, h=1e-7, lam=0.0, q_ref=None):
    """Central-difference gradient of the frame energy; test oracle only."""
    v_h = key_vectors_human(frame, spec)
    q = np.asarray(q, dtype=float)
    q_ref = q if q_ref is None else q_ref

    def energy_at(qq):
        e = retarget_energy(v_h, model, qq, spec)
        if lam > 0:
            e += lam * float((qq - q_ref) @ (qq - q_ref))
        return e

    grad = np.empty(q.size)
    for i in range(q.size):
        dq = np.zeros(q.size)
        dq[i] = h
        grad[i] = (energy_at(q + dq) - energy_at(q - dq)) / (2.0 * h)
    return grad


def retarget_stream(
    frames,
    model: HandModel,
    spec: KeyVectorSpec,
    opts: RetargetOptions = RetargetOptions(),
):
    """Minimize each frame warm-started from the previous one.

    Returns (configs, warnings): one q per input frame; a frame whose
    minimization raises emits the previous q and a warning record.
    """
    q_prev = model.zero_config()
    configs = []
    warnings = []
    last_t = None
    for k, frame in enumerate(frames):
        if last_t is not None and frame.timestamp < last_t:
            raise ValueError(
                f"frames out of order: t={frame.timestamp} after t={last_t} (frame {k})"
            )
        last_t = frame.timestamp
        try:
            result = retarget_frame(frame, model, spec, q_prev, opts, _q_ref=q_prev)
            q_prev = result.q
        except ValueError as exc:
            warnings.append(f"frame {k} (t={frame.timestamp}): {exc}")
        configs.append(q_prev.copy())
    return configs, warnings


# -- direct joint mapping -----------------------------------------------------

SUBTENDED = "subtended"
DIHEDRAL = "dihedral"
_DEGENERATE_TOL = 1e-9


@dataclass(frozen=True)
class JointAngleRule:
    """How one robot joint reads its angle off the human keypoints."""

    kind: str  # subtended (3 keypoints) | dihedral (4 keypoints)
    points: tuple[int, ...]
    gain: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        want = 3 if self.kind == SUBTENDED else 4
        if self.kind not in (SUBTENDED, DIHEDRAL):
            raise ValueError(f"unknown angle rule kind {self.kind!r}")
        if len(self.points) != want:
            raise ValueError(f"{self.kind} rule needs {want} keypoints, got {len(self.points)}")


@dataclass(frozen=True)
class JointMapping:
    rules: dict[str, JointAngleRule] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "joints": {
                    name: {
                        "kind": r.kind,
                        "points": list(r.points),
                        "gain": r.gain,
                        "offset": r.offset,
                    }
                    for name, r in self.rules.items()
                }
            },
            indent=2,
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "JointMapping":
        doc = json.loads(text)
        rules = {
            name: JointAngleRule(
                kind=str(r["kind"]),
                points=tuple(int(p) for p in r["points"]),
                gain=float(r.get("gain", 1.0)),
                offset=float(r.get("offset", 0.0)),
            )
            for name, r in doc["joints"].items()
        }
        return JointMapping(rules)


def subtended_angle(kp: np.ndarray, i: int, j: int, k: int, joint: str = "?") -> float:
    """Deviation from straight at vertex j: 0 when i, j, k are collinear."""
    u = kp[i] - kp[j]
    v = kp[k] - kp[j]
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < _DEGENERATE_TOL or nv < _DEGENERATE_TOL:
        raise ValueError(f"joint {joint!r}: degenerate angle definition (coincident keypoints)")
    cos = np.clip(u @ v / (nu * nv), -1.0, 1.0)
    return float(np.pi - np.arccos(cos))


def dihedral_angle(kp: np.ndarray, i: int, j: int, k: int, l: int, joint: str = "?") -> float:
    """Signed dihedral of planes (i,j,k) and (j,k,l) about the j->k axis."""
    u1 = kp[j] - kp[i]
    u2 = kp[k] - kp[j]
    u3 = kp[l] - kp[k]
    n1 = np.cross(u1, u2)
    n2 = np.cross(u2, u3)
    if np.linalg.norm(n1) < _DEGENERATE_TOL or np.linalg.norm(n2) < _DEGENERATE_TOL:
        raise ValueError(
            f"joint {joint!r}: degenerate angle definition (collinear keypoints within 1e-9)"
        )
    axis = u2 / np.linalg.norm(u2)
    return float(np.arctan2(np.cross(n1, n2) @ axis, n1 @ n2))


def direct_joint_map(frame: HumanHandFrame, mapping: JointMapping, model: HandModel) -> np.ndarray:
    """Measure each mapped human angle and clamp a*theta + b to joint limits."""
    kp = frame.keypoints
    limits = model.joint_limits()
    names = [j.name for c in model.chain_order() for j in model.chains[c].revolute_joints]
    missing = [n for n in names if n not in mapping.rules]
    if missing:
        raise ValueError(f"mapping does not cover joints: {missing}")
    q = np.empty(len(names))
    for idx, name in enumerate(names):
        rule = mapping.rules[name]
        if rule.kind == SUBTENDED:
            theta = subtended_angle(kp, *rule.points, joint=name)
        else:
            theta = dihedral_angle(kp, *rule.points, joint=name)
        q[idx] = rule.gain * theta + rule.offset
    return np.clip(q, limits[:, 0], limits[:, 1])


_FINGER_KEYPOINTS = {
    "index": (INDEX_MCP, INDEX_PIP, INDEX_DIP, INDEX_TIP),
    "middle": (MIDDLE_MCP, MIDDLE_PIP, MIDDLE_DIP, MIDDLE_TIP),
    "ring": (RING_MCP, RING_PIP, RING_DIP, RING_TIP),
}
_ABD_REFERENCE = {"index": MIDDLE_MCP, "middle": INDEX_MCP, "ring": MIDDLE_MCP}


def default_joint_mapping(model: HandModel) -> JointMapping:
    """Anatomical defaults for the archetype joint names.

    Flexions are subtended angles with unit gain.  Splay is read at the
    knuckle between the neighbor-knuckle ray and the PIP ray: that angle
    sits at exactly pi/2 for an unsplayed finger at any flexion, so a
    per-side sign and a pi/2 offset zero the neutral pose.
    """
    rules: dict[str, JointAngleRule] = {}
    # sign is +1 when the reference knuckle lies on the +y (thumb) side
    splay_sign = {"index": -1.0, "middle": 1.0, "ring": 1.0}
    for finger, (mcp, pip, dip, tip) in _FINGER_KEYPOINTS.items():
        if finger not in model.chains:
            continue
        rules[f"{finger}_mcp_flex"] = JointAngleRule(SUBTENDED, (WRIST, mcp, pip))
        rules[f"{finger}_pip"] = JointAngleRule(SUBTENDED, (mcp, pip, dip))
        rules[f"{finger}_dip"] = JointAngleRule(SUBTENDED, (pip, dip, tip))
        sign = splay_sign[finger]
        rules[f"{finger}_mcp_abd"] = JointAngleRule(
            SUBTENDED, (_ABD_REFERENCE[finger], mcp, pip), gain=sign, offset=-sign * np.pi / 2
        )
    rules["thumb_cmc_flex"] = JointAngleRule(SUBTENDED, (WRIST, THUMB_CMC, THUMB_MCP))
    rules["thumb_cmc_abd"] = JointAngleRule(
        SUBTENDED, (INDEX_MCP, THUMB_CMC, THUMB_MCP), gain=1.0, offset=-np.pi / 2
    )
    rules["thumb_mcp"] = JointAngleRule(SUBTENDED, (THUMB_CMC, THUMB_MCP, THUMB_IP))
    rules["thumb_ip"] = JointAngleRule(SUBTENDED, (THUMB_MCP, THUMB_IP, THUMB_TIP))
    return JointMapping(rules)


def frame_from_robot_pose(model: HandModel, q, timestamp: float = 0.0) -> HumanHandFrame:
    """Synthesize a frame whose tip keypoints sit exactly at the robot's tips.

    Interior keypoints are filled from joint positions so the frame looks
    like a plausible hand; only palm/tip keypoints matter to the default
    key-vector spec.
    """
    from .kinematics import chain_frames

    split = model.split_config(q)
    kp = np.zeros((KEYPOINT_COUNT, 3))
    interior = {
        "thumb": (THUMB_CMC, THUMB_MCP, THUMB_IP),
        "index": (INDEX_MCP, INDEX_PIP, INDEX_DIP),
        "middle": (MIDDLE_MCP, MIDDLE_PIP, MIDDLE_DIP),
        "ring": (RING_MCP, RING_PIP, RING_DIP),
    }
    for name in model.chain_order():
        chain = model.chains[name]
        frames, tip = chain_frames(chain, split[name])
        if name in TIP_KEYPOINT:
            kp[TIP_KEYPOINT[name]] = tip.translation
        if name in interior:
            origins = [origin for _, origin in frames]
            # skip the second knuckle motor so mcp/pip/dip land anatomically
            picks = [origins[0], origins[-2], origins[-1]] if len(origins) >= 3 else origins
            for slot, point in zip(interior[name], picks):
                kp[slot] = point
    # pinky: mirror the ring column so the frame stays finite and plausible
    kp[PINKY_MCP:PINKY_TIP + 1] = kp[RING_MCP:RING_TIP + 1] + np.array([0.0, -0.02, 0.0])
    return HumanHandFrame(timestamp, kp)
