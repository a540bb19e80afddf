"""Strict URDF-subset reader/writer for hand models.

Grammar: a `robot` root holding bare `link` elements and `joint` elements of
type revolute or fixed, with `origin` (xyz, extrinsic-XYZ rpy), `axis`,
`limit`, `parent`, `child` children.  Anything else is an error, not a
warning: these files are the interchange format for the analysis tools and
silent drops would corrupt models.

The link whose name ends in ``_tip`` marks a chain's end-effector; a fixed
joint leading into it becomes the chain's tip offset.  A root link named
``world`` may carry a single fixed joint to the palm to encode the palm
frame.  Numbers serialize at 9 significant digits (round-half-even), which
round-trips any value that was itself parsed from 9 or fewer digits.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .model import AXIS_UNIT_TOL, HandModel, Joint, KinematicChain
from .transforms import Transform, rotation_from_rpy, rpy_from_rotation


class UrdfError(ValueError):
    """Malformed or out-of-subset document; message carries the element path."""


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _fmt3(v) -> str:
    return " ".join(_fmt(float(x)) for x in v)


def _parse_floats(text: str, count: int, path: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != count:
        raise UrdfError(f"{path}: expected {count} numbers, got {len(parts)!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise UrdfError(f"{path}: {exc}") from None


def _check_attrs(elem, allowed: set[str], path: str):
    extra = set(elem.attrib) - allowed
    if extra:
        raise UrdfError(f"{path}: unknown attribute(s) {sorted(extra)}")


def _parse_origin(elem, path: str) -> Transform:
    _check_attrs(elem, {"xyz", "rpy"}, path)
    xyz = _parse_floats(elem.get("xyz", "0 0 0"), 3, f"{path}[@xyz]")
    rpy = _parse_floats(elem.get("rpy", "0 0 0"), 3, f"{path}[@rpy]")
    return Transform(rotation_from_rpy(*rpy), xyz)


def parse_hand_model(document: str) -> HandModel:
    """Parse and validate a hand model; rejects anything outside the subset."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise UrdfError(f"robot: malformed XML ({exc})") from None
    if root.tag != "robot":
        raise UrdfError(f"{root.tag}: root element must be 'robot'")
    _check_attrs(root, {"name"}, "robot")
    model_name = root.get("name", "hand")

    links: list[str] = []
    joints: dict[str, dict] = {}
    for elem in root:
        if elem.tag == "link":
            path = f"robot/link[{len(links)}]"
            _check_attrs(elem, {"name"}, path)
            name = elem.get("name")
            if not name:
                raise UrdfError(f"{path}: missing name")
            if len(elem) > 0:
                raise UrdfError(f"robot/link[@name='{name}']: child elements not allowed")
            if name in links:
                raise UrdfError(f"robot/link[@name='{name}']: duplicate link name")
            links.append(name)
        elif elem.tag == "joint":
            name, spec = _parse_joint(elem, set(joints))
            joints[name] = spec
        else:
            raise UrdfError(f"robot/{elem.tag}: unknown element")

    for jname, j in joints.items():
        for end in ("parent", "child"):
            if j[end] not in links:
                raise UrdfError(f"robot/joint[@name='{jname}']/{end}: undeclared link {j[end]!r}")

    return _assemble(model_name, links, joints)


def _parse_joint(elem, known_names: set[str]) -> tuple[str, dict]:
    _check_attrs(elem, {"name", "type"}, "robot/joint")
    name = elem.get("name")
    if not name:
        raise UrdfError("robot/joint: missing name")
    path = f"robot/joint[@name='{name}']"
    if name in known_names:
        raise UrdfError(f"{path}: duplicate joint name")
    kind = elem.get("type")
    if kind not in ("revolute", "fixed"):
        raise UrdfError(f"{path}: unsupported joint type {kind!r}")

    origin = Transform.identity()
    axis = None
    limits = None
    parent = child = None
    seen = set()
    for sub in elem:
        spath = f"{path}/{sub.tag}"
        if sub.tag in seen:
            raise UrdfError(f"{spath}: repeated element")
        seen.add(sub.tag)
        if sub.tag == "origin":
            origin = _parse_origin(sub, spath)
        elif sub.tag == "axis":
            _check_attrs(sub, {"xyz"}, spath)
            axis = _parse_floats(sub.get("xyz", ""), 3, f"{spath}[@xyz]")
        elif sub.tag == "limit":
            _check_attrs(sub, {"lower", "upper"}, spath)
            if sub.get("lower") is None or sub.get("upper") is None:
                raise UrdfError(f"{spath}: lower and upper are both required")
            limits = (float(sub.get("lower")), float(sub.get("upper")))
        elif sub.tag in ("parent", "child"):
            _check_attrs(sub, {"link"}, spath)
            link = sub.get("link")
            if not link:
                raise UrdfError(f"{spath}: missing link attribute")
            if sub.tag == "parent":
                parent = link
            else:
                child = link
        else:
            raise UrdfError(f"{spath}: unknown element")

    if parent is None or child is None:
        raise UrdfError(f"{path}: parent and child are both required")
    if kind == "revolute":
        if axis is None:
            raise UrdfError(f"{path}/axis: missing axis on revolute joint")
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_UNIT_TOL:
            raise UrdfError(f"{path}/axis: non-unit axis ({_fmt3(axis)})")
        if limits is None:
            raise UrdfError(f"{path}/limit: missing limit on revolute joint")
        if limits[0] > limits[1]:
            raise UrdfError(f"{path}/limit: lower {limits[0]} > upper {limits[1]}")
    else:
        if axis is not None:
            raise UrdfError(f"{path}/axis: fixed joints carry no axis")
        if limits is not None:
            raise UrdfError(f"{path}/limit: fixed joints carry no limits")

    return name, {
        "kind": kind,
        "origin": origin,
        "axis": axis,
        "limits": limits,
        "parent": parent,
        "child": child,
    }


def _assemble(model_name, links, joints) -> HandModel:
    parent_joint: dict[str, str] = {}
    for jname, j in joints.items():
        if j["child"] in parent_joint:
            raise UrdfError(
                f"robot/joint[@name='{jname}']/child: link {j['child']!r} already has "
                f"parent joint {parent_joint[j['child']]!r} (cycle or reconvergence)"
            )
        parent_joint[j["child"]] = jname

    roots = [l for l in links if l not in parent_joint]
    if len(roots) != 1:
        raise UrdfError(
            f"robot: expected exactly one root link, found {sorted(roots)} "
            "(a cycle leaves none; disconnected trees leave several)"
        )
    root = roots[0]

    # walk up from every link; a walk that exceeds the joint count loops
    for link in links:
        cur, steps = link, 0
        while cur in parent_joint:
            cur = joints[parent_joint[cur]]["parent"]
            steps += 1
            if steps > len(joints):
                raise UrdfError(f"robot/link[@name='{link}']: cycle in joint graph")

    palm_frame = Transform.identity()
    palm = root
    if root == "world":
        mounts = [n for n, j in joints.items() if j["parent"] == "world"]
        if len(mounts) != 1 or joints[mounts[0]]["kind"] != "fixed":
            raise UrdfError(
                "robot/link[@name='world']: a world root needs exactly one fixed mount joint"
            )
        palm_frame = joints[mounts[0]]["origin"]
        palm = joints[mounts[0]]["child"]

    tips = [l for l in links if l.endswith("_tip")]
    if not tips:
        raise UrdfError("robot: no link name ends in '_tip'; cannot locate end-effectors")

    chains: dict[str, KinematicChain] = {}
    used: dict[str, str] = {}
    for tip in sorted(tips):
        chain_name = tip[: -len("_tip")]
        if not chain_name:
            raise UrdfError(f"robot/link[@name='{tip}']: empty chain name")
        path = []
        cur = tip
        while cur != palm:
            if cur not in parent_joint:
                raise UrdfError(f"robot/link[@name='{tip}']: chain does not reach the palm")
            jname = parent_joint[cur]
            path.append(jname)
            cur = joints[jname]["parent"]
        path.reverse()
        for jname in path:
            if jname in used:
                raise UrdfError(
                    f"robot/joint[@name='{jname}']: joint shared by chains "
                    f"{used[jname]!r} and {chain_name!r}"
                )
            used[jname] = chain_name

        tip_offset = Transform.identity()
        if path and joints[path[-1]]["kind"] == "fixed":
            tip_offset = joints[path[-1]]["origin"]
            path = path[:-1]
        chain_joints = tuple(
            Joint(
                name=jname,
                kind=joints[jname]["kind"],
                origin=joints[jname]["origin"],
                axis=joints[jname]["axis"],
                limits=joints[jname]["limits"],
            )
            for jname in path
        )
        if not any(j.is_revolute for j in chain_joints):
            raise UrdfError(f"robot/link[@name='{tip}']: chain has no revolute joint")
        chains[chain_name] = KinematicChain(chain_joints, tip_offset)

    stray = [n for n in joints if n not in used and joints[n]["parent"] != "world"]
    if stray:
        raise UrdfError(
            f"robot/joint[@name='{sorted(stray)[0]}']: joint not on any fingertip chain"
        )

    return HandModel(name=model_name, palm_frame=palm_frame, chains=chains)


def serialize_hand_model(model: HandModel) -> str:
    """Deterministic text form; the inverse of :func:`parse_hand_model`."""
    lines = [f'<robot name="{model.name}">']
    link_lines = []
    joint_lines = []

    identity_palm = model.palm_frame.allclose(Transform.identity())
    if not identity_palm:
        link_lines.append('  <link name="world"/>')
        joint_lines.extend(
            _joint_xml("palm_mount", "fixed", model.palm_frame, None, None, "world", "palm")
        )
    link_lines.append('  <link name="palm"/>')

    for chain_name in model.chain_order():
        chain = model.chains[chain_name]
        parent = "palm"
        for i, joint in enumerate(chain.joints):
            child = f"{chain_name}_l{i + 1}"
            link_lines.append(f'  <link name="{child}"/>')
            joint_lines.extend(
                _joint_xml(joint.name, joint.kind, joint.origin, joint.axis, joint.limits, parent, child)
            )
            parent = child
        tip = f"{chain_name}_tip"
        link_lines.append(f'  <link name="{tip}"/>')
        joint_lines.extend(
            _joint_xml(f"{chain_name}_tip_joint", "fixed", chain.tip_offset, None, None, parent, tip)
        )

    lines.extend(link_lines)
    lines.extend(joint_lines)
    lines.append("</robot>")
    return "\n".join(lines) + "\n"


def _joint_xml(name, kind, origin, axis, limits, parent, child) -> list[str]:
    rpy = rpy_from_rotation(origin.rotation)
    out = [f'  <joint name="{name}" type="{kind}">']
    out.append(f'    <origin xyz="{_fmt3(origin.translation)}" rpy="{_fmt3(rpy)}"/>')
    if axis is not None:
        out.append(f'    <axis xyz="{_fmt3(axis)}"/>')
    if limits is not None:
        out.append(f'    <limit lower="{_fmt(limits[0])}" upper="{_fmt(limits[1])}"/>')
    out.append(f'    <parent link="{parent}"/>')
    out.append(f'    <child link="{child}"/>')
    out.append("  </joint>")
    return out
