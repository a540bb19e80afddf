"""Command-line front end: model I/O, dexterity analyses, retargeting, reward audits.

Every command writes its outputs plus a run manifest (resolved parameters,
input digests, seed, tool version, output names) into --out; reruns with an
identical manifest produce byte-identical outputs.  Exit codes: 0 success,
1 internal error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .kinematics import forward_kinematics
from .manipulability import PosePreset, manipulability_report
from .model import ARCHETYPE_KINDS, HandModel, build_archetype, validate_model
from .retarget import (
    JointMapping,
    KeyVectorSpec,
    RetargetOptions,
    default_key_vector_spec,
    direct_joint_map,
    parse_frame_line,
    retarget_frame,
)
from .reward import RewardScales, episode_return, read_trajectory_csv, step_reward
from .svgplot import scatter_projections
from .transforms import quaternion_wxyz
from .urdf import UrdfError, parse_hand_model
from .workspace import DEFAULT_SAMPLES, DEFAULT_THRESHOLD, DEFAULT_VOXEL, opposability

FINGERS_DEFAULT = ("index", "middle", "ring")


class InputError(Exception):
    """User-facing problem with flags or input files (exit code 2)."""


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_models(args) -> list[tuple[HandModel, dict]]:
    """Models from --archetype/--model flags, with their manifest input entries."""
    out = []
    for kind in args.archetype or []:
        out.append((build_archetype(kind), {}))
    for path in args.model or []:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"model file not found: {path}")
        try:
            model = parse_hand_model(p.read_text())
        except UrdfError as exc:
            raise InputError(f"{path}: {exc}") from None
        diags = validate_model(model)
        if diags:
            raise InputError(f"{path}: invalid model: {diags[0]}")
        out.append((model, {str(path): _sha256(p)}))
    if not out:
        raise InputError("no model given; use --archetype or --model")
    return out


def _single_model(args) -> tuple[HandModel, dict]:
    models = _load_models(args)
    if len(models) > 1:
        raise InputError("this command takes exactly one model")
    return models[0]


def _write_manifest(out_dir: Path, command: str, params: dict, inputs: dict, seed, outputs):
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": inputs,
        "seed": seed,
        "version": __version__,
        "outputs": sorted(outputs),
    }
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fk(args) -> int:
    model, inputs = _single_model(args)
    if args.q_file:
        p = Path(args.q_file)
        if not p.is_file():
            raise InputError(f"q file not found: {args.q_file}")
        inputs[str(p)] = _sha256(p)
        text = p.read_text().replace(",", " ").split()
    else:
        text = (args.q or "0," * (model.dof - 1) + "0").split(",")
    try:
        q = np.array([float(v) for v in text])
    except ValueError as exc:
        raise InputError(f"bad q value: {exc}") from None
    if q.size != model.dof:
        raise InputError(f"expected {model.dof} values, got {q.size}")
    split = model.split_config(q)
    lines = ["chain,x,y,z,qw,qx,qy,qz"]
    for name in model.chain_order():
        tip = forward_kinematics(model.chains[name], split[name])
        quat = quaternion_wxyz(tip.rotation)
        vals = [*tip.translation, *quat]
        lines.append(name + "," + ",".join(f"{v:.9g}" for v in vals))
    out = _out_dir(args)
    (out / "fk.csv").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "fk", {"model": model.name, "q": q.tolist()}, inputs, None, ["fk.csv"])
    print(f"fk: wrote {out / 'fk.csv'}")
    return 0


def _load_presets(path: str) -> list[PosePreset]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"preset file not found: {path}")
    try:
        doc = json.loads(p.read_text())
        return [PosePreset(str(row["name"]), np.array(row["q"], dtype=float)) for row in doc]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad preset file ({exc})") from None


def cmd_manip(args) -> int:
    models = _load_models(args)
    inputs = {}
    presets = None
    if args.preset_file:
        presets = _load_presets(args.preset_file)
        inputs[str(Path(args.preset_file))] = _sha256(Path(args.preset_file))
    try:
        report = manipulability_report([m for m, _ in models], presets, chain_name=args.chain)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc)) from None
    for _, model_inputs in models:
        inputs.update(model_inputs)
    out = _out_dir(args)
    (out / "manipulability.csv").write_text(report.to_csv())
    _write_manifest(
        out,
        "manip",
        {"models": [m.name for m, _ in models], "chain": args.chain,
         "presets": [p.name for p in presets] if presets else "default"},
        inputs,
        None,
        ["manipulability.csv"],
    )
    print(f"manip: wrote {out / 'manipulability.csv'}")
    return 0


def cmd_oppose(args) -> int:
    model, inputs = _single_model(args)
    if args.n < 1:
        raise InputError("n must be >= 1")
    if args.threshold <= 0:
        raise InputError("threshold must be > 0")
    if args.voxel <= 0:
        raise InputError("voxel must be > 0")
    fingers = args.fingers.split(",") if args.fingers else list(FINGERS_DEFAULT)
    out = _out_dir(args)
    outputs = []
    print(f"oppose: model={model.name} n={args.n} seed={args.seed} "
          f"threshold={args.threshold} voxel={args.voxel}")
    for finger in fingers:
        if finger not in model.chains or finger == "thumb":
            raise InputError(f"unknown finger {finger!r}")
        result, contacts = opposability(
            model, finger, n=args.n, seed=args.seed, threshold=args.threshold, voxel=args.voxel
        )
        stem = f"oppose_{model.name}_{finger}"
        (out / f"{stem}.json").write_text(result.to_json() + "\n")
        rows = ["x,y,z"]
        rows += [",".join(f"{v:.9g}" for v in c.point) for c in contacts]
        (out / f"{stem}_contacts.csv").write_text("\n".join(rows) + "\n")
        points = np.array([c.point for c in contacts]).reshape(-1, 3)
        (out / f"{stem}.svg").write_text(
            scatter_projections(points, f"{model.name} {finger} thumb contacts")
        )
        outputs += [f"{stem}.json", f"{stem}_contacts.csv", f"{stem}.svg"]
        print(f"  {finger}: contacts={result.contact_count} volume={result.volume_mm3:.0f} mm^3")
    _write_manifest(
        out,
        "oppose",
        {"model": model.name, "fingers": fingers, "n": args.n,
         "threshold": args.threshold, "voxel": args.voxel},
        inputs,
        args.seed,
        outputs,
    )
    return 0


def cmd_retarget(args) -> int:
    model, inputs = _single_model(args)
    frames_path = Path(args.frames)
    if not frames_path.is_file():
        raise InputError(f"frames file not found: {args.frames}")
    inputs[str(frames_path)] = _sha256(frames_path)

    if args.spec:
        spec_path = Path(args.spec)
        if not spec_path.is_file():
            raise InputError(f"spec file not found: {args.spec}")
        inputs[str(spec_path)] = _sha256(spec_path)
        spec = KeyVectorSpec.from_json(spec_path.read_text())
    else:
        spec = default_key_vector_spec(model)

    mapping = None
    if args.mode == "direct":
        if not args.mapping:
            raise InputError("--mode direct requires --mapping")
        mapping_path = Path(args.mapping)
        if not mapping_path.is_file():
            raise InputError(f"mapping file not found: {args.mapping}")
        inputs[str(mapping_path)] = _sha256(mapping_path)
        mapping = JointMapping.from_json(mapping_path.read_text())

    opts = RetargetOptions(smoothing=args.smoothing)
    q_prev = model.zero_config()
    rows = []
    warnings = []
    last_t = None
    for k, line in enumerate(frames_path.read_text().splitlines()):
        if not line.strip():
            continue
        t = float(k)
        try:
            frame = parse_frame_line(line)
            t = frame.timestamp
            if last_t is not None and t < last_t:
                raise ValueError(f"timestamp {t} decreases")
            last_t = t
            if mapping is not None:
                q_prev = direct_joint_map(frame, mapping, model)
            else:
                q_prev = retarget_frame(frame, model, spec, q_prev, opts, _q_ref=q_prev).q
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            warnings.append(f"frame {k}: {exc}; emitting previous configuration")
        rows.append((t, q_prev.copy()))

    out = _out_dir(args)
    lines = ["t," + ",".join(f"q{i}" for i in range(model.dof))]
    for t, q in rows:
        lines.append(f"{t:.6f}," + ",".join(f"{v:.6f}" for v in q))
    (out / "joints.csv").write_text("\n".join(lines) + "\n")
    (out / "retarget_warnings.log").write_text("".join(w + "\n" for w in warnings))
    _write_manifest(
        out,
        "retarget",
        {"model": model.name, "mode": args.mode, "smoothing": args.smoothing,
         "frames": len(rows)},
        inputs,
        None,
        ["joints.csv", "retarget_warnings.log"],
    )
    print(f"retarget: {len(rows)} frames, {len(warnings)} warnings -> {out / 'joints.csv'}")
    return 0


def cmd_reward(args) -> int:
    traj_path = Path(args.trajectory)
    if not traj_path.is_file():
        raise InputError(f"trajectory file not found: {args.trajectory}")
    inputs = {str(traj_path): _sha256(traj_path)}
    scales = RewardScales()
    if args.scales:
        scales_path = Path(args.scales)
        if not scales_path.is_file():
            raise InputError(f"scales file not found: {args.scales}")
        inputs[str(scales_path)] = _sha256(scales_path)
        doc = json.loads(scales_path.read_text())
        try:
            scales = RewardScales(**doc)
        except (TypeError, ValueError) as exc:
            raise InputError(f"{args.scales}: bad scales ({exc})") from None
    try:
        times, steps = read_trajectory_csv(traj_path.read_text())
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not steps:
        raise InputError("trajectory has no steps")
    per_step = [dict(t=t, **step_reward(s, scales).as_dict()) for t, s in zip(times, steps)]
    summary = episode_return(steps, scales)
    out = _out_dir(args)
    doc = {
        "episode": json.loads(summary.to_json()),
        "steps": per_step,
    }
    (out / "reward.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    _write_manifest(out, "reward", {"scales": scales.__dict__}, inputs, None, ["reward.json"])
    print(f"reward: episode total {summary.total:.6f} over {summary.steps} steps "
          f"-> {out / 'reward.json'}")
    return 0


def _add_model_flags(p):
    p.add_argument("--archetype", action="append", choices=ARCHETYPE_KINDS,
                   help="built-in hand archetype (repeatable)")
    p.add_argument("--model", action="append", help="hand model file (repeatable)")
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dexkin",
                                     description="Dexterous-hand kinematics analysis toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fk", help="fingertip poses for a joint configuration")
    _add_model_flags(p)
    p.add_argument("--q", help="comma-separated joint angles (radians)")
    p.add_argument("--q-file", help="file with whitespace/comma separated angles")
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("manip", help="manipulability measure report")
    _add_model_flags(p)
    p.add_argument("--chain", default="index", help="finger chain to analyze")
    p.add_argument("--preset-file", help="JSON list of {name, q} presets")
    p.set_defaults(func=cmd_manip)

    p = sub.add_parser("oppose", help="thumb opposability volumes")
    _add_model_flags(p)
    p.add_argument("--fingers", help="comma-separated fingers (default index,middle,ring)")
    p.add_argument("--n", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--voxel", type=float, default=DEFAULT_VOXEL)
    p.set_defaults(func=cmd_oppose)

    p = sub.add_parser("retarget", help="human keypoint frames to joint angles")
    _add_model_flags(p)
    p.add_argument("--frames", required=True, help="line-delimited JSON keypoint frames")
    p.add_argument("--mode", choices=("energy", "direct"), default="energy")
    p.add_argument("--spec", help="key-vector spec JSON (default: built-in)")
    p.add_argument("--mapping", help="joint mapping JSON (required for --mode direct)")
    p.add_argument("--smoothing", type=float, default=0.0,
                   help="temporal smoothing weight on ||q - q_prev||^2")
    p.set_defaults(func=cmd_retarget)

    p = sub.add_parser("reward", help="audit an in-hand-rotation reward trace")
    p.add_argument("--trajectory", required=True, help="trajectory CSV")
    p.add_argument("--scales", help="reward scales JSON")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_reward)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
