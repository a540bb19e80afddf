import numpy as np
import pytest

from dexkin.kinematics import forward_kinematics, geometric_jacobian
from dexkin.retarget import (
    INDEX_TIP,
    WRIST,
    HumanHandFrame,
    JointAngleRule,
    JointMapping,
    KeyVectorSpec,
    RetargetOptions,
    default_joint_mapping,
    default_key_vector_spec,
    dihedral_angle,
    direct_joint_map,
    finite_difference_energy_gradient,
    format_frame_line,
    frame_from_robot_pose,
    key_vectors_human,
    key_vectors_robot,
    parse_frame_line,
    retarget_energy,
    retarget_frame,
    retarget_stream,
    subtended_angle,
)
from dexkin.retarget import _energy_gradient

from conftest import random_hand_config


def unit_spec(model):
    return KeyVectorSpec(default_key_vector_spec(model).pairs, np.ones(10))


def tip_errors(model, q_a, q_b):
    sa, sb = model.split_config(q_a), model.split_config(q_b)
    return [
        np.linalg.norm(
            forward_kinematics(model.chains[c], sa[c]).translation
            - forward_kinematics(model.chains[c], sb[c]).translation
        )
        for c in model.chain_order()
    ]


# -- key vectors ---------------------------------------------------------------

def test_human_vectors_zero_keypoints(archetypes):
    spec = default_key_vector_spec(archetypes["leap"])
    frame = HumanHandFrame(0.0, np.zeros((21, 3)))
    assert np.allclose(key_vectors_human(frame, spec), 0.0)


def test_human_vector_from_wrist_to_tip(archetypes):
    spec = default_key_vector_spec(archetypes["leap"])
    kp = np.zeros((21, 3))
    kp[INDEX_TIP] = [0.0, 0.1, 0.0]
    vecs = key_vectors_human(HumanHandFrame(0.0, kp), spec)
    assert np.allclose(vecs[1], [0.0, 0.1, 0.0])  # pair 1 is palm -> index tip


def test_human_vectors_translation_invariant(archetypes, rng):
    spec = default_key_vector_spec(archetypes["leap"])
    kp = rng.normal(0, 0.05, (21, 3))
    v1 = key_vectors_human(HumanHandFrame(0.0, kp), spec)
    v2 = key_vectors_human(HumanHandFrame(0.0, kp + [0.3, -0.1, 0.8]), spec)
    assert np.allclose(v1, v2, atol=1e-12)


def test_robot_vectors_at_zero_pose(archetypes):
    model = archetypes["leap"]
    vecs = key_vectors_robot(model, model.zero_config(), unit_spec(model))
    assert np.allclose(vecs[1], [0.244, 0.045, 0.010], atol=1e-12)  # palm -> index tip
    assert np.allclose(vecs[8], [0.0, -0.045, 0.0], atol=1e-12)  # middle -> ring tip


def test_robot_vectors_smooth_in_q(archetypes, rng):
    # directional derivative of the vectors must match the chain Jacobians
    model = archetypes["leap"]
    spec = unit_spec(model)
    slices = model.chain_slices()
    for _ in range(10):
        q = random_hand_config(rng, model)
        delta = rng.normal(0, 1, model.dof)
        delta *= 1e-6 / np.linalg.norm(delta)
        v0 = key_vectors_robot(model, q, spec)
        v1 = key_vectors_robot(model, q + delta, spec)
        for i, ((_, ra), (_, rb)) in enumerate(spec.pairs):
            predicted = np.zeros(3)
            for sign, point in ((1.0, rb), (-1.0, ra)):
                if point == "palm":
                    continue
                jac = geometric_jacobian(model.chains[point], model.split_config(q)[point])
                predicted += sign * jac.linear @ delta[slices[point]]
            assert np.linalg.norm((v1[i] - v0[i]) - predicted) < 1e-5


def test_spec_referencing_only_thumb(archetypes):
    model = archetypes["leap"]
    pairs = tuple(((WRIST, "palm"), (4, "thumb")) for _ in range(10))
    spec = KeyVectorSpec(pairs, np.ones(10))
    vecs = key_vectors_robot(model, model.zero_config(), spec)
    assert np.allclose(vecs, vecs[0])


def test_spec_unknown_robot_point(archetypes):
    model = archetypes["leap"]
    pairs = (((WRIST, "palm"), (8, "pinky")),) + default_key_vector_spec(model).pairs[1:]
    with pytest.raises(KeyError, match="pinky"):
        key_vectors_robot(model, model.zero_config(), KeyVectorSpec(pairs, np.ones(10)))


def test_spec_validation():
    with pytest.raises(ValueError, match="10 pairs"):
        KeyVectorSpec((((0, "palm"), (8, "index")),), np.ones(1))


def test_spec_json_round_trip(archetypes):
    spec = default_key_vector_spec(archetypes["leap"])
    back = KeyVectorSpec.from_json(spec.to_json())
    assert back.pairs == spec.pairs
    assert np.allclose(back.scales, spec.scales)


# -- energy ---------------------------------------------------------------------

def test_energy_zero_on_match(archetypes, rng):
    model = archetypes["leap"]
    spec = default_key_vector_spec(model)
    q = random_hand_config(rng, model)
    v_h = spec.scales[:, None] * key_vectors_robot(model, q, spec)
    assert retarget_energy(v_h, model, q, spec) < 1e-24


def test_energy_of_zero_targets(archetypes):
    model = archetypes["leap"]
    spec = default_key_vector_spec(model)
    q = model.zero_config()
    v_r = key_vectors_robot(model, q, spec)
    expected = float(sum(np.dot(c * v, c * v) for c, v in zip(spec.scales, v_r)))
    assert retarget_energy(np.zeros((10, 3)), model, q, spec) == pytest.approx(expected, rel=1e-12)


def test_energy_matches_bruteforce(archetypes, rng):
    model = archetypes["leap"]
    spec = default_key_vector_spec(model)
    for _ in range(10):
        q = random_hand_config(rng, model)
        v_h = rng.normal(0, 0.1, (10, 3))
        v_r = key_vectors_robot(model, q, spec)
        brute = 0.0
        for i in range(10):
            diff = v_h[i] - spec.scales[i] * v_r[i]
            brute += diff[0] ** 2 + diff[1] ** 2 + diff[2] ** 2
        assert retarget_energy(v_h, model, q, spec) == pytest.approx(brute, abs=1e-12)


def test_energy_translation_invariance(archetypes, rng):
    model = archetypes["leap"]
    spec = default_key_vector_spec(model)
    kp = rng.normal(0, 0.05, (21, 3))
    q = random_hand_config(rng, model)
    e1 = retarget_energy(key_vectors_human(HumanHandFrame(0, kp), spec), model, q, spec)
    e2 = retarget_energy(
        key_vectors_human(HumanHandFrame(0, kp + [1.0, 2.0, 3.0]), spec), model, q, spec
    )
    assert e1 == pytest.approx(e2, rel=1e-12)


def test_analytic_gradient_matches_fd(archetypes, rng):
    model = archetypes["leap"]
    spec = default_key_vector_spec(model)
    worst = 0.0
    for _ in range(20):
        q = random_hand_config(rng, model)
        frame = frame_from_robot_pose(model, random_hand_config(rng, model))
        v_h = key_vectors_human(frame, spec)
        _, analytic, _ = _energy_gradient(v_h, model, q, spec)
        fd = finite_difference_energy_gradient(frame, model, spec, q)
        worst = max(worst, np.linalg.norm(analytic - fd) / np.linalg.norm(analytic))
    assert worst < 1e-4


# -- frame minimization ----------------------------------------------------------

def test_self_consistency_recovery(archetypes, rng):
    model = archetypes["leap"]
    spec = unit_spec(model)
    hits = 0
    for _ in range(20):
        q_true = random_hand_config(rng, model)
        frame = frame_from_robot_pose(model, q_true)
        result = retarget_frame(frame, model, spec, model.zero_config())
        assert all(np.diff(result.energies) <= 1e-15)
        if max(tip_errors(model, q_true, result.q)) < 1e-3 and result.energy <= 1e-6:
            hits += 1
    assert hits >= 19


def test_warm_start_converges_immediately(archetypes, rng):
    model = archetypes["leap"]
    spec = unit_spec(model)
    frame = frame_from_robot_pose(model, random_hand_config(rng, model))
    first = retarget_frame(frame, model, spec, model.zero_config())
    again = retarget_frame(frame, model, spec, first.q)
    assert again.iterations <= 2
    assert again.energy <= first.energy + 1e-12


def test_single_iteration_contract(archetypes, rng):
    model = archetypes["leap"]
    spec = unit_spec(model)
    frame = frame_from_robot_pose(model, random_hand_config(rng, model))
    q0 = model.zero_config()
    opts = RetargetOptions(max_iterations=1)
    result = retarget_frame(frame, model, spec, q0, opts)
    v_h = key_vectors_human(frame, spec)
    assert result.iterations <= 1
    assert result.energy <= retarget_energy(v_h, model, q0, spec) + 1e-15


def test_clamped_solution_within_limits(archetypes, rng):
    model = archetypes["leap-c"]
    spec = unit_spec(model)
    lim = model.joint_limits()
    frame = frame_from_robot_pose(model, random_hand_config(rng, model))
    result = retarget_frame(frame, model, spec, model.zero_config())
    assert (result.q >= lim[:, 0] - 1e-12).all() and (result.q <= lim[:, 1] + 1e-12).all()


def test_non_finite_frame_rejected(archetypes):
    model = archetypes["leap"]
    spec = unit_spec(model)
    kp = np.zeros((21, 3))
    kp[INDEX_TIP] = [1e200, 0, 0]  # finite, but squares overflow
    with np.errstate(over="ignore"), pytest.raises(ValueError, match="non-finite"):
        retarget_frame(HumanHandFrame(0.0, kp), model, spec, model.zero_config())


def test_frame_validation():
    with pytest.raises(ValueError, match="keypoints"):
        HumanHandFrame(0.0, np.zeros((20, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        HumanHandFrame(0.0, np.full((21, 3), np.nan))


def test_frame_line_round_trip(archetypes, rng):
    frame = frame_from_robot_pose(archetypes["leap"], random_hand_config(rng, archetypes["leap"]), 1.25)
    back = parse_frame_line(format_frame_line(frame))
    assert back.timestamp == frame.timestamp
    assert np.allclose(back.keypoints, frame.keypoints, atol=1e-15)


# -- streams ---------------------------------------------------------------------

def test_stream_fixed_point_on_constant_input(archetypes, rng):
    model = archetypes["leap"]
    spec = unit_spec(model)
    frame = frame_from_robot_pose(model, random_hand_config(rng, model), 0.0)
    frames = [HumanHandFrame(float(k), frame.keypoints) for k in range(10)]
    configs, warnings = retarget_stream(frames, model, spec)
    assert not warnings
    # warm starts at the optimum may still polish along the redundant
    # self-motion directions at the solver's energy tolerance
    for q in configs[2:]:
        assert np.abs(q - configs[1]).max() < 1e-3


def test_stream_huge_smoothing_pins_output(archetypes, rng):
    model = archetypes["leap"]
    spec = unit_spec(model)
    frames = [frame_from_robot_pose(model, random_hand_config(rng, model), float(k)) for k in range(3)]
    configs, _ = retarget_stream(frames, model, spec, RetargetOptions(smoothing=1e9))
    for q in configs:
        assert np.abs(q - model.zero_config()).max() < 1e-3


def test_stream_smooth_trajectory_recovery(archetypes):
    model = archetypes["leap"]
    spec = unit_spec(model)
    lim = model.joint_limits()
    mid = 0.5 * (lim[:, 0] + lim[:, 1])
    amp = 0.3 * (lim[:, 1] - lim[:, 0])
    frames, truth = [], []
    for k in range(40):
        t = k / 20.0
        q = np.clip(mid + amp * np.sin(np.pi * t + np.linspace(0, 3, model.dof)), lim[:, 0], lim[:, 1])
        truth.append(q)
        frames.append(frame_from_robot_pose(model, q, t))
    configs, warnings = retarget_stream(frames, model, spec)
    assert not warnings
    errors = [max(tip_errors(model, qa, qb)) for qa, qb in zip(configs, truth)]
    assert np.mean(np.array(errors) < 2e-3) >= 0.95


def test_stream_warns_and_holds_on_bad_frame(archetypes, rng):
    model = archetypes["leap"]
    spec = unit_spec(model)
    good = frame_from_robot_pose(model, random_hand_config(rng, model), 0.0)
    kp = good.keypoints.copy()
    kp[INDEX_TIP] = [1e200, 0, 0]
    frames = [good, HumanHandFrame(1.0, kp), HumanHandFrame(2.0, good.keypoints)]
    with np.errstate(over="ignore"):
        configs, warnings = retarget_stream(frames, model, spec)
    assert len(configs) == 3
    assert len(warnings) == 1 and "frame 1" in warnings[0]
    assert np.array_equal(configs[1], configs[0])


def test_stream_rejects_out_of_order_frames(archetypes):
    model = archetypes["leap"]
    spec = unit_spec(model)
    kp = np.zeros((21, 3))
    frames = [HumanHandFrame(1.0, kp), HumanHandFrame(0.5, kp)]
    with pytest.raises(ValueError, match="out of order"):
        retarget_stream(frames, model, spec)


# -- direct mapping ---------------------------------------------------------------

def test_subtended_angle_straight_is_zero():
    kp = np.zeros((21, 3))
    kp[5], kp[6], kp[7] = [0.0, 0, 0], [0.03, 0, 0], [0.06, 0, 0]
    assert subtended_angle(kp, 5, 6, 7) == pytest.approx(0.0, abs=1e-12)


def test_subtended_angle_right_angle():
    kp = np.zeros((21, 3))
    kp[0], kp[5], kp[6] = [-0.03, 0, 0], [0.0, 0, 0], [0.0, 0.03, 0]
    assert subtended_angle(kp, 0, 5, 6) == pytest.approx(np.pi / 2, abs=1e-12)


def test_subtended_degenerate_coincident():
    kp = np.zeros((21, 3))
    with pytest.raises(ValueError, match="joint 'index_pip'.*degenerate"):
        subtended_angle(kp, 5, 6, 7, joint="index_pip")


def test_dihedral_signed():
    kp = np.zeros((21, 3))
    kp[0], kp[1], kp[2] = [0, -0.02, 0], [0, 0, 0], [0.03, 0, 0]
    kp[3] = [0.06, 0.0, 0.02]  # last point lifted out of the base plane
    plus = dihedral_angle(kp, 0, 1, 2, 3)
    kp[3] = [0.06, 0.0, -0.02]
    minus = dihedral_angle(kp, 0, 1, 2, 3)
    assert abs(plus) == pytest.approx(np.pi / 2, abs=1e-12)
    assert plus == pytest.approx(-minus, abs=1e-12)


def test_dihedral_degenerate_collinear():
    kp = np.zeros((21, 3))
    kp[0], kp[1], kp[2], kp[3] = [0, 0, 0], [0.01, 0, 0], [0.02, 0, 0], [0.03, 0.01, 0]
    with pytest.raises(ValueError, match="collinear keypoints within 1e-9"):
        dihedral_angle(kp, 0, 1, 2, 3, joint="index_mcp_abd")


def stick_hand(flex=(0.2, 0.0, 0.0), index_flex=None):
    """Keypoints of a stick-figure hand with known per-joint flexion angles.

    Each digit runs along +x in its own y column and bends out of the palm
    plane by (mcp, pip, dip); the subtended-angle rules read those values
    back exactly.
    """
    kp = np.zeros((21, 3))
    ys = {"thumb": 0.09, "index": 0.045, "middle": 0.0, "ring": -0.045, "pinky": -0.09}
    bases = {"thumb": 1, "index": 5, "middle": 9, "ring": 13, "pinky": 17}
    for name, base in bases.items():
        angles = index_flex if (name == "index" and index_flex is not None) else flex
        p = np.array([0.07, ys[name], 0.0])
        kp[base] = p
        heading = 0.0
        for k, bend in enumerate(angles):
            heading += bend
            p = p + 0.03 * np.array([np.cos(heading), 0.0, np.sin(heading)])
            kp[base + 1 + k] = p
    return kp


def joint_index(model, name):
    names = [j.name for c in model.chain_order() for j in model.chains[c].revolute_joints]
    return names.index(name)


def test_direct_map_identity_gain(archetypes):
    model = archetypes["leap"]
    mapping = default_joint_mapping(model)
    kp = stick_hand(index_flex=(0.2, 0.7, 0.1))
    q = direct_joint_map(HumanHandFrame(0.0, kp), mapping, model)
    assert q[joint_index(model, "index_pip")] == pytest.approx(0.7, abs=1e-9)
    assert q[joint_index(model, "index_dip")] == pytest.approx(0.1, abs=1e-9)
    assert q[joint_index(model, "middle_pip")] == pytest.approx(0.0, abs=1e-9)
    assert q[joint_index(model, "middle_mcp_flex")] == pytest.approx(0.2, abs=1e-9)
    # unsplayed fingers read zero splay through the offset dihedral rule
    assert q[joint_index(model, "index_mcp_abd")] == pytest.approx(0.0, abs=1e-9)


def test_direct_map_straight_finger_reads_zero(archetypes):
    model = archetypes["leap"]
    mapping = default_joint_mapping(model)
    kp = stick_hand(flex=(0.3, 0.0, 0.0))  # bent at the knuckle, then straight
    q = direct_joint_map(HumanHandFrame(0.0, kp), mapping, model)
    assert q[joint_index(model, "index_pip")] == pytest.approx(0.0, abs=1e-9)
    assert q[joint_index(model, "index_dip")] == pytest.approx(0.0, abs=1e-9)


def test_direct_map_clamps_to_limits(archetypes):
    model = archetypes["leap"]
    rules = dict(default_joint_mapping(model).rules)
    rules["index_pip"] = JointAngleRule("subtended", rules["index_pip"].points, gain=100.0)
    kp = stick_hand(index_flex=(0.2, 0.1, 0.0))  # 0.1 rad, hugely amplified
    q = direct_joint_map(HumanHandFrame(0.0, kp), JointMapping(rules), model)
    lim = model.joint_limits()
    i = joint_index(model, "index_pip")
    assert q[i] == pytest.approx(lim[i, 1])


def test_direct_map_requires_full_coverage(archetypes):
    model = archetypes["leap"]
    rules = dict(default_joint_mapping(model).rules)
    del rules["ring_dip"]
    with pytest.raises(ValueError, match="ring_dip"):
        direct_joint_map(HumanHandFrame(0.0, stick_hand()), JointMapping(rules), model)


def test_mapping_json_round_trip(archetypes):
    mapping = default_joint_mapping(archetypes["leap"])
    back = JointMapping.from_json(mapping.to_json())
    assert back == mapping
