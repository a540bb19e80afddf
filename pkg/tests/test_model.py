import dataclasses

import numpy as np
import pytest

from dexkin.kinematics import chain_frames
from dexkin.model import (
    ArchetypeParams,
    build_archetype,
    joint_role,
    validate_model,
)
from dexkin.transforms import Transform

PALM_NORMAL = np.array([0.0, 0.0, 1.0])


def axis_in_palm_frame(chain, joint_name, q):
    """World direction of a joint's axis at configuration q, via FK."""
    t = Transform.identity()
    k = 0
    from dexkin.transforms import rotation_about_axis

    for joint in chain.joints:
        t = t @ joint.origin
        if joint.name == joint_name:
            return t.rotation @ joint.axis
        if joint.is_revolute:
            t = t @ Transform(rotation_about_axis(joint.axis, q[k]))
            k += 1
    raise KeyError(joint_name)


def test_archetypes_are_16_dof(archetypes):
    for kind, model in archetypes.items():
        assert model.dof == 16, kind
        assert model.chain_order() == ("thumb", "index", "middle", "ring")
        assert validate_model(model) == []


def test_allegro_abduction_axis_lies_in_palm_plane(archetypes):
    chain = archetypes["allegro"].chains["index"]
    axis = axis_in_palm_frame(chain, "index_mcp_abd", np.zeros(4))
    assert abs(axis @ PALM_NORMAL) < 1e-12


def test_leapc_abduction_axis_parallel_to_palm_normal_at_all_configs(archetypes):
    chain = archetypes["leap-c"].chains["index"]
    rng = np.random.default_rng(0)
    lim = chain.joint_limits()
    for _ in range(20):
        q = rng.uniform(lim[:, 0], lim[:, 1])
        axis = axis_in_palm_frame(chain, "index_mcp_abd", q)
        assert np.allclose(np.abs(axis @ PALM_NORMAL), 1.0, atol=1e-12)


def test_leap_abduction_axis_rides_in_mcp_frame(archetypes):
    # the splay axis must rotate exactly with the first flexion joint
    chain = archetypes["leap"].chains["index"]
    from dexkin.transforms import rotation_about_axis

    flex = chain.joints[0]
    for theta in np.linspace(0.0, 1.6, 10):
        q = np.array([theta, 0.0, 0.0, 0.0])
        axis = axis_in_palm_frame(chain, "index_mcp_abd", q)
        expected = (
            flex.origin.rotation @ rotation_about_axis(flex.axis, theta) @ np.array([0, 0, 1.0])
        )
        assert np.allclose(axis, expected, atol=1e-12), theta
        # and it stays perpendicular to the flexion axis
        assert abs(axis @ (flex.origin.rotation @ flex.axis)) < 1e-12


def test_allegro_flexion_axes_parallel_at_zero(archetypes):
    for finger in ("index", "middle", "ring"):
        chain = archetypes["allegro"].chains[finger]
        frames, _ = chain_frames(chain, np.zeros(4))
        flex_axes = [ax for ax, _ in (frames[i] for i in (1, 2, 3))]
        for ax in flex_axes[1:]:
            assert np.allclose(np.abs(ax @ flex_axes[0]), 1.0, atol=1e-12)


def test_build_archetype_deterministic():
    a = build_archetype("leap")
    b = build_archetype("leap")
    for cn in a.chain_order():
        for ja, jb in zip(a.chains[cn].joints, b.chains[cn].joints):
            assert ja.name == jb.name and ja.kind == jb.kind
            assert np.array_equal(ja.origin.rotation, jb.origin.rotation)
            assert np.array_equal(ja.origin.translation, jb.origin.translation)


def test_build_archetype_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown archetype kind"):
        build_archetype("shadow")


def test_bad_params_rejected():
    with pytest.raises(ValueError, match="proximal"):
        build_archetype("leap", ArchetypeParams(proximal=-0.1))
    with pytest.raises(ValueError, match="ill-ordered"):
        build_archetype("leap", ArchetypeParams(mcp_limits=(1.0, 0.0)))


def test_validate_missing_thumb(archetypes):
    model = archetypes["leap"]
    chains = {k: v for k, v in model.chains.items() if k != "thumb"}
    broken = dataclasses.replace(model, chains=chains)
    diags = validate_model(broken)
    assert len(diags) == 1
    assert "thumb" in diags[0]


def test_validate_ill_ordered_limits(archetypes):
    model = archetypes["leap"]
    chain = model.chains["index"]
    bad = dataclasses.replace(chain.joints[0], limits=(2.0, 1.0))
    chains = dict(model.chains)
    chains["index"] = dataclasses.replace(chain, joints=(bad,) + chain.joints[1:])
    diags = validate_model(dataclasses.replace(model, chains=chains))
    assert len(diags) == 1
    assert "index_mcp_flex" in diags[0] and "ill-ordered" in diags[0]


def test_joint_roles():
    assert joint_role("index_mcp_abd") == "abduction"
    assert joint_role("index_mcp_flex") == "mcp"
    assert joint_role("thumb_cmc_flex") == "mcp"
    assert joint_role("ring_pip") == "pip"
    assert joint_role("thumb_mcp") == "pip"
    assert joint_role("middle_dip") == "dip"
    assert joint_role("thumb_ip") == "dip"


def test_config_helpers(archetypes):
    model = archetypes["leap"]
    q = np.arange(16.0)
    parts = model.split_config(q)
    assert list(parts) == ["thumb", "index", "middle", "ring"]
    assert np.array_equal(parts["index"], [4.0, 5.0, 6.0, 7.0])
    with pytest.raises(ValueError, match="expected 16 values"):
        model.split_config(np.zeros(5))
    clamped = model.clamp_config(np.full(16, 10.0))
    assert np.array_equal(clamped, model.joint_limits()[:, 1])
