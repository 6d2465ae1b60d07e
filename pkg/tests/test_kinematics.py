import json

import numpy as np
import pytest

from behavior_forge.assets import asset_path
from behavior_forge.geometry import Pose6D, compose, invert, quat_to_rotvec
from behavior_forge.kinematics import (
    JointConfiguration,
    ParseError,
    UnknownChain,
    ValidationError,
    forward_kinematics,
    jacobian,
    load_model,
    solve_ik,
)


@pytest.fixture(scope="module")
def model():
    return load_model(asset_path("nadia_sim.json"))


def test_bundled_model_shape(model):
    assert len(model.joints) == 14
    assert sorted(model.chains) == ["left_arm", "right_arm"]
    for chain in model.chains.values():
        assert len(chain.joint_names) == 7
    assert model.reach("right_arm") == pytest.approx(0.30 + 0.27 + 0.10)


def test_bad_limits_rejected(model):
    doc = json.loads(asset_path("nadia_sim.json").read_text())
    doc["joints"][0]["limits"] = [1.0, -1.0]
    with pytest.raises(ValidationError, match="limits"):
        load_model(doc)


def test_unknown_parent_link_rejected():
    doc = json.loads(asset_path("nadia_sim.json").read_text())
    doc["joints"][3]["parent"] = "no_such_link"
    with pytest.raises(ValidationError, match="no_such_link"):
        load_model(doc)


def test_malformed_document():
    with pytest.raises(ParseError):
        load_model('{"name": "x", "links": [')


def test_unknown_chain(model):
    with pytest.raises(UnknownChain):
        forward_kinematics(model, model.configuration(), "tail")


def test_fk_zero_configuration(model):
    # pure composition of the fixed offsets: shoulder, upper arm, forearm, hand
    fk = forward_kinematics(model, model.configuration(), "right_arm")
    np.testing.assert_allclose(fk.position, [0.0, -(0.22 + 0.30 + 0.27 + 0.10), 0.15], atol=1e-12)
    np.testing.assert_allclose(fk.orientation, [1, 0, 0, 0], atol=1e-12)
    fk_l = forward_kinematics(model, model.configuration(), "left_arm")
    np.testing.assert_allclose(fk_l.position, [0.0, 0.89, 0.15], atol=1e-12)


def test_fk_elbow_right_angle(model):
    # oracle worked by hand: elbow at shoulder + upper arm = (0, -0.52, 0.25);
    # the 0.37 m forearm+hand segment rotates from -Y to +X under a +pi/2 Z turn
    fk = forward_kinematics(model, model.configuration({"r_elbow": np.pi / 2}), "right_arm")
    np.testing.assert_allclose(fk.position, [0.37, -0.52, 0.15], atol=1e-12)


def test_fk_shoulder_yaw_equivariance(model):
    # rotating the first joint by theta rotates the hand about that joint's
    # axis (through its origin) by exactly theta
    shoulder = np.array([0.0, -0.22, 0.15])
    rng = np.random.default_rng(17)
    base = {j.name: rng.uniform(*j.limits) for j in model.chain_joints("right_arm")}
    fk0 = forward_kinematics(model, model.configuration(base), "right_arm")
    for theta in np.linspace(-np.pi, np.pi, 25):
        q = dict(base)
        q["r_shoulder_yaw"] = q["r_shoulder_yaw"] + theta
        if not (-2.9 <= q["r_shoulder_yaw"] <= 2.9):
            continue
        fk = forward_kinematics(model, model.configuration(q), "right_arm")
        rot = compose(
            Pose6D(shoulder),
            compose(Pose6D.from_axis_angle((0, 0, 1), theta), Pose6D(-shoulder)),
        )
        assert compose(rot, fk0).almost_equal(fk, tol=1e-9)


def fd_jacobian(model, values: dict, chain: str, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of FK: the independent oracle for the
    analytic Jacobian."""
    names = [j.name for j in model.chain_joints(chain)]
    J = np.zeros((6, len(names)))
    for i, n in enumerate(names):
        up = dict(values)
        dn = dict(values)
        up[n] += h
        dn[n] -= h
        fp = forward_kinematics(model, JointConfiguration(up), chain)
        fm = forward_kinematics(model, JointConfiguration(dn), chain)
        J[:3, i] = (fp.position - fm.position) / (2 * h)
        J[3:, i] = quat_to_rotvec(compose(fp, invert(fm)).orientation) / (2 * h)
    return J


def test_jacobian_matches_finite_differences(model):
    rng = np.random.default_rng(99)
    for chain in ("right_arm", "left_arm"):
        joints = model.chain_joints(chain)
        for _ in range(50):
            # sample away from the limits so the FD probe never clips
            values = {j.name: rng.uniform(j.limits[0] + 0.01, j.limits[1] - 0.01) for j in joints}
            J = jacobian(model, JointConfiguration(values), chain)
            J_fd = fd_jacobian(model, values, chain)
            assert np.max(np.abs(J - J_fd)) < 1e-5


def test_ik_fixed_point(model):
    home = model.named_configuration("home")
    target = forward_kinematics(model, home, "right_arm")
    sol = solve_ik(model, "right_arm", target, home)
    assert sol.converged
    assert sol.iterations <= 2
    for name, v in home.values.items():
        if name.startswith("r_"):
            assert sol.configuration[name] == pytest.approx(v, abs=1e-6)


def test_ik_fk_round_trip_sample(model):
    home = model.named_configuration("home")
    joints = model.chain_joints("right_arm")
    names = [j.name for j in joints]
    rng = np.random.default_rng(12)
    converged = 0
    for _ in range(60):
        q = {n: rng.uniform(*model.limits(n)) for n in names}
        target = forward_kinematics(model, JointConfiguration(q), "right_arm")
        sol = solve_ik(model, "right_arm", target, home)
        if sol.converged:
            converged += 1
            assert sol.position_error < 1e-3
            assert sol.orientation_error < 0.01
            # reported errors are exactly the FK residual of the solution
            fk = forward_kinematics(model, sol.configuration, "right_arm")
            assert np.linalg.norm(target.position - fk.position) == pytest.approx(sol.position_error, abs=1e-12)
        for n, v in sol.configuration.values.items():
            lo, hi = model.limits(n)
            assert lo <= v <= hi
    assert converged >= 54  # 90% on the small sample; the acceptance suite runs 500


def test_ik_unreachable_target_extends_arm(model):
    home = model.named_configuration("home")
    target = Pose6D.from_axis_angle((0, 0, 1), np.pi / 2, (10.0, -0.22, 0.25))
    sol = solve_ik(model, "right_arm", target, home)
    assert not sol.converged
    dist = np.linalg.norm(sol.achieved_pose.position - model.chain_root_position("right_arm"))
    assert dist >= 0.95 * model.reach("right_arm")
    assert dist <= model.reach("right_arm") + 1e-9


def test_ik_deterministic(model):
    home = model.named_configuration("home")
    target = Pose6D.from_axis_angle((1, 0, 0), 0.4, (0.35, -0.3, 0.1))
    a = solve_ik(model, "right_arm", target, home)
    b = solve_ik(model, "right_arm", target, home)
    assert a.configuration.values == b.configuration.values
    assert a.iterations == b.iterations
    assert (a.achieved_pose.position == b.achieved_pose.position).all()
    assert (a.achieved_pose.orientation == b.achieved_pose.orientation).all()


def test_configuration_clamps_to_limits(model):
    cfg = model.configuration({"r_elbow": 99.0, "l_elbow": -99.0})
    assert cfg["r_elbow"] == 2.6
    assert cfg["l_elbow"] == -2.6
