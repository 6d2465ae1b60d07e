import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from behavior_forge.actions import (
    ActionSequence,
    ArmJointAngles,
    HandConfiguration,
    HandPose,
    IndexOutOfRange,
    ParseError,
    SchemaError,
    StancePose,
    UnknownKind,
    ValidationError,
    deserialize,
    insert_action,
    move_action,
    remove_action,
    serialize,
    update_action,
    validate_against_frames,
    validate_sequence,
)
from behavior_forge.geometry import FrameTree, Pose6D


def stance(desc="step", frame="door_frame", y=0.12):
    return StancePose(desc, frame,
                      Pose6D.from_xy_yaw(0.0, y, 0.0),
                      Pose6D.from_xy_yaw(0.0, -y, 0.0))


def hand(desc="reach", frame="door_lever", side="right"):
    return HandPose(desc, frame, side, Pose6D.from_xyz(0.1, 0.0, 0.0), 2.0)


def empty_seq():
    return ActionSequence("test", "door_frame")


def test_insert_into_empty():
    seq = insert_action(empty_seq(), 0, stance())
    assert len(seq) == 1
    assert seq[0].description == "step"


def test_insert_then_remove_is_identity():
    base = insert_action(empty_seq(), 0, hand())
    seq = remove_action(insert_action(base, 0, stance()), 0)
    assert seq == base


def test_insert_out_of_range():
    with pytest.raises(IndexOutOfRange):
        insert_action(empty_seq(), 1, stance())
    with pytest.raises(IndexOutOfRange):
        insert_action(empty_seq(), -1, stance())


def test_edits_do_not_mutate_untouched_actions():
    a, b = stance("a"), hand("b")
    seq = insert_action(insert_action(empty_seq(), 0, a), 1, b)
    seq2 = update_action(seq, 0, stance("a2"))
    assert seq[0].description == "a"
    assert seq2[1] is b


def test_move_action():
    seq = empty_seq()
    for i, d in enumerate("abc"):
        seq = insert_action(seq, i, hand(d))
    moved = move_action(seq, 0, 2)
    assert moved.descriptions() == ["b", "c", "a"]


def test_serialize_round_trip_bytes():
    seq = ActionSequence("demo", "door_frame", (
        stance("approach"),
        hand("reach lever"),
        HandConfiguration("grab", "door_lever", "right", "close"),
        ArmJointAngles("tuck", "door_frame", "both", {"r_elbow": 1.5, "l_elbow": -1.5}, 2.0),
    ))
    data = serialize(seq)
    assert data.endswith(b"\n")
    again = deserialize(data)
    assert again == seq
    assert serialize(again) == data


def test_key_order_does_not_affect_bytes():
    obj = json.loads(serialize(ActionSequence("demo", "f", (hand("h", "f"),))))
    scrambled = json.dumps(obj, sort_keys=False, indent=3)
    # a non-canonical rendering of the same value re-serializes canonically
    assert serialize(deserialize(scrambled)) == serialize(deserialize(json.dumps(obj, sort_keys=True)))


def test_empty_actions_array_valid():
    seq = deserialize(b'{"format_version":"1","name":"x","task_frame":"f","actions":[]}')
    assert len(seq) == 0


def test_negative_duration_rejected():
    obj = json.loads(serialize(ActionSequence("x", "f", (hand("h", "f"),))))
    obj["actions"][0]["trajectory_duration"] = -1.0
    with pytest.raises(SchemaError) as e:
        deserialize(json.dumps(obj))
    assert "trajectory_duration" in e.value.field


def test_unsupported_version_rejected():
    with pytest.raises(SchemaError) as e:
        deserialize(b'{"format_version":"99","name":"x","task_frame":"f","actions":[]}')
    assert e.value.field == "format_version"


def test_unknown_kind_rejected():
    with pytest.raises(UnknownKind):
        deserialize(json.dumps({
            "format_version": "1", "name": "x", "task_frame": "f",
            "actions": [{"kind": "backflip", "description": "d", "parent_frame": "f"}],
        }))


def test_unknown_field_rejected():
    obj = json.loads(serialize(ActionSequence("x", "f", (hand("h", "f"),))))
    obj["actions"][0]["force"] = 3
    with pytest.raises(SchemaError) as e:
        deserialize(json.dumps(obj))
    assert "force" in e.value.field


def test_parse_error_locates():
    with pytest.raises(ParseError) as e:
        deserialize(b'{"format_version": "1", \n  "name": ')
    assert e.value.line == 2


def test_serialize_invalid_sequence():
    bad = ActionSequence("x", "f", (StancePose("s", "f", Pose6D.from_xyz(0, 5, 0), Pose6D.identity()),))
    with pytest.raises(ValidationError) as e:
        serialize(bad)
    assert any("separation" in v for v in e.value.violations)


def test_validate_feet_separation_band():
    ok = stance(y=0.12)
    assert validate_sequence(ActionSequence("x", "f", (ok,))) == []
    narrow = stance(y=0.05)
    assert validate_sequence(ActionSequence("x", "f", (narrow,)))


def test_validate_against_frames():
    tree = FrameTree()
    tree.add_frame("door_frame", "world", Pose6D.identity())
    seq = ActionSequence("x", "door_frame", (stance(), hand(frame="door_lever"), stance()))
    issues = validate_against_frames(seq, tree)
    assert len(issues) == 1
    assert issues[0].action_index == 1
    assert issues[0].frame == "door_lever"
    tree.add_frame("door_lever", "door_frame", Pose6D.identity())
    assert validate_against_frames(seq, tree) == []


@settings(max_examples=100, deadline=None)
@given(perm=st.permutations(range(5)))
def test_frame_issues_stable_under_reorder(perm):
    tree = FrameTree()
    tree.add_frame("present", "world", Pose6D.identity())
    actions = [hand(f"a{i}", frame="present" if i % 2 == 0 else f"missing{i}") for i in range(5)]
    base = ActionSequence("x", "present", tuple(actions))
    shuffled = ActionSequence("x", "present", tuple(actions[i] for i in perm))
    multiset = sorted(i.frame for i in validate_against_frames(base, tree))
    assert sorted(i.frame for i in validate_against_frames(shuffled, tree)) == multiset
