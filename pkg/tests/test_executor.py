import numpy as np
import pytest

from behavior_forge.actions import (
    ActionSequence,
    HandConfiguration,
    HandPose,
    StancePose,
)
from behavior_forge.assets import asset_path
from behavior_forge.executor import (
    AUTOMATIC,
    AlreadyExecuting,
    EditConflict,
    EXECUTING,
    Executor,
    FAILED,
    InsertEdit,
    MANUAL,
    PENDING,
    RemoveEdit,
    SequenceExhausted,
    SUCCEEDED,
    UpdateEdit,
    ValidationFailed,
)
from behavior_forge.geometry import FrameTree, Pose6D
from behavior_forge.kinematics import load_model
from behavior_forge.world import SIM_DT, IkUnreachable, SimWorld, load_scene


@pytest.fixture(scope="module")
def model():
    return load_model(asset_path("nadia_sim.json"))


def hand_action(desc="reach", x=0.35, y=-0.2, z=1.0, duration=0.5):
    return HandPose(desc, "world", "right", Pose6D.from_xyz(x, y, z), duration)


def grip_action(desc="close", state="close"):
    return HandConfiguration(desc, "world", "right", state)


def make_executor(model, actions):
    world = SimWorld(load_scene({"name": "empty", "objects": []}), model, FrameTree())
    return Executor(world, ActionSequence("test", "world", tuple(actions)))


def run_ticks(ex, n):
    for _ in range(n):
        ex.world.step(SIM_DT)
        ex.tick()


def test_manual_runs_exactly_one_action(model):
    ex = make_executor(model, [grip_action("a"), grip_action("b")])
    ex.execute_selected()
    assert ex.statuses == [EXECUTING, PENDING]
    run_ticks(ex, 110)
    assert ex.statuses == [SUCCEEDED, PENDING]
    assert ex.selected == 1
    assert ex.mode == MANUAL
    run_ticks(ex, 200)  # nothing else runs without a command
    assert ex.statuses == [SUCCEEDED, PENDING]


def test_execute_on_empty_sequence(model):
    ex = make_executor(model, [])
    with pytest.raises(SequenceExhausted):
        ex.execute_selected()


def test_execute_while_executing(model):
    ex = make_executor(model, [grip_action("a"), grip_action("b")])
    ex.execute_selected()
    before = ex.state_snapshot()
    with pytest.raises(AlreadyExecuting):
        ex.execute_selected()
    assert ex.state_snapshot() == before


def test_validation_gate(model):
    ex = make_executor(model, [HandPose("reach", "ghost_frame", "right",
                                        Pose6D.from_xyz(0.3, -0.2, 1.0), 1.0)])
    with pytest.raises(ValidationFailed):
        ex.execute_selected()
    assert ex.statuses == [PENDING]


def test_automatic_runs_all(model):
    ex = make_executor(model, [grip_action(f"a{i}", "close" if i % 2 == 0 else "open")
                               for i in range(4)])
    ex.set_automatic(True)
    run_ticks(ex, 500)
    assert ex.statuses == [SUCCEEDED] * 4
    assert ex.finished()
    assert [e.status for e in ex.events].count(SUCCEEDED) == 4


def test_toggle_off_mid_action_finishes_current(model):
    ex = make_executor(model, [grip_action("a"), grip_action("b")])
    ex.set_automatic(True)
    run_ticks(ex, 30)
    assert ex.statuses[0] == EXECUTING
    ex.set_automatic(False)
    run_ticks(ex, 200)
    assert ex.statuses == [SUCCEEDED, PENDING]


def test_toggle_on_when_exhausted_is_noop(model):
    ex = make_executor(model, [grip_action("a")])
    ex.set_automatic(True)
    run_ticks(ex, 200)
    assert ex.finished()
    ex.set_automatic(True)
    run_ticks(ex, 50)
    assert ex.statuses == [SUCCEEDED]


def test_dispatch_failure_halts_automatic(model):
    ex = make_executor(model, [hand_action("unreachable", x=9.0), grip_action("b")])
    ex.set_automatic(True)
    run_ticks(ex, 5)
    assert ex.statuses == [FAILED, PENDING]
    assert ex.mode == MANUAL
    assert ex.selected == 0  # cursor stays on the failed action
    run_ticks(ex, 100)
    assert ex.statuses == [FAILED, PENDING]


def test_timeout_marks_failed(model, monkeypatch):
    import behavior_forge.executor as exmod

    monkeypatch.setattr(exmod, "HAND_POSITION_TOL", -1.0)  # impossible tolerance
    ex = make_executor(model, [hand_action("a", duration=0.3), grip_action("b")])
    ex.set_automatic(True)
    run_ticks(ex, 100)  # 1.0 s >> 1.5 x 0.3 s
    assert ex.statuses[0] == FAILED
    assert ex.mode == MANUAL
    assert any(e.error == "timeout" for e in ex.events)


def test_abort(model):
    ex = make_executor(model, [hand_action("a", duration=5.0)])
    ex.execute_selected()
    run_ticks(ex, 10)
    ex.abort()
    assert ex.statuses == [FAILED]
    assert ex.mode == MANUAL
    assert ex.world.tasks == []


def test_edit_insert_after_cursor_during_execution(model):
    ex = make_executor(model, [grip_action("a"), grip_action("b")])
    ex.execute_selected()
    ex.apply_edit(InsertEdit(1, grip_action("c")))
    assert ex.sequence.descriptions() == ["a", "c", "b"]
    assert ex.statuses == [EXECUTING, PENDING, PENDING]


def test_edit_executing_action_rejected(model):
    ex = make_executor(model, [grip_action("a")])
    ex.execute_selected()
    with pytest.raises(EditConflict):
        ex.apply_edit(UpdateEdit(0, grip_action("a2")))
    with pytest.raises(EditConflict):
        ex.apply_edit(RemoveEdit(0))
    with pytest.raises(EditConflict):
        ex.apply_edit(InsertEdit(0, grip_action("x")))


def test_remove_completed_action_reindexes(model):
    ex = make_executor(model, [grip_action("a"), grip_action("b"), grip_action("c")])
    ex.execute_selected()
    run_ticks(ex, 110)
    assert ex.selected == 1
    ex.apply_edit(RemoveEdit(0))
    assert ex.selected == 0
    assert ex.sequence.descriptions() == ["b", "c"]
    assert ex.statuses == [PENDING, PENDING]
    ex.execute_selected()
    run_ticks(ex, 110)
    assert ex.statuses == [SUCCEEDED, PENDING]


def test_update_pending_action(model):
    ex = make_executor(model, [grip_action("a"), grip_action("b")])
    ex.apply_edit(UpdateEdit(1, grip_action("b2", "open")))
    assert ex.sequence[1].description == "b2"
    assert ex.statuses == [PENDING, PENDING]


def invariant_holds(ex):
    statuses = ex.statuses
    assert statuses.count(EXECUTING) <= 1
    sel = ex.selected
    assert all(s in (SUCCEEDED, FAILED) for s in statuses[:sel])
    assert all(s == PENDING for s in statuses[sel + 1:])
    if ex._active is not None:
        assert ex._active.index == sel
        assert statuses[sel] == EXECUTING


def test_random_interleavings_keep_frontier_invariant(model):
    rng = np.random.default_rng(77)
    for _ in range(150):
        ex = make_executor(model, [grip_action(f"a{i}") for i in range(rng.integers(0, 5))])
        for _ in range(40):
            op = rng.integers(0, 6)
            try:
                if op == 0:
                    run_ticks(ex, int(rng.integers(1, 40)))
                elif op == 1:
                    ex.execute_selected()
                elif op == 2:
                    ex.set_automatic(bool(rng.integers(0, 2)))
                elif op == 3:
                    ex.apply_edit(InsertEdit(int(rng.integers(0, len(ex.sequence) + 1)),
                                             grip_action("ins")))
                elif op == 4 and len(ex.sequence):
                    ex.apply_edit(RemoveEdit(int(rng.integers(0, len(ex.sequence)))))
                elif op == 5 and len(ex.sequence):
                    ex.apply_edit(UpdateEdit(int(rng.integers(0, len(ex.sequence))),
                                             grip_action("upd")))
            except (AlreadyExecuting, SequenceExhausted, EditConflict, IndexError):
                pass
            invariant_holds(ex)
