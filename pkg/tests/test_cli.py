import io
import json
from pathlib import Path

import pytest

from behavior_forge.actions import ActionSequence, save_behavior
from behavior_forge.assets import asset_path
from behavior_forge.cli import (
    EXIT_ACTION_FAILED,
    EXIT_OK,
    EXIT_PREDICATE_FAILED,
    EXIT_VALIDATION,
    TimingLog,
    main,
    run_scenario,
    write_timing_log,
)


def test_missing_files_exit_validation(tmp_path):
    out = io.StringIO()
    assert run_scenario("no_such_scene.json", "push_door.behavior.json", out=out) == EXIT_VALIDATION
    assert run_scenario("door_scene.json", str(tmp_path / "nope.json"), out=out) == EXIT_VALIDATION


def test_behavior_in_wrong_scene_exits_validation():
    out = io.StringIO()
    rc = run_scenario("table_scene.json", "push_door.behavior.json", auto=True, seed=7, out=out)
    assert rc == EXIT_VALIDATION
    assert "door_frame" in out.getvalue()


def test_unparseable_behavior_exits_validation(tmp_path):
    bad = tmp_path / "bad.behavior.json"
    bad.write_text('{"format_version": "1", ')
    out = io.StringIO()
    assert run_scenario("door_scene.json", bad, out=out) == EXIT_VALIDATION


def test_empty_behavior_header_only_log(tmp_path):
    empty = tmp_path / "empty.behavior.json"
    save_behavior(ActionSequence("noop", "door_frame"), empty)
    log_path = tmp_path / "log.csv"
    out = io.StringIO()
    rc = run_scenario("door_scene.json", empty, auto=True, seed=1,
                      log_path=log_path, out=out)
    assert rc == EXIT_PREDICATE_FAILED  # nothing opened the door
    lines = log_path.read_text().splitlines()
    assert lines[0].startswith("# behavior: noop")
    assert lines[4] == "time_s,description"
    assert len(lines) == 5


def test_action_failure_exit_code(tmp_path):
    from behavior_forge.actions import HandPose
    from behavior_forge.geometry import Pose6D

    unreachable = tmp_path / "far.behavior.json"
    save_behavior(ActionSequence("far", "door_frame", (
        HandPose("reach the moon", "door_frame", "right", Pose6D.from_xyz(0, 0, 30.0), 1.0),)),
        unreachable)
    out = io.StringIO()
    rc = run_scenario("door_scene.json", unreachable, auto=True, seed=1, out=out)
    assert rc == EXIT_ACTION_FAILED
    assert "reach the moon" in out.getvalue()


def test_timing_log_bytes_stable(tmp_path):
    log = TimingLog("b", "s", 7, "success", [(1.23, "step one"), (4.56, "step, two")])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_timing_log(log, p1)
    write_timing_log(log, p2)
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text()
    assert '"step, two"' in text  # csv quoting for commas


def test_main_arg_validation():
    with pytest.raises(SystemExit):
        main(["--scene", "door_scene.json"])  # --behavior required without --serve


def test_main_runs_scenario(tmp_path, capsys):
    rc = main(["--scene", "table_scene.json", "--behavior", "pick_place_can.behavior.json",
               "--auto", "--seed", "7", "--log", str(tmp_path / "t.csv")])
    assert rc == EXIT_OK
    assert (tmp_path / "t.csv").exists()
    assert "outcome: success" in capsys.readouterr().out
