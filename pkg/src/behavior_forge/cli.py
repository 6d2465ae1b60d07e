"""Headless entry point: run a behavior against a scene and emit a timing
log, or serve a live session to the operator UI.

Exit codes: 0 success, 2 validation error, 3 an action failed, 4 the
scenario's success predicate failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from behavior_forge import actions as actions_mod
from behavior_forge.actions import load_behavior, validate_against_frames
from behavior_forge.assets import asset_path
from behavior_forge.kinematics import ParseError as ModelParseError
from behavior_forge.kinematics import ValidationError as ModelValidationError
from behavior_forge.session import Session, SessionConfig
from behavior_forge.world import SIM_DT, SceneError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ACTION_FAILED = 3
EXIT_PREDICATE_FAILED = 4


@dataclass
class TimingLog:
    behavior: str
    scene: str
    seed: int
    outcome: str = "incomplete"
    rows: list[tuple[float, str]] = field(default_factory=list)

    def add(self, sim_time: float, description: str):
        self.rows.append((sim_time, description))

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        buf.write(f"# behavior: {self.behavior}\n")
        buf.write(f"# scene: {self.scene}\n")
        buf.write(f"# seed: {self.seed}\n")
        buf.write(f"# outcome: {self.outcome}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time_s", "description"])
        for t, desc in self.rows:
            writer.writerow([f"{t:.3f}", desc])
        return buf.getvalue().encode("utf-8")

    def render_table(self) -> str:
        """Minutes:seconds table in the shape of the execution reports."""
        lines = [f"{'Time (m:s)':>10}  Action completed"]
        for t, desc in self.rows:
            lines.append(f"{int(t // 60):>7d}:{t % 60:04.1f}  {desc}")
        return "\n".join(lines)


def write_timing_log(log: TimingLog, path):
    try:
        Path(path).write_bytes(log.to_csv_bytes())
    except OSError as e:
        raise OSError(f"cannot write timing log {path}: {e}") from e


def _resolve_input(value: str) -> Path:
    """Accept a filesystem path or the name of a bundled asset."""
    p = Path(value)
    if p.exists():
        return p
    bundled = asset_path(value)
    if bundled.exists():
        return bundled
    raise FileNotFoundError(value)


def run_scenario(scene_file, behavior_file, *, auto: bool = True, seed: int = 0,
                 realtime_factor: float = 0.0, log_path=None, record_path=None,
                 max_sim_time: float = 600.0, out=None) -> int:
    """Load scene and behavior, register task frames, execute, and report."""
    out = out if out is not None else sys.stdout
    try:
        scene_path = _resolve_input(scene_file)
        behavior_path = _resolve_input(behavior_file)
        session = Session(SessionConfig(scene=scene_path, seed=seed))
        behavior = load_behavior(behavior_path)
    except (FileNotFoundError, SceneError, ModelParseError, ModelValidationError,
            actions_mod.ParseError, actions_mod.SchemaError, actions_mod.UnknownKind) as e:
        print(f"validation error: {e}", file=out)
        return EXIT_VALIDATION

    session.register_task_frames()
    issues = validate_against_frames(behavior, session.tree)
    if issues:
        for issue in issues:
            print(f"validation error: {issue}", file=out)
        return EXIT_VALIDATION

    session.executor.replace_sequence(behavior)
    session.enable_collision_monitor()
    if record_path:
        session.enable_recording()

    log = TimingLog(behavior.name, session.scene.name, seed)
    if auto:
        session.executor.set_automatic(True)

    wall_start = time.monotonic()
    ex = session.executor
    while session.world.sim_time < max_sim_time:
        session.tick()
        if realtime_factor > 0:
            target_wall = session.world.sim_time / realtime_factor
            lag = target_wall - (time.monotonic() - wall_start)
            if lag > 0:
                time.sleep(min(lag, 0.1))
        if ex.finished():
            break
        if ex.executing_index is None and ex.mode == "manual":
            break  # a failure halted automatic mode, or nothing to do

    for rec in ex.completions:
        log.add(rec.sim_time, rec.description)

    failed = [i for i, s in enumerate(ex.statuses) if s == "failed"]
    all_ok = ex.finished() and all(s == "succeeded" for s in ex.statuses)
    predicate_ok, why = session.success_predicate()
    if session.scene.success.get("zero_collisions", session.scene.success.get("kind") == "door_traversal"):
        if session.collision_log:
            predicate_ok, why = False, f"{len(session.collision_log)} collision reports"

    if not all_ok:
        log.outcome = "action_failed"
    elif not predicate_ok:
        log.outcome = f"predicate_failed: {why}"
    else:
        log.outcome = "success"

    if record_path:
        with open(record_path, "wb") as f:
            for snap in session.snapshots:
                f.write(actions_mod.canonical_json_bytes(snap))
    if log_path:
        write_timing_log(log, log_path)

    print(log.render_table(), file=out)
    print(f"outcome: {log.outcome}", file=out)

    if not all_ok:
        for i in failed:
            err = next((e.error for e in ex.events if e.index == i and e.status == "failed"), "")
            print(f"action {i} failed: {behavior[i].description} ({err})", file=out)
        return EXIT_ACTION_FAILED
    if not predicate_ok:
        print(f"success predicate failed: {why}", file=out)
        return EXIT_PREDICATE_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="behavior-forge",
        description="Execute or serve frame-relative humanoid behaviors in simulation.")
    parser.add_argument("--scene", required=True, help="scene file or bundled scene name")
    parser.add_argument("--behavior", help="behavior file or bundled behavior name")
    parser.add_argument("--auto", action="store_true", help="run the sequence automatically")
    parser.add_argument("--serve", nargs="?", const=0, type=int, metavar="PORT",
                        help="serve the session over websocket "
                             "(default port 8765, or BEHAVIOR_FORGE_PORT)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--realtime-factor", type=float, default=0.0,
                        help="sim speed vs wall clock; 0 = as fast as possible")
    parser.add_argument("--log", metavar="CSV", help="write the timing log here")
    parser.add_argument("--record", metavar="JSONL", help="write snapshot log here")
    args = parser.parse_args(argv)

    if args.serve is not None:
        from behavior_forge.server import serve_session

        return serve_session(scene=args.scene, behavior=args.behavior, seed=args.seed,
                             port=args.serve, auto=args.auto,
                             realtime_factor=args.realtime_factor or 1.0)

    if not args.behavior:
        parser.error("--behavior is required unless --serve is given")
    return run_scenario(args.scene, args.behavior, auto=args.auto, seed=args.seed,
                        realtime_factor=args.realtime_factor,
                        log_path=args.log, record_path=args.record)


if __name__ == "__main__":
    sys.exit(main())
