import asyncio
import json

import numpy as np
import pytest

from behavior_forge.actions import load_behavior, sequence_to_obj
from behavior_forge.assets import asset_path
from behavior_forge.geometry import Pose6D
from behavior_forge.protocol import (
    CommandProcessor,
    Envelope,
    ProtocolError,
    frame_message,
    parse_frame,
    replay_command_log,
)
from behavior_forge.server import SessionServer
from behavior_forge.session import Session, SessionConfig


def make_session(scene="table_scene.json", seed=5, behavior=None):
    s = Session(SessionConfig(scene=asset_path(scene), seed=seed))
    s.register_task_frames()
    if behavior:
        s.load_behavior(asset_path(behavior))
    return s


def cmd(type_, seq, payload=None, t=0.0):
    return Envelope(type_, seq, t, payload or {})


def test_frame_round_trip():
    env = Envelope("set_automatic", 3, 1.25, {"on": True})
    assert parse_frame(frame_message(env)) == env


def test_parse_rejects_garbage():
    with pytest.raises(ProtocolError):
        parse_frame(b'{"type": "x", ')
    with pytest.raises(ProtocolError):
        parse_frame(b"[1,2,3]")
    with pytest.raises(ProtocolError):
        parse_frame(b'{"type": "x", "seq": "nope", "timestamp": 0}')
    with pytest.raises(ProtocolError):
        parse_frame(b"\xff\xfe")


def test_truncated_frame_gets_error_reply_and_no_state_change():
    s = make_session()
    proc = CommandProcessor(s)
    before = s.executor.state_snapshot()
    reply = proc.handle_frame(b'{"type": "set_automatic", "seq"')
    assert reply.type == "protocol_error"
    assert reply.payload["reason"] == "parse"
    assert s.executor.state_snapshot() == before


def test_seq_regression_rejected():
    s = make_session()
    proc = CommandProcessor(s)
    ok = proc.handle_command(cmd("set_automatic", 5, {"on": False}))
    assert ok.type == "ack"
    dup = proc.handle_command(cmd("set_automatic", 5, {"on": False}))
    assert dup.type == "protocol_error"
    assert dup.payload["reason"] == "seq_regression"
    older = proc.handle_command(cmd("set_automatic", 2, {"on": False}))
    assert older.payload["reason"] == "seq_regression"


def test_unknown_type_keeps_connection_usable():
    s = make_session()
    proc = CommandProcessor(s)
    bad = proc.handle_command(cmd("do_a_backflip", 1))
    assert bad.type == "protocol_error"
    assert bad.payload["reason"] == "unknown_type"
    good = proc.handle_command(cmd("set_automatic", 2, {"on": False}))
    assert good.type == "ack"


def test_command_ack_bijection():
    s = make_session(behavior="pick_place_can.behavior.json")
    proc = CommandProcessor(s)
    replies = []
    for i, (t, payload) in enumerate([
        ("set_automatic", {"on": False}),
        ("request_stance_preview", {"frame": "table_frame",
                                    "left_foot": Pose6D.from_xy_yaw(-1, 0.12, 0).to_json(),
                                    "right_foot": Pose6D.from_xy_yaw(-1, -0.13, 0).to_json()}),
        ("execute_manual", {}),
        ("set_automatic", {"on": True}),
    ], start=1):
        replies.append(proc.handle_command(cmd(t, i, payload)))
    assert [r.type for r in replies] == ["ack"] * 4
    assert [r.payload["ack_seq"] for r in replies] == [1, 2, 3, 4]
    # outbound seq strictly increasing
    seqs = [r.seq for r in replies]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_ik_preview_returns_ghost_solution():
    s = make_session()
    s.world.teleport(Pose6D.from_xy_yaw(0.9, -0.1, 0.0, s.world.pelvis_height))
    proc = CommandProcessor(s)
    goal = Pose6D.from_xyz(-0.15, 0.0, 0.10)
    reply = proc.handle_command(cmd("request_ik_preview", 1, {
        "side": "right", "frame": "can_of_soup", "goal": goal.to_json()}))
    assert reply.type == "ack"
    sol = reply.payload["result"]["solution"]
    assert sol["converged"] is True
    assert sol["position_error"] < 1e-3
    assert set(sol["configuration"]) == {j.name for j in s.model.chain_joints("right_arm")}


def test_ik_preview_unreachable_is_result_not_error():
    s = make_session()
    proc = CommandProcessor(s)
    reply = proc.handle_command(cmd("request_ik_preview", 1, {
        "side": "right", "frame": "world", "goal": Pose6D.from_xyz(10, 0, 1).to_json()}))
    assert reply.type == "ack"
    assert reply.payload["result"]["solution"]["converged"] is False


def test_edit_on_executing_action_acks_with_error():
    s = make_session(behavior="pick_place_can.behavior.json")
    proc = CommandProcessor(s)
    assert proc.handle_command(cmd("execute_manual", 1)).payload.get("error") is None
    obj = sequence_to_obj(s.executor.sequence)["actions"][0]
    reply = proc.handle_command(cmd("sequence_edit", 2, {"op": "update", "index": 0,
                                                         "action": obj}))
    assert reply.type == "ack"
    assert reply.payload["error"]["kind"] == "EditConflict"


def test_sequence_replace_and_validation():
    s = make_session()
    proc = CommandProcessor(s)
    seq_obj = sequence_to_obj(load_behavior(asset_path("pick_place_can.behavior.json")))
    reply = proc.handle_command(cmd("sequence_replace", 1, {"sequence": seq_obj}))
    assert reply.payload["result"]["length"] == 10
    bad = dict(seq_obj)
    bad["format_version"] = "99"
    reply = proc.handle_command(cmd("sequence_replace", 2, {"sequence": bad}))
    assert reply.payload["error"]["kind"] == "SchemaError"


def test_load_behavior_reports_frame_issues():
    s = make_session("table_scene.json")
    proc = CommandProcessor(s)
    reply = proc.handle_command(cmd("load_behavior", 1, {"behavior": str(asset_path("push_door.behavior.json"))}))
    issues = reply.payload["result"]["issues"]
    assert issues and "door_frame" in issues[0]


def test_hello_snapshot_contents():
    s = make_session(behavior="pick_place_can.behavior.json")
    proc = CommandProcessor(s)
    hello = proc.hello()
    assert hello.type == "hello"
    assert hello.payload["scene"] == "table_scene"
    assert len(hello.payload["sequence"]["actions"]) == 10
    assert "can_of_soup" in hello.payload["frames"]
    assert "pelvis" in hello.payload["world"]


def test_every_transition_published_exactly_once():
    s = make_session(behavior="pick_place_can.behavior.json", seed=11)
    server = SessionServer(s, realtime_factor=0.0)

    sent = []

    class FakeConn:
        def enqueue(self, type_, payload):
            sent.append((type_, payload))

    server.connections.add(FakeConn())
    proc = CommandProcessor(s)
    proc.handle_command(cmd("set_automatic", 1, {"on": True}))
    for _ in range(1000):
        s.tick()
        server.publish_for_tick(s._tick_count)
    statuses = [p for t, p in sent if t == "action_status"]
    assert [e.to_json() for e in s.executor.events] == statuses


def test_publish_rates_over_one_second():
    s = make_session(seed=2)
    server = SessionServer(s)
    counts = {}

    class FakeConn:
        def enqueue(self, type_, payload):
            counts[type_] = counts.get(type_, 0) + 1

    server.connections.add(FakeConn())
    for _ in range(100):   # 1.0 s of sim at the 100 Hz tick
        s.tick()
        server.publish_for_tick(s._tick_count)
    assert abs(counts["robot_state"] - 50) <= 1
    assert counts["detections"] <= 10 and counts["detections"] >= 9
    assert counts["point_cloud"] <= 5 and counts["point_cloud"] >= 4


def test_slow_client_drops_clouds_before_statuses():
    from behavior_forge.server import _Connection, QUEUE_LIMIT

    class DummyWS:
        async def send(self, data):
            pass

    s = make_session()
    conn = _Connection(DummyWS(), s)
    for i in range(QUEUE_LIMIT):
        conn.enqueue("point_cloud" if i % 2 == 0 else "action_status", {"i": i})
    for i in range(40):
        conn.enqueue("action_status", {"extra": i})
    kinds = [t for t, _ in conn.queue]
    assert kinds.count("action_status") == QUEUE_LIMIT // 2 + 40
    assert len(conn.queue) == QUEUE_LIMIT


def test_replay_reproduces_action_status_stream():
    s1 = make_session(behavior="pick_place_can.behavior.json", seed=31)
    proc = CommandProcessor(s1)
    proc.handle_command(cmd("execute_manual", 1))
    for _ in range(1500):
        s1.tick()
    proc.handle_command(cmd("set_automatic", 2, {"on": True}))
    for _ in range(6000):
        s1.tick()
    original = [e.to_json() for e in s1.executor.events]
    assert any(e["status"] == "succeeded" for e in original)

    s2 = make_session(behavior="pick_place_can.behavior.json", seed=31)
    replayed = replay_command_log(s1.command_log, s2, extra_ticks=6000)
    assert replayed == original


def test_malformed_fuzz_never_crashes():
    s = make_session()
    proc = CommandProcessor(s)
    rng = np.random.default_rng(1234)
    samples = [
        b"", b"{}", b"[]", b"null", b'{"type": 1, "seq": 1, "timestamp": 0}',
        b'{"type": "execute_manual", "seq": true, "timestamp": 0}',
        b'{"type": "sequence_edit", "seq": 1, "timestamp": 0, "payload": {"op": "explode"}}',
        b'{"type": "request_ik_preview", "seq": 2, "timestamp": 0, "payload": {"side": "up"}}',
        b'{"type": "request_ik_preview", "seq": 3, "timestamp": 0, '
        b'"payload": {"side": "left", "frame": "nope", "goal": {"position": [0]}}}',
    ]
    for raw in samples:
        reply = proc.handle_frame(raw)
        assert reply.type in ("ack", "protocol_error")
    base = bytearray(frame_message(cmd("set_automatic", 100, {"on": True})))
    for k in range(300):
        data = bytearray(base)
        for _ in range(rng.integers(1, 6)):
            pos = rng.integers(0, len(data))
            data[pos] = rng.integers(0, 256)
        reply = proc.handle_frame(bytes(data))
        assert reply.type in ("ack", "protocol_error")
    # the session survives and still answers correctly
    final = proc.handle_command(cmd("set_automatic", 10_000, {"on": False}))
    assert final.type == "ack"


@pytest.mark.parametrize("port", [8911])
def test_real_websocket_round_trip(port):
    import websockets

    async def scenario():
        s = make_session(behavior="pick_place_can.behavior.json", seed=1)
        s.world.teleport(Pose6D.from_xy_yaw(0.9, -0.1, 0.0, s.world.pelvis_height))
        server = SessionServer(s, realtime_factor=0.0)
        async with websockets.serve(server.handle_connection, "localhost", port):
            async with websockets.connect(f"ws://localhost:{port}") as client:
                hello = parse_frame(await client.recv())
                assert hello.type == "hello"
                await client.send(frame_message(
                    cmd("request_ik_preview", 1, {
                        "side": "right", "frame": "can_of_soup",
                        "goal": Pose6D.from_xyz(-0.15, 0, 0.1).to_json()})).decode())
                ack = parse_frame(await client.recv())
                assert ack.type == "ack"
                assert ack.payload["ack_seq"] == 1
                assert ack.payload["result"]["solution"]["converged"]

    asyncio.run(asyncio.wait_for(scenario(), timeout=30))
