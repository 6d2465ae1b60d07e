"""Asyncio websocket server exposing one live session to operator UIs.

Everything runs on one event loop, so command handling and the tick driver
are naturally serialized against the session. Each connection gets a hello
snapshot, then periodic robot_state / detections / point_cloud publications
and an action_status event for every executor transition. When a client
cannot keep up, stale point clouds are dropped first, then detections, then
robot states; action_status events and acks are never dropped.
"""

from __future__ import annotations

import asyncio
import os
from collections import deque

from behavior_forge.protocol import CommandProcessor, frame_message
from behavior_forge.session import Session, SessionConfig
from behavior_forge.world import SIM_DT

DEFAULT_PORT = 8765

ROBOT_STATE_EVERY = 2     # ticks: 50 Hz at the 100 Hz sim rate
DETECTIONS_EVERY = 10     # 10 Hz
POINT_CLOUD_EVERY = 20    # 5 Hz

_DROPPABLE = ("point_cloud", "detections", "robot_state")
QUEUE_LIMIT = 256


class _Connection:
    def __init__(self, websocket, session: Session):
        self.websocket = websocket
        self.processor = CommandProcessor(session)
        self.queue: deque = deque()
        self.wakeup = asyncio.Event()

    def enqueue(self, type_: str, payload: dict):
        if len(self.queue) >= QUEUE_LIMIT:
            self._drop_one()
        self.queue.append((type_, payload))
        self.wakeup.set()

    def _drop_one(self):
        for kind in _DROPPABLE:
            for i, (t, _) in enumerate(self.queue):
                if t == kind:
                    del self.queue[i]
                    return
        self.queue.popleft()  # all-critical queue: shed the oldest

    async def writer(self):
        while True:
            while not self.queue:
                self.wakeup.clear()
                await self.wakeup.wait()
            type_, payload = self.queue.popleft()
            env = self.processor.make_envelope(type_, payload)
            await self.websocket.send(frame_message(env).decode("utf-8"))


class SessionServer:
    """Owns the tick driver and the connection set for one session."""

    def __init__(self, session: Session, realtime_factor: float = 1.0,
                 robot_state_every: int = ROBOT_STATE_EVERY,
                 detections_every: int = DETECTIONS_EVERY,
                 point_cloud_every: int = POINT_CLOUD_EVERY):
        self.session = session
        self.realtime_factor = realtime_factor
        self.robot_state_every = robot_state_every
        self.detections_every = detections_every
        self.point_cloud_every = point_cloud_every
        self.connections: set[_Connection] = set()
        self._event_cursor = 0

    # -- publication ----------------------------------------------------------

    def _broadcast(self, type_: str, payload: dict):
        for conn in self.connections:
            conn.enqueue(type_, payload)

    def publish_for_tick(self, tick: int):
        """Emit the publications due at this tick index."""
        s = self.session
        for ev in s.executor.events[self._event_cursor:]:
            self._broadcast("action_status", ev.to_json())
        self._event_cursor = len(s.executor.events)

        if not self.connections:
            return
        if tick % self.robot_state_every == 0:
            self._broadcast("robot_state", {
                "world": s.world.snapshot(),
                "executor": s.executor.state_snapshot(),
            })
        if tick % self.detections_every == 0:
            detections, cloud = s.world.simulate_perception()
            self._broadcast("detections",
                            {"detections": [d.to_json() for d in detections]})
            if tick % self.point_cloud_every == 0:
                self._broadcast("point_cloud", {
                    "count": int(cloud.shape[0]),
                    "points": [round(float(v), 4) for v in cloud.reshape(-1)],
                })

    async def tick_driver(self):
        loop = asyncio.get_running_loop()
        start = loop.time()
        sim_start = self.session.world.sim_time
        while True:
            self.session.tick()
            self.publish_for_tick(self.session._tick_count)
            if self.realtime_factor > 0:
                target = start + (self.session.world.sim_time - sim_start) / self.realtime_factor
                delay = target - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    await asyncio.sleep(0)
            else:
                await asyncio.sleep(0)

    # -- connections ----------------------------------------------------------

    async def handle_connection(self, websocket):
        conn = _Connection(websocket, self.session)
        self.connections.add(conn)
        writer = asyncio.create_task(conn.writer())
        try:
            hello = conn.processor.hello()
            await websocket.send(frame_message(hello).decode("utf-8"))
            async for message in websocket:
                reply = conn.processor.handle_frame(message)
                await websocket.send(frame_message(reply).decode("utf-8"))
        except Exception:
            pass
        finally:
            writer.cancel()
            self.connections.discard(conn)

    async def run(self, host: str = "localhost", port: int = DEFAULT_PORT):
        import websockets

        driver = asyncio.create_task(self.tick_driver())
        try:
            async with websockets.serve(self.handle_connection, host, port):
                await asyncio.Future()
        finally:
            driver.cancel()


def resolve_port(port: int | None) -> int:
    if port:
        return int(port)
    return int(os.environ.get("BEHAVIOR_FORGE_PORT", DEFAULT_PORT))


def serve_session(scene, behavior=None, seed: int = 0, port: int | None = None,
                  auto: bool = False, realtime_factor: float = 1.0,
                  host: str = "localhost") -> int:
    """Blocking entry point used by the CLI's --serve flag."""
    from behavior_forge.cli import _resolve_input

    session = Session(SessionConfig(scene=_resolve_input(scene), seed=seed))
    session.register_task_frames()
    if behavior:
        session.load_behavior(behavior)
        if auto:
            session.executor.set_automatic(True)
    server = SessionServer(session, realtime_factor=realtime_factor)
    port = resolve_port(port)
    print(f"serving {session.scene.name} on ws://{host}:{port}")
    try:
        asyncio.run(server.run(host, port))
    except KeyboardInterrupt:
        pass
    return 0
