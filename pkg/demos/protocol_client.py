#!/usr/bin/env python3
"""Minimal websocket client for a served session.

Start the engine first:

    behavior-forge --scene door_scene.json --behavior push_door.behavior.json --serve

then run this script. It reads the hello snapshot, requests an IK ghost
preview for the lever, starts automatic execution, and tails action_status
events until the behavior finishes.
"""

import asyncio
import json
import os

from behavior_forge.geometry import Pose6D
from behavior_forge.protocol import Envelope, frame_message, parse_frame

PORT = int(os.environ.get("BEHAVIOR_FORGE_PORT", 8765))


async def main():
    import websockets

    seq = 0

    def command(type_, payload):
        nonlocal seq
        seq += 1
        return frame_message(Envelope(type_, seq, 0.0, payload)).decode()

    async with websockets.connect(f"ws://localhost:{PORT}") as ws:
        hello = parse_frame(await ws.recv())
        print(f"connected: scene={hello.payload['scene']}, "
              f"{len(hello.payload['sequence']['actions'])} actions, "
              f"frames: {sorted(hello.payload['frames'])}")

        await ws.send(command("request_ik_preview", {
            "side": "right", "frame": "door_lever",
            "goal": Pose6D.from_xyz(-0.14, 0.0, 0.05).to_json()}))
        await ws.send(command("set_automatic", {"on": True}))

        succeeded = 0
        while True:
            env = parse_frame(await ws.recv())
            if env.type == "ack" and "solution" in env.payload.get("result", {}):
                sol = env.payload["result"]["solution"]
                print(f"ghost preview: converged={sol['converged']} "
                      f"({sol['position_error'] * 1000:.1f} mm)")
            elif env.type == "action_status":
                p = env.payload
                print(f"[{p['sim_time']:7.2f}s] action {p['index']:2d} "
                      f"{p['status']:9s} {p['description']}")
                if p["status"] == "succeeded":
                    succeeded += 1
                if p["status"] == "failed":
                    break
                if succeeded and p["index"] == len(hello.payload["sequence"]["actions"]) - 1 \
                        and p["status"] == "succeeded":
                    break
        print("done")


if __name__ == "__main__":
    asyncio.run(main())
