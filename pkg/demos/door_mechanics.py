#!/usr/bin/env python3
"""The articulated door: lever, latch, and pushed panel.

Drives the simulated hand along the lever arc and into the panel to show the
contact rules: the lever tracks a hand within 4 cm of its grip, the latch
frees past 30 degrees of lever, and the panel swings to follow a pushing
hand at a capped rate. Angles hold when contact stops; there is no closer.
"""

import math

import numpy as np

from behavior_forge import FrameTree, Pose6D, load_model, load_scene
from behavior_forge.assets import asset_path
from behavior_forge.world import SIM_DT, SimWorld

scene = load_scene(asset_path("door_scene.json"))
world = SimWorld(scene, load_model(asset_path("nadia_sim.json")), FrameTree(), seed=1)
door = world.door

print(f"initially: latch engaged={door.latch_engaged}, lever={door.lever_angle:.2f}, "
      f"hinge={door.hinge_angle:.2f}")

# push the panel while latched: it will not budge
hand = np.array([1.92, 0.0, 1.0])
for _ in range(100):
    hand = hand + np.array([0.001, 0, 0])
    world.hand_poses["right"] = Pose6D(hand)
    world.update_door_contact(SIM_DT)
print(f"after shoving a latched door: hinge={door.hinge_angle:.2f} (held)")

# turn the lever: follow the grip arc downward past the release threshold
mount = np.array([2.0 - 0.035, -0.35, 0.95])
for phi in np.linspace(0.0, 0.7, 60):
    grip = mount + np.array([0.0, 0.12 * math.cos(phi), -0.12 * math.sin(phi)])
    world.hand_poses["right"] = Pose6D(grip)
    world.update_door_contact(SIM_DT)
    if not door.latch_engaged and phi < 0.6:
        print(f"latch released at lever angle {door.lever_angle:.2f} rad")
print(f"after the turn: lever={door.lever_angle:.2f}, latch engaged={door.latch_engaged}")

# now push through: the panel tracks the hand sweeping toward the hinge side
pos = world.hand_poses["right"].position
for target in (np.array([2.40, -0.25, 1.0]), np.array([2.30, 0.43, 1.0])):
    n = int(np.linalg.norm(target - pos) / 0.004)
    for k in range(1, n + 1):
        world.hand_poses["right"] = Pose6D(pos + (target - pos) * k / n)
        world.update_door_contact(SIM_DT)
    pos = target
    print(f"hand at ({pos[0]:.2f}, {pos[1]:.2f}): hinge={door.hinge_angle:.2f} rad")

print(f"\ndoor open past 1.48 rad: {door.hinge_angle >= 1.48}")
world.hand_poses["right"] = Pose6D(np.array([0.5, 0, 1.0]))
for _ in range(200):
    world.update_door_contact(SIM_DT)
print(f"hands away, angles hold: hinge={door.hinge_angle:.2f}")
