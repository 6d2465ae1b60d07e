#!/usr/bin/env python3
"""Forward kinematics, DLS inverse kinematics, and the reachability check.

This is the math behind the ghost arm preview: as the operator drags a hand
goal, the engine solves IK from the robot's current configuration and the UI
renders the returned joint angles translucently; a non-converged solution is
the reachability warning.
"""

import numpy as np

from behavior_forge import Pose6D, forward_kinematics, load_model, solve_ik
from behavior_forge.assets import asset_path

model = load_model(asset_path("nadia_sim.json"))
home = model.named_configuration("home")

hand = forward_kinematics(model, home, "right_arm")
print("home right hand (chest frame):", np.round(hand.position, 3))
print("arm reach:", model.reach("right_arm"), "m")

# a comfortable goal in front of the chest
goal = Pose6D.from_axis_angle((0, 0, 1), np.pi / 2, (0.35, -0.25, -0.1))
sol = solve_ik(model, "right_arm", goal, home)
print(f"\nreachable goal: converged={sol.converged} in {sol.iterations} iterations, "
      f"position error {sol.position_error * 1000:.2f} mm")
for name, angle in sol.configuration.values.items():
    if name.startswith("r_"):
        print(f"  {name:18s} {angle:+.3f} rad")

# verify the solution against forward kinematics
achieved = forward_kinematics(model, sol.configuration, "right_arm")
print("FK(solution) matches goal to",
      f"{np.linalg.norm(achieved.position - goal.position) * 1000:.2f} mm")

# out of reach: the solver reports rather than raises, and the best-effort
# pose sits on the reach boundary (the UI tints this ghost as a warning)
far = Pose6D.from_axis_angle((0, 0, 1), np.pi / 2, (2.0, -0.22, 0.15))
sol = solve_ik(model, "right_arm", far, home)
dist = np.linalg.norm(sol.achieved_pose.position - model.chain_root_position("right_arm"))
print(f"\nunreachable goal: converged={sol.converged}, "
      f"arm extended to {dist:.3f} m of {model.reach('right_arm'):.2f} m reach")
