#!/usr/bin/env python3
"""Stance goals in, footstep plans out.

A stance pose action gives the planner a goal pair of foot poses; the plan
walks there turn-walk-turn and finishes on the goal poses exactly. Short
moves shuffle directly, pure rotations turn in place.
"""

import math

import numpy as np

from behavior_forge import Pose6D, Stance, StepLimits, plan_to_stance, validate_plan


def stance(x, y, yaw, width=0.25):
    lat = (-math.sin(yaw), math.cos(yaw))
    return Stance(Pose6D.from_xy_yaw(x + lat[0] * width / 2, y + lat[1] * width / 2, yaw),
                  Pose6D.from_xy_yaw(x - lat[0] * width / 2, y - lat[1] * width / 2, yaw))


def show(title, plan):
    print(f"\n{title}: {len(plan)} steps, {plan.duration():.1f} s")
    for i, s in enumerate(plan.steps):
        x, y, _ = s.pose.position
        print(f"  {i:2d} {s.side:5s} ({x:+.2f}, {y:+.2f}) yaw {s.pose.yaw:+.2f}  [{s.phase}]")
    issues = validate_plan(plan)
    print("  valid" if not issues else f"  VIOLATIONS: {issues}")


here = stance(0, 0, 0)
limits = StepLimits()

show("two meters ahead", plan_to_stance(here, stance(2.0, 0, 0), limits))
show("turn in place 90 degrees", plan_to_stance(here, stance(0, 0, math.pi / 2), limits))
show("side step (short-move shuffle)", plan_to_stance(here, stance(0, 0.3, 0), limits))

# staggered goal: per-foot poses are honored verbatim as the final two steps
goal = Stance(Pose6D.from_xy_yaw(1.0, 0.2, 0.2), Pose6D.from_xy_yaw(0.85, -0.08, 0.2))
plan = plan_to_stance(here, goal, limits)
show("staggered stance goal", plan)
final = {s.side: s.pose for s in plan.steps[-2:]}
print("final steps equal the goal poses exactly:",
      final["left"].almost_equal(goal.left) and final["right"].almost_equal(goal.right))
