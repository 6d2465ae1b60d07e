#!/usr/bin/env python3
"""Pose algebra and the reference-frame tree.

Shows the core currency of the system: rigid transforms composed through a
named frame tree, re-expression of poses between frames, and the reparenting
trick that makes a grasped object follow the hand.
"""

import numpy as np

from behavior_forge import FrameTree, Pose6D, compose, invert

tree = FrameTree()
tree.add_frame("table", "world", Pose6D.from_xy_yaw(1.5, 0.0, 0.3))
tree.add_frame("can_of_soup", "table", Pose6D.from_xyz(-0.25, -0.15, 0.75))
tree.add_frame("right_hand", "world", Pose6D.from_xyz(0.9, -0.2, 1.0))

print("can in world:", np.round(tree.resolve_world("can_of_soup").position, 3))

# a pre-grasp pose authored 3 cm behind the can, expressed in the can frame
pre_grasp = Pose6D.from_xyz(-0.03, 0.0, 0.05)
in_world = tree.express_in(pre_grasp, "can_of_soup", "world")
print("pre-grasp in world:", np.round(in_world.position, 3))

# the same world pose, re-expressed relative to the hand
in_hand = tree.express_in(pre_grasp, "can_of_soup", "right_hand")
round_trip = compose(tree.resolve_world("right_hand"), in_hand)
print("round trip matches:", round_trip.almost_equal(in_world))

# grasping: reparent the can under the hand; its world pose must not jump
before = tree.resolve_world("can_of_soup")
tree.set_parent("can_of_soup", "right_hand")
after = tree.resolve_world("can_of_soup")
print("world pose preserved through reparent:", after.almost_equal(before))

# now the can rides with the hand
tree.set_transform("right_hand", Pose6D.from_xyz(0.9, 0.2, 1.1))
moved = tree.resolve_world("can_of_soup")
print("can follows the hand:", np.round(moved.position, 3))

# inverse sanity: compose(p, invert(p)) is the identity
p = Pose6D.from_axis_angle((0.2, 0.9, -0.1), 1.1, (0.5, -2.0, 0.3))
print("p * p^-1 == identity:", compose(p, invert(p)).almost_equal(Pose6D.identity()))
