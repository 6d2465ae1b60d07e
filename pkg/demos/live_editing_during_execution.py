#!/usr/bin/env python3
"""Create, modify and execute at the same time.

Starts the pick-and-place behavior running automatically, then edits the
sequence mid-flight: appending an action while another executes is fine;
touching the executing action is refused. This is the "on the fly" loop the
whole system exists for.
"""

from behavior_forge import HandConfiguration, InsertEdit, Session, SessionConfig, UpdateEdit
from behavior_forge.assets import asset_path
from behavior_forge.executor import EditConflict

session = Session(SessionConfig(scene=asset_path("table_scene.json"), seed=7,
                                behavior=asset_path("pick_place_can.behavior.json")))
session.register_task_frames()
ex = session.executor
ex.set_automatic(True)

appended = False
while not ex.finished():
    session.tick()
    if ex.executing_index == 2 and not appended:
        # the robot is mid-reach; append a flourish at the end of the script
        ex.apply_edit(InsertEdit(len(ex.sequence),
                                 HandConfiguration("Open hand to wave goodbye",
                                                   "table_frame", "right", "open")))
        appended = True
        print(f"t={session.world.sim_time:5.1f}s  appended an action while "
              f"action {ex.executing_index} executes ({len(ex.sequence)} actions now)")
        try:
            ex.apply_edit(UpdateEdit(ex.executing_index,
                                     HandConfiguration("nope", "table_frame", "right", "open")))
        except EditConflict as e:
            print(f"t={session.world.sim_time:5.1f}s  editing the executing action is refused: {e}")
    if session.world.sim_time > 180:
        break

print("\ncompletion log:")
for rec in ex.completions:
    print(f"  {rec.sim_time:6.2f}s  {rec.description}")
print("statuses:", ex.statuses)
ok, why = session.success_predicate()
print(f"scenario outcome: {why}")
