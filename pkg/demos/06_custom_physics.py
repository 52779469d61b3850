"""Use the rigid-body engine directly, outside the craft pipeline.

Builds a hinged pendulum from scratch and checks the period against the
small-angle formula.

Run:  python3 demos/06_custom_physics.py
"""

import numpy as np

from craftkit.geometry import Solid
from craftkit.physics import RevoluteJoint, RigidBody, SimConfig, World

cfg = SimConfig()
world = World(cfg)
world.ground_enabled = False

pivot = RigidBody.from_parts(
    "pivot", [("p", Solid.box((0.05, 0.05, 0.05)),
               np.array([0.0, 0.0, 2.0]))], 1.0)
pivot.kinematic = True

length = 1.0
bob = RigidBody.from_parts(
    "bob", [("b", Solid.box((0.1, 0.1, 0.1)),
             np.array([0.05, 0.0, 2.0 - length]))], 10.0)
# start deflected by a small angle
theta0 = 0.05
bob.x = np.array([length * np.sin(theta0), 0.0,
                  2.0 - length * np.cos(theta0)])

world.bodies += [pivot, bob]
anchor = np.array([0.0, 0.0, 2.0])
axis = np.array([0.0, 1.0, 0.0])
world.joints.append(RevoluteJoint(
    body_a=pivot, body_b=bob,
    anchor_local_a=anchor - pivot.x, anchor_local_b=anchor - bob.x,
    axis_local_a=axis, axis_local_b=axis))

# find the first two zero crossings of x to estimate the half period
crossings = []
prev = bob.x[0]
for _ in range(int(round(4.0 / cfg.timestep))):
    world.step()
    if prev > 0 >= bob.x[0] or prev < 0 <= bob.x[0]:
        crossings.append(world.time)
    prev = bob.x[0]
    if len(crossings) >= 3:
        break

period = 2.0 * (crossings[2] - crossings[0]) / 2.0 if len(crossings) >= 3 \
    else float("nan")
expected = 2.0 * np.pi * np.sqrt(length / cfg.gravity)
print(f"measured period:  {period:.3f} s")
print(f"small-angle rule: {expected:.3f} s")
