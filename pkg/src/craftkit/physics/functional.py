"""Functional simulation tests for built assemblies.

An assembly is compiled into rigid bodies by merging FIXED connections,
turning NON_FIXED insertions into revolute joints, and scaling geometry up
so the solver works at comfortable magnitudes.  Three scripted tests probe
whether the craft actually works: rolling under a push, holding a load, and
hammering a peg into a block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..assembler import Assembly, hole_center
from ..geometry import BOX, CYL, HoleRegion, Solid
from ..plan import CraftPlan
from .engine import Contact, RevoluteJoint, RigidBody, World

# failure reasons shared by every test
PART_SEPARATED = "PART_SEPARATED"
NEW_GROUND_CONTACT = "NEW_GROUND_CONTACT"
# rolling
INSUFFICIENT_ROTATION = "INSUFFICIENT_ROTATION"
INSUFFICIENT_DISTANCE = "INSUFFICIENT_DISTANCE"
VEERED = "VEERED"
# support
MOVED_UNDER_LOAD = "MOVED_UNDER_LOAD"
# hit
PEG_MISSED = "PEG_MISSED"
PEG_OUTSIDE_HOLE = "PEG_OUTSIDE_HOLE"

FAILURE_REASONS = (
    PART_SEPARATED, NEW_GROUND_CONTACT, INSUFFICIENT_ROTATION,
    INSUFFICIENT_DISTANCE, VEERED, MOVED_UNDER_LOAD, PEG_MISSED,
    PEG_OUTSIDE_HOLE,
)


@dataclass
class SimConfig:
    timestep: float = 1.0 / 500.0
    duration: float = 5.0
    scale: float = 10.0
    part_mass: float = 10.0
    friction: float = 0.5
    gravity: float = 9.81
    restitution: float = 0.0
    solver_iterations: int = 10
    position_iterations: int = 4
    baumgarte: float = 0.2
    slop: float = 1e-4
    rolling_force: float = 200.0
    support_force: float = 50.0
    separation_tolerance: float = 0.05
    ground_contact_tolerance: float = 1e-3
    min_rotation: float = 2.0 * math.pi
    min_distance: float = 1.0
    max_veer: float = 0.3
    hit_drive_speed: float = 0.5
    lateral_offset: tuple = (0.0, 0.0)
    trace_every: int = 25


@dataclass
class SimOutcome:
    test: str
    success: bool
    failure_reason: str | None
    time: float
    details: dict = field(default_factory=dict)
    trajectory: list = field(default_factory=list)

    def to_dict(self):
        return {
            "test": self.test,
            "success": self.success,
            "failure_reason": self.failure_reason,
            "time_s": self.time,
            "details": self.details,
            "trajectory": self.trajectory,
        }


@dataclass
class ConnectionWatch:
    """Bookkeeping for the separation check on one inter-body connection."""
    kind: str  # SURFACE or INSERTED
    part: str
    to_part: str
    body_a: RigidBody
    body_b: RigidBody
    local_a: np.ndarray
    local_b: np.ndarray
    normal_local_a: np.ndarray | None  # SURFACE only, frame of body_a

    def drift(self):
        pa = self.body_a.x + self.body_a._rot @ self.local_a
        pb = self.body_b.x + self.body_b._rot @ self.local_b
        if self.kind == "SURFACE":
            n = self.body_a._rot @ self.normal_local_a
            return abs(float((pb - pa) @ n))
        return float(np.linalg.norm(pb - pa))


@dataclass
class CompiledCraft:
    world: World
    bodies: list
    part_body: dict  # part name -> RigidBody
    part_shape: dict  # part name -> BodyPart
    joints_by_part: dict  # part name -> RevoluteJoint (wheel side)
    watches: list
    ground_parts: set
    degrees: dict


def _transform_solid(solid: Solid, s: float, shift):
    shift = np.asarray(shift, dtype=float)
    holes = []
    for h in solid.holes:
        holes.append(HoleRegion(
            owner=h.owner, name=h.name, axis=h.axis,
            center=tuple(np.asarray(h.center) * s + shift),
            depth=h.depth * s, through=h.through,
            radius=None if h.radius is None else h.radius * s,
            half_widths=None if h.half_widths is None
            else tuple(w * s for w in h.half_widths),
            open_sign=h.open_sign))
    if solid.kind == BOX:
        out = Solid.box(tuple(e * s for e in solid.extents))
    else:
        out = Solid.cylinder(solid.radius * s, solid.length * s, solid.axis)
    out.holes = holes
    return out


def _fixed_clusters(assembly: Assembly):
    parent = {name: name for name in assembly.placed}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b, conn in assembly.graph:
        if conn.joint_type == "FIXED":
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    clusters = {}
    for name in assembly.placed:
        clusters.setdefault(find(name), []).append(name)
    # deterministic: order clusters by their first part in plan order
    order = {name: i for i, name in enumerate(assembly.placed)}
    for members in clusters.values():
        members.sort(key=order.get)
    return sorted(clusters.values(), key=lambda ms: order[ms[0]])


def _surface_anchor(pa, pb, conn):
    """Center of the shared contact patch of a SURFACE connection."""
    from ..geometry import FACE_AXIS

    ax, sign = FACE_AXIS[conn.to_face]
    plane = pa.center[ax] + sign * pa.solid.extents[ax] / 2.0
    anchor = np.zeros(3)
    anchor[ax] = plane
    for t in range(3):
        if t == ax:
            continue
        lo = max(pa.center[t] - pa.solid.extents[t] / 2.0,
                 pb.center[t] - pb.solid.extents[t] / 2.0)
        hi = min(pa.center[t] + pa.solid.extents[t] / 2.0,
                 pb.center[t] + pb.solid.extents[t] / 2.0)
        anchor[t] = (lo + hi) / 2.0
    normal = np.zeros(3)
    normal[ax] = sign
    return anchor, normal


def compile_craft(assembly: Assembly, config: SimConfig) -> CompiledCraft:
    s = config.scale
    min_z = assembly.min_z() * s
    shift = np.array([0.0, 0.0, -min_z])

    world = World(config)
    clusters = _fixed_clusters(assembly)
    part_body: dict[str, RigidBody] = {}
    part_shape = {}
    for idx, members in enumerate(clusters):
        named = []
        for name in members:
            p = assembly.placed[name]
            center = np.asarray(p.center) * s + shift
            named.append((name, _transform_solid(p.solid, s, shift), center))
        body = RigidBody.from_parts(f"body{idx}", named, config.part_mass)
        world.bodies.append(body)
        for part in body.parts:
            part_body[part.name] = body
            part_shape[part.name] = part

    joints_by_part = {}
    for a, b, conn in assembly.graph:
        if conn.contact_type != "INSERTED" or conn.joint_type != "NON_FIXED":
            continue
        body_a = part_body[a]
        body_b = part_body[b]
        if body_a is body_b:
            continue
        owner = assembly.placed[b]
        mod = next(m for m in owner.spec.modifications
                   if m.name == conn.to_modification)
        ax, center, _, _, _ = hole_center(
            mod, owner.center, owner.solid.extents)
        anchor = np.asarray(center) * s + shift
        axis = np.zeros(3)
        axis[ax] = 1.0
        joint = RevoluteJoint(
            body_a=body_a, body_b=body_b,
            anchor_local_a=anchor - body_a.x,
            anchor_local_b=anchor - body_b.x,
            axis_local_a=axis.copy(), axis_local_b=axis.copy())
        world.joints.append(joint)
        joints_by_part.setdefault(a, joint)
        joints_by_part.setdefault(b, joint)

    watches = []
    for a, b, conn in assembly.graph:
        body_a = part_body[a]
        body_b = part_body[b]
        if body_a is body_b:
            continue
        pa = assembly.placed[a]
        pb = assembly.placed[b]
        if conn.contact_type == "SURFACE":
            anchor, normal = _surface_anchor(pa, pb, conn)
            anchor = anchor * s + shift
            watches.append(ConnectionWatch(
                kind="SURFACE", part=a, to_part=b,
                body_a=body_a, body_b=body_b,
                local_a=anchor - body_a.x, local_b=anchor - body_b.x,
                normal_local_a=normal))
        else:
            mod = next(m for m in pb.spec.modifications
                       if m.name == conn.to_modification)
            ax, center, _, _, _ = hole_center(
                mod, pb.center, pb.solid.extents)
            anchor = np.asarray(center) * s + shift
            watches.append(ConnectionWatch(
                kind="INSERTED", part=a, to_part=b,
                body_a=body_a, body_b=body_b,
                local_a=anchor - body_a.x, local_b=anchor - body_b.x,
                normal_local_a=None))

    ground_parts = set()
    for name, body in part_body.items():
        if body.part_min_z(part_shape[name]) <= 1e-4:
            ground_parts.add(name)

    degrees = {name: 0 for name in assembly.placed}
    for a, b, _ in assembly.graph:
        degrees[a] += 1
        degrees[b] += 1

    return CompiledCraft(
        world=world, bodies=world.bodies, part_body=part_body,
        part_shape=part_shape, joints_by_part=joints_by_part,
        watches=watches, ground_parts=ground_parts, degrees=degrees)


def check_common_failures(craft: CompiledCraft, config: SimConfig):
    """Shared per-step checks; returns (reason, detail) or None."""
    for watch in craft.watches:
        d = watch.drift()
        if d > config.separation_tolerance:
            return PART_SEPARATED, {
                "part": watch.part, "to_part": watch.to_part, "drift_m": d}
    for name, body in craft.part_body.items():
        if name in craft.ground_parts:
            continue
        z = body.part_min_z(craft.part_shape[name])
        if z <= config.ground_contact_tolerance:
            return NEW_GROUND_CONTACT, {"part": name, "min_z_m": z}
    return None


def _most_connected(assembly: Assembly, craft: CompiledCraft):
    best = None
    for name in assembly.placed:  # plan order breaks ties
        if best is None or craft.degrees[name] > craft.degrees[best]:
            best = name
    return best


def _craft_com(craft: CompiledCraft):
    total = sum(b.mass for b in craft.bodies)
    return sum(b.mass * b.x for b in craft.bodies) / total


def _snapshot(craft: CompiledCraft, t):
    return {
        "t": round(t, 6),
        "parts": {
            name: [round(float(v), 6) for v in
                   body.part_world_center(craft.part_shape[name])]
            for name, body in craft.part_body.items()
        },
    }


def run_rolling_test(assembly: Assembly, plan: CraftPlan,
                     config: SimConfig | None = None) -> SimOutcome:
    config = config or SimConfig()
    craft = compile_craft(assembly, config)
    world = craft.world
    push_part = _most_connected(assembly, craft)
    push_body = craft.part_body[push_part]
    push_shape = craft.part_shape[push_part]

    exec_parts = [p.name for p in plan.parts if p.exec_function]
    rotation = {name: 0.0 for name in exec_parts}
    start_com = _craft_com(craft)
    veer_at_goal = None
    trajectory = [_snapshot(craft, 0.0)]

    n_steps = int(round(config.duration / config.timestep))
    dt = config.timestep
    for step in range(n_steps):
        point = push_body.part_world_center(push_shape)
        push_body.apply_force((config.rolling_force, 0.0, 0.0), point)
        world.step(dt)

        for name in exec_parts:
            joint = craft.joints_by_part.get(name)
            if joint is None:
                body = craft.part_body[name]
                rotation[name] += float(np.linalg.norm(body.w)) * dt
                continue
            wheel = craft.part_body[name]
            other = joint.body_a if joint.body_b is wheel else joint.body_b
            axis = joint.world_axis_b() if joint.body_b is wheel \
                else joint.world_axis_a()
            rotation[name] += abs(float((wheel.w - other.w) @ axis)) * dt

        com = _craft_com(craft)
        if veer_at_goal is None and com[0] - start_com[0] >= config.min_distance:
            veer_at_goal = abs(float(com[1] - start_com[1]))
        if (step + 1) % config.trace_every == 0:
            trajectory.append(_snapshot(craft, world.time))
        shared = check_common_failures(craft, config)
        if shared is not None:
            reason, detail = shared
            return SimOutcome("rolling", False, reason, world.time,
                              detail, trajectory)

    com = _craft_com(craft)
    dx = float(com[0] - start_com[0])
    details = {
        "distance_m": dx,
        "rotation_rad": {k: float(v) for k, v in rotation.items()},
        "veer_m": veer_at_goal,
        "push_part": push_part,
    }
    lacking = [n for n in exec_parts
               if rotation[n] < config.min_rotation]
    if lacking:
        details["parts"] = lacking
        return SimOutcome("rolling", False, INSUFFICIENT_ROTATION,
                          world.time, details, trajectory)
    if dx < config.min_distance:
        return SimOutcome("rolling", False, INSUFFICIENT_DISTANCE,
                          world.time, details, trajectory)
    if veer_at_goal is None or veer_at_goal > config.max_veer:
        return SimOutcome("rolling", False, VEERED,
                          world.time, details, trajectory)
    return SimOutcome("rolling", True, None, world.time, details, trajectory)


def run_support_test(assembly: Assembly, plan: CraftPlan,
                     config: SimConfig | None = None) -> SimOutcome:
    config = config or SimConfig()
    craft = compile_craft(assembly, config)
    world = craft.world

    exec_parts = [p.name for p in plan.parts if p.exec_function]
    load_points = {}
    for name in exec_parts:
        shape = craft.part_shape[name]
        top = shape.local_center + np.array(
            [0.0, 0.0, shape.solid.extents[2] / 2.0])
        load_points[name] = top

    start = {name: body.part_world_center(craft.part_shape[name]).copy()
             for name, body in craft.part_body.items()}
    start_com = _craft_com(craft)
    max_disp = 0.0
    trajectory = [_snapshot(craft, 0.0)]

    n_steps = int(round(config.duration / config.timestep))
    for step in range(n_steps):
        for name in exec_parts:
            body = craft.part_body[name]
            point = body.world_point(load_points[name])
            body.apply_force((0.0, 0.0, -config.support_force), point)
        world.step(config.timestep)
        for name, body in craft.part_body.items():
            d = np.linalg.norm(
                body.part_world_center(craft.part_shape[name]) - start[name])
            max_disp = max(max_disp, float(d))
        max_disp = max(max_disp, float(
            np.linalg.norm(_craft_com(craft) - start_com)))
        if (step + 1) % config.trace_every == 0:
            trajectory.append(_snapshot(craft, world.time))
        shared = check_common_failures(craft, config)
        if shared is not None:
            reason, detail = shared
            return SimOutcome("support", False, reason, world.time,
                              detail, trajectory)

    details = {"max_displacement_m": max_disp, "loaded_parts": exec_parts}
    if max_disp >= 0.01:
        return SimOutcome("support", False, MOVED_UNDER_LOAD, world.time,
                          details, trajectory)
    return SimOutcome("support", True, None, world.time, details, trajectory)


# hit-test fixture, in scaled units
HIT_BLOCK_TOP = 1.0
HIT_HOLE_RADIUS = 0.12
HIT_HOLE_DEPTH = 0.4
HIT_PEG_RADIUS = 0.1
HIT_PEG_LENGTH = 0.5
HIT_PEG_GAP = 0.05  # peg lower end above the block top
HIT_DROP_GAP = 0.1  # craft lowest point above the peg top


def _peg_block_hook(peg: RigidBody, friction):
    """Contacts between the peg and the static slotted block."""

    def hook(world):
        contacts = []
        r = peg.rotation
        axis = r[:, 2]
        hl = HIT_PEG_LENGTH / 2.0
        low = peg.x - axis * hl if axis[2] > 0 else peg.x + axis * hl
        rho = math.hypot(low[0], low[1])
        floor_z = HIT_BLOCK_TOP - HIT_HOLE_DEPTH
        if rho <= HIT_HOLE_RADIUS:
            # inside the hole: wall guidance plus the hole floor
            if low[2] < HIT_BLOCK_TOP:
                pen = rho + HIT_PEG_RADIUS - HIT_HOLE_RADIUS
                if pen > 0 and rho > 1e-12:
                    n = -np.array([low[0], low[1], 0.0]) / rho
                    point = low - n * HIT_PEG_RADIUS
                    contacts.append(Contact(None, peg, point, n, pen,
                                            friction))
            if low[2] < floor_z + 1e-3:
                contacts.append(Contact(
                    None, peg, low, np.array([0.0, 0.0, 1.0]),
                    max(0.0, floor_z - low[2]), friction))
        else:
            # over solid block: its top face acts as a plane
            if low[2] < HIT_BLOCK_TOP + 1e-3:
                contacts.append(Contact(
                    None, peg, low, np.array([0.0, 0.0, 1.0]),
                    max(0.0, HIT_BLOCK_TOP - low[2]), friction))
        return contacts

    return hook


def run_hit_test(assembly: Assembly, plan: CraftPlan,
                 config: SimConfig | None = None) -> SimOutcome:
    config = config or SimConfig()
    craft = compile_craft(assembly, config)
    world = craft.world

    exec_parts = [p.name for p in plan.parts if p.exec_function]
    head = exec_parts[0] if exec_parts else plan.parts[-1].name
    head_body = craft.part_body[head]
    head_shape = craft.part_shape[head]

    peg_top0 = HIT_BLOCK_TOP + HIT_PEG_GAP + HIT_PEG_LENGTH
    target_xy = np.asarray(config.lateral_offset, dtype=float)
    head_c = head_body.part_world_center(head_shape)
    head_low = head_body.part_min_z(head_shape)
    shift = np.array([
        target_xy[0] - head_c[0],
        target_xy[1] - head_c[1],
        (peg_top0 + HIT_DROP_GAP) - head_low,
    ])
    for body in world.bodies:
        body.x = body.x + shift

    peg = RigidBody.from_parts(
        "peg",
        [("__peg__", Solid.cylinder(HIT_PEG_RADIUS, HIT_PEG_LENGTH, 2),
          np.array([0.0, 0.0, HIT_BLOCK_TOP + HIT_PEG_GAP
                    + HIT_PEG_LENGTH / 2.0]))],
        config.part_mass)
    peg.gravity_exempt = True
    world.bodies.append(peg)
    world.extra_contact_hooks.append(_peg_block_hook(peg, config.friction))

    root = craft.part_body[plan.parts[0].name]
    root.kinematic = True
    root.v = np.array([0.0, 0.0, -config.hit_drive_speed])

    touched = False
    trajectory = [_snapshot(craft, 0.0)]
    n_steps = int(round(config.duration / config.timestep))
    for step in range(n_steps):
        contacts = world.step(config.timestep)
        if not touched:
            for c in contacts:
                pair = {id(c.body_a) if c.body_a else None, id(c.body_b)}
                if id(peg) in pair and pair != {None, id(peg)}:
                    touched = True
                    peg.gravity_exempt = False
                    break

        r = peg.rotation
        axis = r[:, 2]
        hl = HIT_PEG_LENGTH / 2.0
        top = peg.x + axis * hl if axis[2] > 0 else peg.x - axis * hl
        low = peg.x - axis * hl if axis[2] > 0 else peg.x + axis * hl
        descent = peg_top0 - float(top[2])
        rho_low = math.hypot(low[0], low[1])

        if (step + 1) % config.trace_every == 0:
            trajectory.append(_snapshot(craft, world.time))

        details = {"peg_descent_m": descent, "peg_lateral_m": rho_low,
                   "touched": touched}
        if descent >= 0.5 * HIT_HOLE_DEPTH and rho_low <= HIT_HOLE_RADIUS:
            return SimOutcome("hit", True, None, world.time, details,
                              trajectory)
        if low[2] < HIT_BLOCK_TOP and rho_low > HIT_HOLE_RADIUS:
            return SimOutcome("hit", False, PEG_OUTSIDE_HOLE, world.time,
                              details, trajectory)
        shared = check_common_failures(craft, config)
        if shared is not None:
            reason, detail = shared
            return SimOutcome("hit", False, reason, world.time, detail,
                              trajectory)

    details = {"touched": touched}
    return SimOutcome("hit", False, PEG_MISSED, world.time, details,
                      trajectory)


TESTS = {
    "rolling": run_rolling_test,
    "support": run_support_test,
    "hit": run_hit_test,
}


def run_functional_test(kind: str, assembly: Assembly, plan: CraftPlan,
                        config: SimConfig | None = None) -> SimOutcome:
    try:
        runner = TESTS[kind]
    except KeyError:
        raise ValueError(f"unknown functional test {kind!r}") from None
    return runner(assembly, plan, config)
