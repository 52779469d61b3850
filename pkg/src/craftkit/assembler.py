"""Compile a validated plan into a world-space assembly.

Placement is deterministic: the first listed part seeds the scene at the
origin (resting on z=0) and every other part is positioned by its first
connection; all further connections are only checked for consistency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .catalog import MM, Catalog, ObjectType
from .errors import (
    HoleExceedsOwner,
    HoleNotCarvedYet,
    InconsistentConnection,
    Unplaceable,
)
from .geometry import AXIS_INDEX, CYL, FACE_AXIS, HoleRegion, Solid
from .plan import AXES, CraftPlan, ModificationSpec, PartSpec

CONTACT_TOL = 1e-6
DEFAULT_HOLE_CLEARANCE = 0.001  # 1 mm in metres
DEFAULT_HOLE_RADIUS = 0.005  # holes nobody inserts into

CYL_AXIS_TOKEN = {"FRONT_BACK": 0, "LEFT_RIGHT": 1, "TOP_BOTTOM": 2}


@dataclass(frozen=True)
class Pose:
    position: tuple  # AABB center, metres
    axis_map: tuple | str  # cuboid: per-axis dims (mm); cylinder: axis name


@dataclass
class PlacedPart:
    spec: PartSpec
    pose: Pose
    solid: Solid

    @property
    def center(self):
        return np.asarray(self.pose.position)

    def aabb(self):
        return self.solid.aabb(self.pose.position)


@dataclass
class Assembly:
    placed: dict  # name -> PlacedPart, insertion-ordered by plan order
    graph: list = field(default_factory=list)  # (part, to_part, ConnectionSpec)
    ground_set: set = field(default_factory=set)

    def part(self, name) -> PlacedPart:
        return self.placed[name]

    def names(self):
        return list(self.placed)

    def min_z(self):
        return min(p.aabb()[0][2] for p in self.placed.values())

    def to_jsonable(self):
        return {
            "parts": [
                {
                    "name": name,
                    "object": p.spec.available_obj,
                    "position": list(p.pose.position),
                    "axis_map": list(p.pose.axis_map)
                    if not isinstance(p.pose.axis_map, str) else p.pose.axis_map,
                    "solid": p.solid.to_dict(),
                    "exec_function": p.spec.exec_function,
                }
                for name, p in self.placed.items()
            ],
            "graph": [
                {
                    "part": a, "to_part": b,
                    "contact_type": c.contact_type, "type": c.joint_type,
                    "to_face": c.to_face,
                    "to_modification": c.to_modification,
                }
                for a, b, c in self.graph
            ],
            "ground": sorted(self.ground_set),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), indent=2)


def resolve_orientation(spec: PartSpec, obj: ObjectType):
    """World AABB extents in metres plus the axis assignment."""
    if obj.is_cuboid:
        dims = spec.orientation.axis_dims
        extents = tuple(d * MM for d in dims)
        return extents, tuple(dims)
    axis = CYL_AXIS_TOKEN[spec.orientation.axis_token]
    r, length = obj.dims[0] * MM, obj.dims[1] * MM
    ext = [2.0 * r] * 3
    ext[axis] = length
    return tuple(ext), spec.orientation.axis_token


def _make_solid(spec: PartSpec, obj: ObjectType):
    extents, axis_map = resolve_orientation(spec, obj)
    if obj.is_cuboid:
        solid = Solid.box(extents)
    else:
        axis = CYL_AXIS_TOKEN[spec.orientation.axis_token]
        solid = Solid.cylinder(obj.dims[0] * MM, obj.dims[1] * MM, axis)
    return solid, Pose(position=(0.0, 0.0, 0.0), axis_map=axis_map)


def hole_axis_and_span(mod: ModificationSpec, owner_center, owner_extents):
    """World axis, center coordinate and depth of a modification's region."""
    ax = AXIS_INDEX[mod.through_axis]
    token = mod.align[ax]
    e = owner_extents[ax]
    c = owner_center[ax]
    if token.endswith("_FULL"):
        return ax, c, e, True, 0
    start_face = token.split("_")[0]
    _, sign = FACE_AXIS[start_face]
    # blind hole: opens on the start face, reaches half the extent
    return ax, c + sign * e / 4.0, e / 2.0, False, sign


def hole_center(mod: ModificationSpec, owner_center, owner_extents):
    ax, c_ax, depth, through, open_sign = hole_axis_and_span(
        mod, owner_center, owner_extents)
    center = [float(v) for v in owner_center]
    center[ax] = float(c_ax)
    for t in range(3):
        if t == ax:
            continue
        token = mod.align[t]
        if token == "CENTER":
            continue
        _, sign = FACE_AXIS[token]
        # named side puts the hole at the quarter point toward that face
        center[t] = float(owner_center[t] + sign * owner_extents[t] / 4.0)
    return ax, tuple(center), depth, through, open_sign


def _surface_position(cur_ext, to_center, to_ext, conn):
    face_axis, sign = FACE_AXIS[conn.to_face]
    pos = [0.0, 0.0, 0.0]
    pos[face_axis] = to_center[face_axis] - sign * (
        cur_ext[face_axis] + to_ext[face_axis]) / 2.0
    for t in range(3):
        if t == face_axis:
            continue
        token = conn.align[t]
        if token == "CENTER":
            pos[t] = to_center[t]
        else:
            _, s = FACE_AXIS[token]
            # flush: both extents end on the same plane on that side
            pos[t] = to_center[t] + s * (to_ext[t] - cur_ext[t]) / 2.0
    return pos


def _check_surface_contact(part: PlacedPart, target: PlacedPart, conn):
    face_axis, sign = FACE_AXIS[conn.to_face]
    cur_c, cur_e = part.center, part.solid.extents
    to_c, to_e = target.center, target.solid.extents
    face_cur = cur_c[face_axis] + sign * cur_e[face_axis] / 2.0
    face_to = to_c[face_axis] - sign * to_e[face_axis] / 2.0
    if abs(face_cur - face_to) > CONTACT_TOL:
        return f"faces are {abs(face_cur - face_to):.3g} m apart"
    for t in range(3):
        if t == face_axis:
            continue
        lo = max(cur_c[t] - cur_e[t] / 2.0, to_c[t] - to_e[t] / 2.0)
        hi = min(cur_c[t] + cur_e[t] / 2.0, to_c[t] + to_e[t] / 2.0)
        if hi - lo < -CONTACT_TOL:
            return f"no overlap on axis {t}"
    return None


def _check_inserted_contact(part: PlacedPart, target: PlacedPart, conn):
    mod = next(
        (m for m in target.spec.modifications if m.name == conn.to_modification),
        None)
    if mod is None:
        return f"{conn.to_modification!r} missing on {conn.to_part!r}"
    ax, center, depth, _, _ = hole_center(
        mod, target.center, target.solid.extents)
    for t in range(3):
        if t == ax:
            continue
        if abs(part.center[t] - center[t]) > CONTACT_TOL:
            return f"axis offset {abs(part.center[t] - center[t]):.3g} m on axis {t}"
    lo = center[ax] - depth / 2.0
    hi = center[ax] + depth / 2.0
    p_lo = part.center[ax] - part.solid.extents[ax] / 2.0
    p_hi = part.center[ax] + part.solid.extents[ax] / 2.0
    if min(hi, p_hi) - max(lo, p_lo) <= 0:
        return "no axial overlap with the hole span"
    return None


def place_parts(plan: CraftPlan, catalog: Catalog) -> Assembly:
    parts = {p.name: p for p in plan.parts}
    objs = {p.name: catalog.lookup(p.available_obj) for p in plan.parts}
    placed: dict[str, PlacedPart] = {}

    def place(spec: PartSpec, position):
        solid, pose = _make_solid(spec, objs[spec.name])
        placed[spec.name] = PlacedPart(
            spec=spec,
            pose=Pose(position=tuple(float(v) for v in position),
                      axis_map=pose.axis_map),
            solid=solid,
        )

    # seed: first part; its AABB rests on z=0 centered at the origin
    seed = plan.parts[0]
    seed_solid, _ = _make_solid(seed, objs[seed.name])
    place(seed, (0.0, 0.0, seed_solid.extents[2] / 2.0))

    changed = True
    while changed:
        changed = False
        for spec in plan.parts:
            if spec.name in placed or not spec.connections:
                continue
            first = spec.connections[0]
            if first.to_part not in placed:
                continue
            target = placed[first.to_part]
            solid, _ = _make_solid(spec, objs[spec.name])
            if first.contact_type == "SURFACE":
                pos = _surface_position(
                    solid.extents, target.center, target.solid.extents, first)
            else:
                mod = next(
                    (m for m in target.spec.modifications
                     if m.name == first.to_modification), None)
                ax, center, depth, _, _ = hole_center(
                    mod, target.center, target.solid.extents)
                pos = list(center)
            place(spec, pos)
            changed = True

    leftovers = [p for p in plan.parts if p.name not in placed]
    if leftovers:
        spec = leftovers[0]
        first = spec.connections[0] if spec.connections else None
        if first is not None and first.contact_type == "INSERTED":
            raise HoleNotCarvedYet(spec.name, first.to_part, first.to_modification)
        raise Unplaceable(spec.name)

    graph = []
    for spec in plan.parts:
        part = placed[spec.name]
        for i, conn in enumerate(spec.connections):
            target = placed[conn.to_part]
            if i > 0:
                if conn.contact_type == "SURFACE":
                    problem = _check_surface_contact(part, target, conn)
                else:
                    problem = _check_inserted_contact(part, target, conn)
                if problem is not None:
                    raise InconsistentConnection(spec.name, conn.to_part, problem)
            graph.append((spec.name, conn.to_part, conn))

    assembly = Assembly(placed=placed, graph=graph)
    min_z = assembly.min_z()
    for name, part in placed.items():
        if part.aabb()[0][2] <= min_z + CONTACT_TOL:
            assembly.ground_set.add(name)
    return assembly


def _inserters(assembly: Assembly, owner: str, mod_name: str):
    out = []
    for a, b, conn in assembly.graph:
        if (conn.contact_type == "INSERTED" and b == owner
                and conn.to_modification == mod_name):
            out.append(assembly.placed[a])
    return out


def _cross_section(assembly, owner: PlacedPart, mod: ModificationSpec, ax,
                   clearance):
    ins = _inserters(assembly, owner.spec.name, mod.name)
    if not ins:
        return DEFAULT_HOLE_RADIUS, None
    trans = [t for t in range(3) if t != ax]
    any_cyl = any(p.solid.kind == CYL for p in ins)
    max_half = max(
        max(p.solid.extents[t] / 2.0 for t in trans) for p in ins)
    if any_cyl:
        return max_half + clearance, None
    side = 2.0 * max_half + 2.0 * clearance
    return None, (side / 2.0, side / 2.0)


def carve_modifications(assembly: Assembly, plan: CraftPlan,
                        clearance: float = DEFAULT_HOLE_CLEARANCE) -> Assembly:
    for spec in plan.parts:
        part = assembly.placed[spec.name]
        for mod in spec.modifications:
            ax, center, depth, through, open_sign = hole_center(
                mod, part.center, part.solid.extents)
            radius, half_widths = _cross_section(assembly, part, mod, ax,
                                                 clearance)
            hole = HoleRegion(
                owner=spec.name, name=mod.name, axis=ax, center=center,
                depth=depth, through=through, radius=radius,
                half_widths=half_widths, open_sign=open_sign)
            _check_hole_inside(part, hole)
            part.solid.holes.append(hole)
    return assembly


def _check_hole_inside(part: PlacedPart, hole: HoleRegion):
    eps = 1e-9
    c = part.center
    if part.solid.kind == CYL and part.solid.axis == hole.axis:
        trans = [t for t in range(3) if t != hole.axis]
        off = np.hypot(hole.center[trans[0]] - c[trans[0]],
                       hole.center[trans[1]] - c[trans[1]])
        reach = hole.radius if hole.radius is not None else \
            np.hypot(*hole.half_widths)
        if off + reach > part.solid.radius + eps:
            raise HoleExceedsOwner(part.spec.name, hole.name)
        return
    lo, hi = part.aabb()
    for t in range(3):
        if t == hole.axis:
            continue
        half = hole.radius if hole.radius is not None else \
            hole.half_widths[0 if t == min(x for x in range(3) if x != hole.axis)
                             else 1]
        if hole.center[t] - half < lo[t] - eps or \
                hole.center[t] + half > hi[t] + eps:
            raise HoleExceedsOwner(part.spec.name, hole.name)


def connectivity_components(assembly: Assembly):
    parent = {name: name for name in assembly.placed}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b, _ in assembly.graph:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for name in assembly.placed:
        groups.setdefault(find(name), set()).add(name)
    return list(groups.values())


def connectivity_check(assembly: Assembly):
    """Return None when connected, else the list of components."""
    components = connectivity_components(assembly)
    if len(components) == 1:
        return None
    return components


def build_assembly(plan: CraftPlan, catalog: Catalog) -> Assembly:
    return carve_modifications(place_parts(plan, catalog), plan)
