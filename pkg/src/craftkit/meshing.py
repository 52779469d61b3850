"""Triangle meshing and OBJ export for placed parts.

Boxes become 12 triangles, cylinders are tessellated with 64 segments.
Holes along a box axis or along a cylinder's own axis are meshed as real
tunnels (annulus rings on the pierced faces plus an inner wall), so part
meshes stay watertight.  A hole that would pierce the curved wall of a
cylinder is omitted from the mesh; the solid geometry still models it.
"""

from __future__ import annotations

import numpy as np

from .geometry import BOX, CYL, HoleRegion, Solid

SEGMENTS = 64


class MeshBuilder:
    def __init__(self):
        self.vertices: list = []
        self.faces: list = []

    def add_vertex(self, p) -> int:
        self.vertices.append([float(x) for x in p])
        return len(self.vertices) - 1

    def add_tri(self, a, b, c):
        self.faces.append((a, b, c))

    def add_quad(self, a, b, c, d):
        self.add_tri(a, b, c)
        self.add_tri(a, c, d)

    def arrays(self):
        return (np.asarray(self.vertices, dtype=float),
                np.asarray(self.faces, dtype=int))


def _transverse(axis):
    return [t for t in range(3) if t != axis]


def _lift(axis, coord, u, v):
    """(u, v) in the plane `axis`=coord back to 3D."""
    p = [0.0, 0.0, 0.0]
    p[axis] = coord
    t1, t2 = _transverse(axis)
    p[t1] = u
    p[t2] = v
    return p


def _ray_to_rect(origin, direction, center, half):
    """Distance from origin along direction to an axis-aligned 2D rectangle
    boundary; origin must be inside."""
    best = np.inf
    for k in range(2):
        if abs(direction[k]) < 1e-15:
            continue
        edge = center[k] + (half[k] if direction[k] > 0 else -half[k])
        best = min(best, (edge - origin[k]) / direction[k])
    return best

def _ray_to_circle(origin, direction, center, radius):
    d = np.asarray(direction, dtype=float)
    o = np.asarray(origin, dtype=float) - np.asarray(center, dtype=float)
    a = d @ d
    b = 2.0 * (o @ d)
    c = o @ o - radius * radius
    disc = max(b * b - 4 * a * c, 0.0)
    return (-b + np.sqrt(disc)) / (2.0 * a)


def _hole_inner_radius_fn(hole: HoleRegion, hole_uv):
    if hole.radius is not None:
        return lambda ang: hole.radius
    half = hole.half_widths
    return lambda ang: _ray_to_rect(
        hole_uv, (np.cos(ang), np.sin(ang)), hole_uv, half)


def _face_with_hole(mb: MeshBuilder, axis, coord, outer_fn, hole: HoleRegion,
                    flip):
    """Annulus between a convex outer boundary and the hole loop.

    outer_fn(angle) gives the distance from the hole center to the outer
    boundary; returns the ring of inner vertex indices (for the tunnel).
    """
    t1, t2 = _transverse(axis)
    hu, hv = hole.center[t1], hole.center[t2]
    inner_fn = _hole_inner_radius_fn(hole, (hu, hv))
    outer_idx = []
    inner_idx = []
    for k in range(SEGMENTS):
        ang = 2.0 * np.pi * k / SEGMENTS
        c, s = np.cos(ang), np.sin(ang)
        ro = outer_fn(ang)
        ri = inner_fn(ang)
        outer_idx.append(mb.add_vertex(
            _lift(axis, coord, hu + ro * c, hv + ro * s)))
        inner_idx.append(mb.add_vertex(
            _lift(axis, coord, hu + ri * c, hv + ri * s)))
    for k in range(SEGMENTS):
        nk = (k + 1) % SEGMENTS
        if flip:
            mb.add_quad(outer_idx[k], inner_idx[k], inner_idx[nk],
                        outer_idx[nk])
        else:
            mb.add_quad(outer_idx[k], outer_idx[nk], inner_idx[nk],
                        inner_idx[k])
    return inner_idx


def _tunnel(mb: MeshBuilder, ring_a, ring_b, flip=False):
    n = len(ring_a)
    for k in range(n):
        nk = (k + 1) % n
        if flip:
            mb.add_quad(ring_a[k], ring_a[nk], ring_b[nk], ring_b[k])
        else:
            mb.add_quad(ring_a[k], ring_b[k], ring_b[nk], ring_a[nk])


def _hole_ring(mb: MeshBuilder, axis, coord, hole: HoleRegion):
    t1, t2 = _transverse(axis)
    hu, hv = hole.center[t1], hole.center[t2]
    inner_fn = _hole_inner_radius_fn(hole, (hu, hv))
    ring = []
    for k in range(SEGMENTS):
        ang = 2.0 * np.pi * k / SEGMENTS
        ring.append(mb.add_vertex(_lift(
            axis, coord, hu + inner_fn(ang) * np.cos(ang),
            hv + inner_fn(ang) * np.sin(ang))))
    return ring


def _disk(mb: MeshBuilder, ring, center_point, flip=False):
    c = mb.add_vertex(center_point)
    n = len(ring)
    for k in range(n):
        nk = (k + 1) % n
        if flip:
            mb.add_tri(c, ring[nk], ring[k])
        else:
            mb.add_tri(c, ring[k], ring[nk])


def _plain_rect(mb: MeshBuilder, axis, coord, center, half, flip):
    t1, t2 = _transverse(axis)
    cu, cv = center[t1], center[t2]
    hu, hv = half[t1], half[t2]
    ids = [mb.add_vertex(_lift(axis, coord, cu + su * hu, cv + sv * hv))
           for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
    if flip:
        mb.add_quad(ids[3], ids[2], ids[1], ids[0])
    else:
        mb.add_quad(ids[0], ids[1], ids[2], ids[3])


def _box_axis_holes(solid: Solid):
    """Map face (axis, sign) -> hole piercing it, for box-aligned holes."""
    pierced = {}
    tunnels = []
    for hole in solid.holes:
        tunnels.append(hole)
        if hole.through:
            pierced[(hole.axis, 1)] = hole
            pierced[(hole.axis, -1)] = hole
        else:
            pierced[(hole.axis, hole.open_sign)] = hole
    return pierced, tunnels


def mesh_box(solid: Solid, center) -> MeshBuilder:
    mb = MeshBuilder()
    c = np.asarray(center, dtype=float)
    half = np.asarray(solid.extents) / 2.0
    pierced, holes = _box_axis_holes(solid)
    for axis in range(3):
        t1, t2 = _transverse(axis)
        for sign in (1, -1):
            coord = c[axis] + sign * half[axis]
            flip = sign < 0
            hole = pierced.get((axis, sign))
            if hole is None:
                _plain_rect(mb, axis, coord, c, half, flip)
                continue
            hu = (hole.center[t1], hole.center[t2])
            outer_fn = (lambda cc=c, hh=(half[t1], half[t2]), oo=hu:
                        (lambda ang: _ray_to_rect(
                            oo, (np.cos(ang), np.sin(ang)),
                            (cc[t1], cc[t2]), hh)))()
            _face_with_hole(mb, axis, coord, outer_fn, hole, flip)
    for hole in holes:
        lo, hi = hole.span()
        if hole.through:
            ring_lo = _hole_ring(mb, hole.axis, c[hole.axis] - half[hole.axis],
                                 hole)
            ring_hi = _hole_ring(mb, hole.axis, c[hole.axis] + half[hole.axis],
                                 hole)
            _tunnel(mb, ring_lo, ring_hi)
        else:
            open_coord = c[hole.axis] + hole.open_sign * half[hole.axis]
            bottom = hi if hole.open_sign < 0 else lo
            ring_open = _hole_ring(mb, hole.axis, open_coord, hole)
            ring_bot = _hole_ring(mb, hole.axis, bottom, hole)
            _tunnel(mb, ring_open, ring_bot)
            bc = list(hole.center)
            bc[hole.axis] = bottom
            _disk(mb, ring_bot, bc, flip=hole.open_sign > 0)
    return mb


def mesh_cylinder(solid: Solid, center) -> MeshBuilder:
    mb = MeshBuilder()
    c = np.asarray(center, dtype=float)
    axis = solid.axis
    t1, t2 = _transverse(axis)
    hl = solid.length / 2.0
    axial_holes = [h for h in solid.holes if h.axis == axis]
    hole = axial_holes[0] if axial_holes else None

    rims = {}
    for sign in (1, -1):
        coord = c[axis] + sign * hl
        flip = sign < 0
        ring = [mb.add_vertex(_lift(
            axis, coord,
            c[t1] + solid.radius * np.cos(2 * np.pi * k / SEGMENTS),
            c[t2] + solid.radius * np.sin(2 * np.pi * k / SEGMENTS)))
            for k in range(SEGMENTS)]
        rims[sign] = ring
        pierced = hole is not None and (
            hole.through or hole.open_sign == sign)
        if not pierced:
            cp = list(c)
            cp[axis] = coord
            _disk(mb, ring, cp, flip=flip)
        else:
            hu = (hole.center[t1], hole.center[t2])
            outer_fn = (lambda cc=(c[t1], c[t2]), rr=solid.radius, oo=hu:
                        (lambda ang: _ray_to_circle(
                            oo, (np.cos(ang), np.sin(ang)), cc, rr)))()
            inner = _face_with_hole(mb, axis, coord, outer_fn, hole, flip)
            rims[(sign, "inner")] = inner
    _tunnel(mb, rims[-1], rims[1], flip=True)

    if hole is not None:
        lo, hi = hole.span()
        if hole.through:
            ring_lo = _hole_ring(mb, axis, c[axis] - hl, hole)
            ring_hi = _hole_ring(mb, axis, c[axis] + hl, hole)
            _tunnel(mb, ring_lo, ring_hi)
        else:
            open_coord = c[axis] + hole.open_sign * hl
            bottom = hi if hole.open_sign < 0 else lo
            ring_open = _hole_ring(mb, axis, open_coord, hole)
            ring_bot = _hole_ring(mb, axis, bottom, hole)
            _tunnel(mb, ring_open, ring_bot)
            bc = list(hole.center)
            bc[axis] = bottom
            _disk(mb, ring_bot, bc, flip=hole.open_sign > 0)
    return mb


def mesh_part(solid: Solid, center):
    """(vertices, faces) for one placed part."""
    if solid.kind == BOX:
        return mesh_box(solid, center).arrays()
    return mesh_cylinder(solid, center).arrays()


def mesh_assembly(assembly):
    """Concatenated (vertices, faces) over every placed part."""
    all_v = []
    all_f = []
    offset = 0
    for part in assembly.placed.values():
        v, f = mesh_part(part.solid, part.pose.position)
        all_v.append(v)
        all_f.append(f + offset)
        offset += len(v)
    return np.vstack(all_v), np.vstack(all_f)


def write_obj(path, vertices, faces, comment=None):
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for v in vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def export_assembly_obj(assembly, path):
    v, f = mesh_assembly(assembly)
    write_obj(path, v, f, comment="craftkit assembly")
    return v, f
