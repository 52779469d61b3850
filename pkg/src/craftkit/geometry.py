"""Axis-aligned primitive solids (box / cylinder) with subtracted hole regions.

All lengths are metres.  Solids stay axis-aligned through assembly build;
only the physics engine rotates bodies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
AXIS_NAME = {0: "x", 1: "y", 2: "z"}

# face token -> (axis index, outward sign)
FACE_AXIS = {
    "FRONT": (0, +1), "BACK": (0, -1),
    "LEFT": (1, +1), "RIGHT": (1, -1),
    "TOP": (2, +1), "BOTTOM": (2, -1),
    "HIGH": (2, +1), "LOW": (2, -1),
}

BOX = "box"
CYL = "cyl"


@dataclass(frozen=True)
class HoleRegion:
    owner: str
    name: str
    axis: int  # world axis index of the hole direction
    center: tuple  # (x, y, z) m, world
    depth: float  # m along axis
    through: bool
    radius: float | None = None  # cylindrical hole
    half_widths: tuple | None = None  # square/rect hole: transverse half sizes
    open_sign: int = 0  # blind hole: sign of the face it opens on

    def span(self):
        c = self.center[self.axis]
        return (c - self.depth / 2.0, c + self.depth / 2.0)

    def contains(self, pts, margin=0.0):
        """Vectorized point-in-hole test; margin > 0 shrinks the hole."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        c = np.asarray(self.center)
        ax = self.axis
        lo, hi = self.span()
        inside = (pts[:, ax] >= lo + margin) & (pts[:, ax] <= hi - margin)
        trans = [i for i in range(3) if i != ax]
        if self.radius is not None:
            d2 = sum((pts[:, t] - c[t]) ** 2 for t in trans)
            r = self.radius - margin
            inside &= d2 <= max(r, 0.0) ** 2
        else:
            for t, hw in zip(trans, self.half_widths):
                inside &= np.abs(pts[:, t] - c[t]) <= hw - margin
        return inside

    def to_dict(self):
        d = {
            "owner": self.owner, "name": self.name,
            "axis": AXIS_NAME[self.axis], "center": list(self.center),
            "depth": self.depth, "through": self.through,
        }
        if self.radius is not None:
            d["radius"] = self.radius
        else:
            d["half_widths"] = list(self.half_widths)
        return d


@dataclass
class Solid:
    """Base primitive minus a list of hole regions.

    kind BOX: extents (ex, ey, ez).
    kind CYL: radius, length, axis (index of principal axis); extents is the
    AABB of the cylinder.
    """
    kind: str
    extents: tuple
    radius: float | None = None
    length: float | None = None
    axis: int | None = None
    holes: list = field(default_factory=list)

    @classmethod
    def box(cls, extents):
        return cls(kind=BOX, extents=tuple(float(e) for e in extents))

    @classmethod
    def cylinder(cls, radius, length, axis):
        ext = [2.0 * radius] * 3
        ext[axis] = length
        return cls(kind=CYL, extents=tuple(ext), radius=float(radius),
                   length=float(length), axis=axis)

    def base_contains(self, center, pts, margin=0.0):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        c = np.asarray(center, dtype=float)
        if self.kind == BOX:
            half = np.asarray(self.extents) / 2.0 - margin
            return np.all(np.abs(pts - c) <= half, axis=1)
        ax = self.axis
        trans = [i for i in range(3) if i != ax]
        inside = np.abs(pts[:, ax] - c[ax]) <= self.length / 2.0 - margin
        d2 = sum((pts[:, t] - c[t]) ** 2 for t in trans)
        return inside & (d2 <= max(self.radius - margin, 0.0) ** 2)

    def material_contains(self, center, pts, margin=0.0):
        """Inside the base by `margin` and outside every hole by `margin`."""
        inside = self.base_contains(center, pts, margin)
        for hole in self.holes:
            inside &= ~hole.contains(pts, margin=-margin)
        return inside

    def aabb(self, center):
        c = np.asarray(center, dtype=float)
        half = np.asarray(self.extents) / 2.0
        return c - half, c + half

    def volume_base(self):
        if self.kind == BOX:
            ex, ey, ez = self.extents
            return ex * ey * ez
        return np.pi * self.radius ** 2 * self.length

    def to_dict(self):
        d = {"kind": self.kind, "extents": list(self.extents)}
        if self.kind == CYL:
            d["radius"] = self.radius
            d["length"] = self.length
            d["axis"] = AXIS_NAME[self.axis]
        d["holes"] = [h.to_dict() for h in self.holes]
        return d


def box_inertia_diag(mass, extents):
    ex, ey, ez = extents
    return np.array([
        mass / 12.0 * (ey ** 2 + ez ** 2),
        mass / 12.0 * (ex ** 2 + ez ** 2),
        mass / 12.0 * (ex ** 2 + ey ** 2),
    ])


def cylinder_inertia_diag(mass, radius, length, axis):
    i_ax = 0.5 * mass * radius ** 2
    i_perp = mass * (3.0 * radius ** 2 + length ** 2) / 12.0
    diag = np.full(3, i_perp)
    diag[axis] = i_ax
    return diag


def solid_inertia_diag(mass, solid: Solid):
    """Inertia of the base primitive about its own center (holes ignored)."""
    if solid.kind == BOX:
        return box_inertia_diag(mass, solid.extents)
    return cylinder_inertia_diag(mass, solid.radius, solid.length, solid.axis)


def interval_overlap(lo_a, hi_a, lo_b, hi_b):
    return min(hi_a, hi_b) - max(lo_a, lo_b)
