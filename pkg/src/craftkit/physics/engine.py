"""Minimal impulse-based rigid-body engine.

Semi-implicit Euler, sequential impulses with Coulomb friction, split-impulse
positional correction, and revolute joints solved as point + axis constraints.
Bodies carry lists of primitive parts (boxes / cylinders) expressed in the
body frame, which is world-aligned at compile time.

Positions are frozen during the velocity solve, so all constraint geometry
(lever arms, effective masses, biases) is precomputed once per step and the
iteration loop only touches velocities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..collision import pair_overlap
from ..errors import NumericalDivergence
from ..geometry import BOX, Solid, solid_inertia_diag

MAX_SPEED = 1e3
CONTACT_GEN_MARGIN = 1e-3  # start tracking ground contacts this close

_BOX_SIGNS = np.array(
    [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
    dtype=float)
_UP = np.array([0.0, 0.0, 1.0])


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_integrate(q, omega, dt):
    w, x, y, z = q
    ox, oy, oz = omega
    dq = 0.5 * np.array([
        -ox * x - oy * y - oz * z,
        ox * w + oy * z - oz * y,
        oy * w + oz * x - ox * z,
        oz * w + ox * y - oy * x,
    ])
    q = q + dq * dt
    return q / np.linalg.norm(q)


def _cross(a, b):
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


@dataclass
class BodyPart:
    name: str
    solid: Solid
    local_center: np.ndarray  # offset from body COM in the body frame


class RigidBody:
    @classmethod
    def from_parts(cls, body_id, named_solids, part_mass):
        """named_solids: list of (name, Solid, world_center) at compile pose."""
        self = cls.__new__(cls)
        self.id = body_id
        centers = np.array([c for _, _, c in named_solids], dtype=float)
        com = centers.mean(axis=0)
        self.mass = part_mass * len(named_solids)
        self.parts = [
            BodyPart(name=n, solid=s, local_center=np.asarray(c, float) - com)
            for n, s, c in named_solids
        ]
        inertia = np.zeros((3, 3))
        for part in self.parts:
            diag = solid_inertia_diag(part_mass, part.solid)
            d = part.local_center
            inertia += np.diag(diag)
            inertia += part_mass * (np.dot(d, d) * np.eye(3) - np.outer(d, d))
        self.x = com.copy()
        self.q = np.array([1.0, 0.0, 0.0, 0.0])
        self.v = np.zeros(3)
        self.w = np.zeros(3)
        self.pv = np.zeros(3)
        self.pw = np.zeros(3)
        self.force = np.zeros(3)
        self.torque = np.zeros(3)
        self.kinematic = False
        self.gravity_exempt = False
        self.inv_mass = 1.0 / self.mass
        self.inv_inertia_body = np.linalg.inv(inertia)
        self._rot = np.eye(3)
        self._iinv = self.inv_inertia_body.copy()
        self._dynamic = True
        self.refresh_pose_cache()
        return self

    # -- kinematics -------------------------------------------------------
    def refresh_pose_cache(self):
        self._rot = quat_to_matrix(self.q)
        self._dynamic = not self.kinematic and self.inv_mass != 0.0
        if self._dynamic:
            self._iinv = self._rot @ self.inv_inertia_body @ self._rot.T
        else:
            self._iinv = np.zeros((3, 3))

    @property
    def rotation(self):
        return quat_to_matrix(self.q)

    def world_point(self, local):
        return self.x + self.rotation @ local

    def world_inv_inertia(self):
        self.refresh_pose_cache()
        return self._iinv

    def velocity_at(self, point):
        return self.v + _cross(self.w, point - self.x)

    def apply_force(self, force, point=None):
        self.force = self.force + np.asarray(force, float)
        if point is not None:
            self.torque = self.torque + _cross(
                np.asarray(point, float) - self.x, force)

    def apply_torque(self, torque):
        self.torque = self.torque + np.asarray(torque, float)

    def apply_impulse(self, impulse, point):
        """One-off external impulse (not used by the solver's hot path)."""
        self.refresh_pose_cache()
        if not self._dynamic:
            return
        self.v = self.v + impulse * self.inv_mass
        self.w = self.w + self._iinv @ _cross(point - self.x, impulse)

    def part_world_center(self, part: BodyPart):
        return self.world_point(part.local_center)

    def part_min_z(self, part: BodyPart):
        """Lowest world z over the (rotated) part geometry."""
        r = self.rotation
        c = self.x + r @ part.local_center
        if part.solid.kind == BOX:
            half = np.asarray(part.solid.extents) / 2.0
            # support point of a rotated box along -z
            return c[2] - float(np.abs(r[2, :]) @ half)
        axis = r[:, part.solid.axis]
        hl = part.solid.length / 2.0
        radial = np.sqrt(max(1.0 - axis[2] ** 2, 0.0)) * part.solid.radius
        return c[2] - abs(axis[2]) * hl - radial

    def kinetic_energy(self):
        if self.inv_mass == 0.0:
            return 0.0
        r = self.rotation
        inertia = r @ np.linalg.inv(self.inv_inertia_body) @ r.T
        return 0.5 * self.mass * float(self.v @ self.v) + \
            0.5 * float(self.w @ inertia @ self.w)


@dataclass
class RevoluteJoint:
    body_a: RigidBody
    body_b: RigidBody
    anchor_local_a: np.ndarray
    anchor_local_b: np.ndarray
    axis_local_a: np.ndarray
    axis_local_b: np.ndarray

    def world_anchors(self):
        return (self.body_a.world_point(self.anchor_local_a),
                self.body_b.world_point(self.anchor_local_b))

    def world_axis_a(self):
        return self.body_a.rotation @ self.axis_local_a

    def world_axis_b(self):
        return self.body_b.rotation @ self.axis_local_b


@dataclass
class Contact:
    body_a: RigidBody | None  # None = static environment (ground / fixture)
    body_b: RigidBody
    point: np.ndarray
    normal: np.ndarray  # from a to b
    depth: float
    friction: float
    jn: float = 0.0
    jt: np.ndarray = field(default_factory=lambda: np.zeros(2))
    pn: float = 0.0


class _JointRow:
    """Per-step precomputation for one revolute joint."""

    __slots__ = ("a", "b", "ra", "rb", "kinv", "bias", "rows", "kmat_inv",
                 "ang_bias", "iinv_a", "iinv_b", "rows_iinv_a", "rows_iinv_b")

    def __init__(self, joint: RevoluteJoint, beta, dt):
        a, b = joint.body_a, joint.body_b
        self.a, self.b = a, b
        self.ra = a._rot @ joint.anchor_local_a
        self.rb = b._rot @ joint.anchor_local_b
        pa = a.x + self.ra
        pb = b.x + self.rb
        self.iinv_a = a._iinv
        self.iinv_b = b._iinv
        inv_ma = a.inv_mass if a._dynamic else 0.0
        inv_mb = b.inv_mass if b._dynamic else 0.0
        sa = _skew(self.ra)
        sb = _skew(self.rb)
        k = (inv_ma + inv_mb) * np.eye(3) \
            - sa @ self.iinv_a @ sa - sb @ self.iinv_b @ sb
        self.kinv = np.linalg.inv(k)
        self.bias = (beta / dt) * (pb - pa)

        axis_a = a._rot @ joint.axis_local_a
        axis_b = b._rot @ joint.axis_local_b
        u1 = np.array([1.0, 0.0, 0.0])
        if abs(axis_a @ u1) > 0.9:
            u1 = np.array([0.0, 1.0, 0.0])
        u1 = u1 - (u1 @ axis_a) * axis_a
        u1 /= np.linalg.norm(u1)
        u2 = _cross(axis_a, u1)
        rows = np.stack([u1, u2])
        self.rows = rows
        kang = rows @ (self.iinv_a + self.iinv_b) @ rows.T
        try:
            self.kmat_inv = np.linalg.inv(kang)
        except np.linalg.LinAlgError:
            self.kmat_inv = None
        # driving the perpendicular relative spin toward
        # -beta/dt * (axis_a x axis_b) decays the misalignment without
        # cross-coupling the two error components
        self.ang_bias = (beta / dt) * (rows @ _cross(axis_a, axis_b))
        self.rows_iinv_a = self.iinv_a @ rows.T
        self.rows_iinv_b = self.iinv_b @ rows.T

    def solve(self):
        a, b = self.a, self.b
        vrel = b.v + _cross(b.w, self.rb) - a.v - _cross(a.w, self.ra)
        impulse = self.kinv @ (-(vrel + self.bias))
        if a._dynamic:
            a.v = a.v - impulse * a.inv_mass
            a.w = a.w - self.iinv_a @ _cross(self.ra, impulse)
        if b._dynamic:
            b.v = b.v + impulse * b.inv_mass
            b.w = b.w + self.iinv_b @ _cross(self.rb, impulse)

        if self.kmat_inv is None:
            return
        w_rel = b.w - a.w
        lam = self.kmat_inv @ (-(self.rows @ w_rel + self.ang_bias))
        if a._dynamic:
            a.w = a.w - self.rows_iinv_a @ lam
        if b._dynamic:
            b.w = b.w + self.rows_iinv_b @ lam


class _ContactRow:
    """Per-step precomputation for one contact point."""

    __slots__ = ("c", "a", "b", "ra", "rb", "n", "t1", "t2", "kn", "kt1",
                 "kt2", "iinv_a", "iinv_b")

    def __init__(self, contact: Contact):
        self.c = contact
        a, b = contact.body_a, contact.body_b
        self.a, self.b = a, b
        n = contact.normal
        self.n = n
        t1 = np.array([1.0, 0.0, 0.0])
        if abs(n @ t1) > 0.9:
            t1 = np.array([0.0, 1.0, 0.0])
        t1 = t1 - (t1 @ n) * n
        t1 /= np.linalg.norm(t1)
        self.t1 = t1
        self.t2 = _cross(n, t1)
        self.ra = None if a is None else contact.point - a.x
        self.rb = contact.point - b.x
        self.iinv_a = None if a is None else a._iinv
        self.iinv_b = b._iinv
        self.kn = self._k(n)
        self.kt1 = self._k(t1)
        self.kt2 = self._k(self.t2)

    def _k(self, d):
        k = 0.0
        a, b = self.a, self.b
        if a is not None and a._dynamic:
            rn = _cross(self.ra, d)
            k += a.inv_mass + rn @ self.iinv_a @ rn
        if b._dynamic:
            rn = _cross(self.rb, d)
            k += b.inv_mass + rn @ self.iinv_b @ rn
        return k

    def _vrel(self):
        a, b = self.a, self.b
        v = b.v + _cross(b.w, self.rb)
        if a is not None:
            v = v - a.v - _cross(a.w, self.ra)
        return v

    def _vrel_pseudo(self):
        a, b = self.a, self.b
        v = b.pv + _cross(b.pw, self.rb)
        if a is not None:
            v = v - a.pv - _cross(a.pw, self.ra)
        return v

    def _apply(self, impulse):
        a, b = self.a, self.b
        if a is not None and a._dynamic:
            a.v = a.v - impulse * a.inv_mass
            a.w = a.w - self.iinv_a @ _cross(self.ra, impulse)
        if b._dynamic:
            b.v = b.v + impulse * b.inv_mass
            b.w = b.w + self.iinv_b @ _cross(self.rb, impulse)

    def _apply_pseudo(self, impulse):
        a, b = self.a, self.b
        if a is not None and a._dynamic:
            a.pv = a.pv - impulse * a.inv_mass
            a.pw = a.pw - self.iinv_a @ _cross(self.ra, impulse)
        if b._dynamic:
            b.pv = b.pv + impulse * b.inv_mass
            b.pw = b.pw + self.iinv_b @ _cross(self.rb, impulse)

    def solve_velocity(self):
        c = self.c
        if self.kn <= 0.0:
            return
        vn = self._vrel() @ self.n
        dj = -vn / self.kn
        new_jn = max(c.jn + dj, 0.0)
        dj = new_jn - c.jn
        c.jn = new_jn
        if dj != 0.0:
            self._apply(dj * self.n)

        if c.friction <= 0.0 or c.jn <= 0.0:
            return
        max_f = c.friction * c.jn
        for idx, (t, kt) in enumerate(((self.t1, self.kt1),
                                       (self.t2, self.kt2))):
            if kt <= 0.0:
                continue
            vt = self._vrel() @ t
            dj = -vt / kt
            new_jt = min(max(c.jt[idx] + dj, -max_f), max_f)
            dj = new_jt - c.jt[idx]
            c.jt[idx] = new_jt
            if dj != 0.0:
                self._apply(dj * t)

    def solve_position(self, beta, slop, dt):
        c = self.c
        pen = c.depth - slop
        if pen <= 0.0 or self.kn <= 0.0:
            return
        vn = self._vrel_pseudo() @ self.n
        target = beta * pen / dt
        dj = (target - vn) / self.kn
        new_pn = max(c.pn + dj, 0.0)
        dj = new_pn - c.pn
        c.pn = new_pn
        if dj != 0.0:
            self._apply_pseudo(dj * self.n)


class World:
    def __init__(self, config):
        self.config = config
        self.bodies: list[RigidBody] = []
        self.joints: list[RevoluteJoint] = []
        self.time = 0.0
        self.extra_contact_hooks = []  # callables(world) -> list[Contact]
        self.gravity = np.array([0.0, 0.0, -config.gravity])
        self.ground_enabled = True
        self._pair_skip = None

    # -- contact generation ----------------------------------------------
    def _ground_contacts(self, contacts):
        mu = self.config.friction
        for body in self.bodies:
            if body.inv_mass == 0.0 and not body.kinematic:
                continue
            r = body._rot
            for part in body.parts:
                c = body.x + r @ part.local_center
                if part.solid.kind == BOX:
                    half = np.asarray(part.solid.extents) / 2.0
                    # quick reject on the lowest support point
                    low = c[2] - float(np.abs(r[2, :]) @ half)
                    if low >= CONTACT_GEN_MARGIN:
                        continue
                    corners = c + (_BOX_SIGNS * half) @ r.T
                    for corner in corners:
                        if corner[2] < CONTACT_GEN_MARGIN:
                            contacts.append(Contact(
                                None, body, corner, _UP,
                                max(0.0, -corner[2]), mu))
                else:
                    axis = r[:, part.solid.axis]
                    hl = part.solid.length / 2.0
                    if abs(axis[2]) > 0.99:
                        # near-vertical: sample the lower rim
                        low = c - axis * hl if axis[2] > 0 else c + axis * hl
                        if low[2] - part.solid.radius >= CONTACT_GEN_MARGIN:
                            continue
                        u = np.array([1.0, 0.0, 0.0])
                        u = u - (u @ axis) * axis
                        u /= np.linalg.norm(u)
                        vperp = _cross(axis, u)
                        for k in range(8):
                            ang = 2 * np.pi * k / 8
                            p = low + part.solid.radius * (
                                np.cos(ang) * u + np.sin(ang) * vperp)
                            if p[2] < CONTACT_GEN_MARGIN:
                                contacts.append(Contact(
                                    None, body, p, _UP,
                                    max(0.0, -p[2]), mu))
                    else:
                        down = np.array([0.0, 0.0, -1.0])
                        u = down - (down @ axis) * axis
                        u /= np.linalg.norm(u)
                        for s in (-1, 1):
                            p = c + axis * (s * hl) + part.solid.radius * u
                            if p[2] < CONTACT_GEN_MARGIN:
                                contacts.append(Contact(
                                    None, body, p, _UP,
                                    max(0.0, -p[2]), mu))

    def _jointed(self, a: RigidBody, b: RigidBody):
        if self._pair_skip is None:
            self._pair_skip = {
                frozenset((j.body_a.id, j.body_b.id)) for j in self.joints}
        return frozenset((a.id, b.id)) in self._pair_skip

    def _body_body_contacts(self, contacts):
        mu = self.config.friction
        n_bodies = len(self.bodies)
        for i in range(n_bodies):
            for j in range(i + 1, n_bodies):
                a, b = self.bodies[i], self.bodies[j]
                if not (a._dynamic or a.kinematic) \
                        and not (b._dynamic or b.kinematic):
                    continue
                if self._jointed(a, b):
                    continue
                for pa in a.parts:
                    ca = a.x + a._rot @ pa.local_center
                    for pb in b.parts:
                        cb = b.x + b._rot @ pb.local_center
                        # coarse sphere reject before the exact test
                        ra = 0.5 * float(np.linalg.norm(pa.solid.extents))
                        rb = 0.5 * float(np.linalg.norm(pb.solid.extents))
                        d = cb - ca
                        if d @ d > (ra + rb) ** 2 + 1e-6:
                            continue
                        hit = pair_overlap(ca, pa.solid, cb, pb.solid,
                                           tol=1e-9)
                        if hit is None:
                            continue
                        depth, witness = hit
                        normal = self._separation_axis(ca, pa.solid,
                                                      cb, pb.solid)
                        contacts.append(Contact(
                            a, b, np.asarray(witness), normal, depth, mu))

    @staticmethod
    def _separation_axis(ca, sa, cb, sb):
        """Axis of least overlap between the two world AABBs, from a to b."""
        lo_a, hi_a = sa.aabb(ca)
        lo_b, hi_b = sb.aabb(cb)
        overlaps = np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b)
        axis = int(np.argmin(overlaps))
        normal = np.zeros(3)
        normal[axis] = 1.0 if cb[axis] >= ca[axis] else -1.0
        return normal

    def gather_contacts(self):
        contacts = []
        if self.ground_enabled:
            self._ground_contacts(contacts)
        self._body_body_contacts(contacts)
        for hook in self.extra_contact_hooks:
            contacts.extend(hook(self))
        return contacts

    def step(self, dt=None):
        cfg = self.config
        dt = cfg.timestep if dt is None else dt
        self._pair_skip = None

        for body in self.bodies:
            body.refresh_pose_cache()
            if not body._dynamic:
                body.force[:] = 0.0
                body.torque[:] = 0.0
                continue
            accel = body.force * body.inv_mass
            if not body.gravity_exempt:
                accel = accel + self.gravity
            body.v = body.v + accel * dt
            body.w = body.w + body._iinv @ body.torque * dt
            body.force[:] = 0.0
            body.torque[:] = 0.0

        contacts = self.gather_contacts()
        joint_rows = [_JointRow(j, cfg.baumgarte, dt) for j in self.joints]
        contact_rows = [_ContactRow(c) for c in contacts]
        for _ in range(cfg.solver_iterations):
            for row in joint_rows:
                row.solve()
            for row in contact_rows:
                row.solve_velocity()
        for _ in range(cfg.position_iterations):
            for row in contact_rows:
                row.solve_position(cfg.baumgarte, cfg.slop, dt)

        for body in self.bodies:
            if not body._dynamic and not body.kinematic:
                continue
            speed = float(body.v @ body.v) ** 0.5
            if speed > MAX_SPEED:
                raise NumericalDivergence(
                    f"body {body.id!r} reached {speed:.3g} m/s")
            body.x = body.x + (body.v + body.pv) * dt
            body.q = quat_integrate(body.q, body.w + body.pw, dt)
            body.pv[:] = 0.0
            body.pw[:] = 0.0
        self.time += dt
        return contacts
