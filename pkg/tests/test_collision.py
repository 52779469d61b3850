import numpy as np
import pytest

from craftkit.collision import base_overlap, pair_overlap, validate_collisions
from craftkit.geometry import Solid


def mc_overlap(ca, a, cb, b, n=20000, seed=0, margin=1e-6):
    """Monte Carlo oracle: sample a's material, test membership in b."""
    rng = np.random.default_rng(seed)
    lo, hi = a.aabb(ca)
    pts = rng.uniform(lo, hi, size=(n, 3))
    pts = pts[a.material_contains(ca, pts, margin=margin)]
    if not len(pts):
        return False
    return bool(b.material_contains(cb, pts, margin=margin).any())


def test_box_box_overlap_and_separation():
    a = Solid.box((0.2, 0.2, 0.2))
    b = Solid.box((0.2, 0.2, 0.2))
    hit = base_overlap((0, 0, 0), a, (0.15, 0, 0), b)
    assert hit is not None
    assert hit[0] == pytest.approx(0.05, abs=1e-12)
    assert base_overlap((0, 0, 0), a, (0.25, 0, 0), b) is None


def test_touching_is_not_collision():
    a = Solid.box((0.1, 0.1, 0.1))
    b = Solid.box((0.1, 0.1, 0.1))
    # exact face contact and contact within tolerance both pass
    assert pair_overlap((0, 0, 0), a, (0.1, 0, 0), b) is None
    assert pair_overlap((0, 0, 0), a, (0.1 - 5e-7, 0, 0), b) is None
    assert pair_overlap((0, 0, 0), a, (0.09, 0, 0), b) is not None


def test_box_cylinder_corner_case():
    box = Solid.box((0.1, 0.1, 0.1))
    cyl = Solid.cylinder(0.03, 0.2, axis=2)
    # circle outside the corner even though the AABBs overlap
    d = 0.05 + 0.03 / np.sqrt(2.0) + 1e-4
    assert base_overlap((0, 0, 0), box, (d, d, 0), cyl) is None
    d = 0.05 + 0.03 / np.sqrt(2.0) - 1e-3
    assert base_overlap((0, 0, 0), box, (d, d, 0), cyl) is not None


def test_cyl_cyl_parallel():
    a = Solid.cylinder(0.05, 0.2, axis=2)
    b = Solid.cylinder(0.05, 0.2, axis=2)
    hit = base_overlap((0, 0, 0), a, (0.08, 0, 0), b)
    assert hit is not None
    assert hit[0] == pytest.approx(0.02, abs=1e-12)
    assert base_overlap((0, 0, 0), a, (0.11, 0, 0), b) is None


def test_cyl_cyl_perpendicular_matches_oracle():
    a = Solid.cylinder(0.04, 0.3, axis=0)
    b = Solid.cylinder(0.03, 0.3, axis=1)
    rng = np.random.default_rng(7)
    for _ in range(60):
        ca = rng.uniform(-0.05, 0.05, 3)
        cb = rng.uniform(-0.05, 0.05, 3)
        analytic = base_overlap(ca, a, cb, b) is not None
        oracle = mc_overlap(ca, a, cb, b)
        if analytic != oracle:
            hit = base_overlap(ca, a, cb, b)
            # only disagree inside the MC resolution band
            assert hit is None or hit[0] < 1e-3


def test_cyl_cyl_perpendicular_grazing():
    a = Solid.cylinder(0.05, 0.2, axis=0)
    b = Solid.cylinder(0.05, 0.2, axis=1)
    # offset along z by just under / over the sum of radii
    assert base_overlap((0, 0, 0), a, (0, 0, 0.0999), b) is not None
    assert base_overlap((0, 0, 0), a, (0, 0, 0.1001), b) is None


def test_symmetry():
    shapes = [
        ((0, 0, 0), Solid.box((0.1, 0.2, 0.1))),
        ((0.05, 0.03, 0.02), Solid.cylinder(0.04, 0.15, axis=2)),
        ((0.02, -0.04, 0.01), Solid.cylinder(0.03, 0.12, axis=0)),
    ]
    for i in range(len(shapes)):
        for j in range(len(shapes)):
            if i == j:
                continue
            (ca, a), (cb, b) = shapes[i], shapes[j]
            ha = base_overlap(ca, a, cb, b)
            hb = base_overlap(cb, b, ca, a)
            assert (ha is None) == (hb is None)
            if ha is not None:
                assert ha[0] == pytest.approx(hb[0], rel=1e-9)


def test_hole_exempts_inserted_axle():
    wheel = Solid.cylinder(0.03, 0.02, axis=1)
    from craftkit.geometry import HoleRegion
    wheel.holes.append(HoleRegion(
        owner="WHEEL_1", name="HOLE_1", axis=1, center=(0.0, 0.0, 0.0),
        depth=0.02, through=True, radius=0.006))
    axle = Solid.cylinder(0.005, 0.15, axis=1)
    # axle through the hole: base solids overlap, material does not
    assert base_overlap((0, 0, 0), wheel, (0, 0, 0), axle) is not None
    assert pair_overlap((0, 0, 0), wheel, (0, 0, 0), axle) is None
    # off-center axle hits the wheel material
    assert pair_overlap((0, 0, 0), wheel, (0, 0.0, 0.02), axle) is not None


def test_validate_collisions_on_goldens(build_fixture):
    for name in ("hammer_valid_1", "table_valid_1", "chair_valid_1",
                 "skateboard_valid_1", "bookshelf_valid_1", "bus_valid_1"):
        _, asm = build_fixture(name)
        report = validate_collisions(asm)
        assert report.ok, (name, report.to_dict())


def test_validate_collisions_flags_bad_fixture(build_fixture):
    _, asm = build_fixture("bookshelf_collision")
    report = validate_collisions(asm)
    assert not report.ok
    pairs = {frozenset((a, b)) for a, b, _, _ in report.pairs}
    assert frozenset(("SHELF_1", "SHELF_2")) in pairs
    payload = report.to_dict()
    assert payload["pairs"][0]["depth_m"] > 0
