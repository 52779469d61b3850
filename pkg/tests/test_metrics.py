import numpy as np
import pytest

from craftkit.errors import DegenerateExtent, EmptyMesh
from craftkit.meshing import export_assembly_obj
from craftkit.metrics import (
    chamfer_distance,
    compare_assembly_to_mesh,
    compare_point_sets,
    fscore,
    hausdorff_distance,
    load_obj,
    normalize_points,
    sample_assembly_exterior,
    sample_mesh,
)


def brute_chamfer(a, b):
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())


def brute_hausdorff(a, b):
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_load_obj_quads_and_negative_indices(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text(
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "f 1 2 3 4\n"
        "f -4 -3 -2\n")
    v, f = load_obj(path)
    assert len(v) == 4
    # the quad fans into two triangles plus the explicit one
    assert len(f) == 3
    assert tuple(f[2]) == (0, 1, 2)


def test_load_obj_empty_raises(tmp_path):
    path = tmp_path / "empty.obj"
    path.write_text("# nothing here\n")
    with pytest.raises(EmptyMesh):
        load_obj(path)


def test_normalize_points():
    pts = np.array([[0.0, 0.0, 0.0], [2.0, 2.0, 1.0]])
    out = normalize_points(pts)
    lo, hi = out.min(axis=0), out.max(axis=0)
    assert np.allclose((lo + hi) / 2.0, 0.0)
    assert np.linalg.norm(hi - lo) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DegenerateExtent):
        normalize_points(np.zeros((5, 3)))


def test_sampling_is_deterministic():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    f = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    a = sample_mesh(v, f, n_samples=500, seed=42)
    b = sample_mesh(v, f, n_samples=500, seed=42)
    assert np.array_equal(a, b)
    c = sample_mesh(v, f, n_samples=500, seed=43)
    assert not np.array_equal(a, c)


def test_sample_points_lie_on_surface():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    f = np.array([[0, 1, 2]])
    pts = sample_mesh(v, f, n_samples=200, seed=1)
    assert np.allclose(pts[:, 2], 0.0)
    assert (pts[:, 0] >= 0).all() and (pts[:, 1] >= 0).all()
    assert (pts[:, 0] + pts[:, 1] <= 1.0 + 1e-12).all()


def test_metrics_match_brute_force_oracle():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = rng.normal(size=(150, 3))
        b = rng.normal(size=(170, 3))
        assert chamfer_distance(a, b) == pytest.approx(
            brute_chamfer(a, b), abs=1e-12)
        assert hausdorff_distance(a, b) == pytest.approx(
            brute_hausdorff(a, b), abs=1e-12)


def test_kdtree_and_brute_force_agree():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(3000, 3))  # above the brute-force limit
    b = rng.normal(size=(3000, 3))
    sub_a, sub_b = a[:500], b[:500]
    assert chamfer_distance(sub_a, sub_b) == pytest.approx(
        brute_chamfer(sub_a, sub_b), abs=1e-12)
    big = chamfer_distance(a, b)
    assert big > 0


def test_identity_scores():
    rng = np.random.default_rng(9)
    pts = rng.normal(size=(400, 3))
    report = compare_point_sets(pts, pts.copy())
    assert report.chamfer == 0.0
    assert report.hausdorff == 0.0
    assert report.fscore == 1.0


def test_chamfer_never_exceeds_hausdorff():
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = rng.normal(size=(60, 3))
        b = rng.normal(size=(80, 3))
        assert chamfer_distance(a, b) <= hausdorff_distance(a, b) + 1e-15


def test_fscore_zero_when_far_apart():
    a = np.zeros((10, 3))
    b = np.full((10, 3), 100.0)
    f, p, r = fscore(a, b)
    assert (f, p, r) == (0.0, 0.0, 0.0)


def test_exterior_sampling_rejects_interior(build_fixture):
    _, asm = build_fixture("hammer_valid_1")
    pts = sample_assembly_exterior(asm, n_samples=2000, seed=0)
    assert len(pts) == 2000
    # no point is strictly inside another part's material
    for name, part in asm.placed.items():
        inside = part.solid.material_contains(
            part.pose.position, pts, margin=1e-6)
        for other_name, other in asm.placed.items():
            if other_name == name:
                continue
            both = inside & other.solid.material_contains(
                other.pose.position, pts, margin=1e-6)
            assert not both.any()


def test_assembly_self_comparison_scores_high(build_fixture, tmp_path):
    _, asm = build_fixture("hammer_valid_1")
    obj_path = tmp_path / "hammer.obj"
    export_assembly_obj(asm, obj_path)
    report = compare_assembly_to_mesh(asm, obj_path, n_samples=3000, seed=0)
    assert report.chamfer < 0.01
    assert report.fscore > 0.99
    payload = report.to_dict()
    assert set(payload) == {"chamfer", "hausdorff", "fscore", "precision",
                            "recall", "samples", "threshold"}
