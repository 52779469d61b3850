"""Visual similarity metrics between a built assembly and a reference mesh.

Both shapes are normalized (AABB centered at the origin, diagonal scaled to
one), surface-sampled, and compared point set to point set with chamfer
distance, Hausdorff distance, and an F-score at a fixed distance threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateExtent, EmptyMesh
from .meshing import mesh_part

FSCORE_THRESHOLD = 0.1
DEFAULT_SAMPLES = 20000
BRUTE_FORCE_LIMIT = 2000


@dataclass
class MetricReport:
    chamfer: float
    hausdorff: float
    fscore: float
    precision: float
    recall: float
    samples: int
    threshold: float = FSCORE_THRESHOLD

    def to_dict(self):
        return {
            "chamfer": self.chamfer,
            "hausdorff": self.hausdorff,
            "fscore": self.fscore,
            "precision": self.precision,
            "recall": self.recall,
            "samples": self.samples,
            "threshold": self.threshold,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def load_obj(path):
    """Vertices and fan-triangulated faces of a Wavefront OBJ file."""
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, *rest = line.split()
            if head == "v":
                vertices.append([float(x) for x in rest[:3]])
            elif head == "f":
                idx = []
                for token in rest:
                    i = int(token.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                for k in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[k], idx[k + 1]))
    if not vertices or not faces:
        raise EmptyMesh(str(path))
    return np.asarray(vertices, dtype=float), np.asarray(faces, dtype=int)


def _triangle_areas(vertices, faces):
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def normalize_points(points):
    """Center the AABB at the origin and scale its diagonal to one."""
    points = np.asarray(points, dtype=float)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    diag = float(np.linalg.norm(hi - lo))
    if diag <= 0.0:
        raise DegenerateExtent("point set has zero extent")
    return (points - (lo + hi) / 2.0) / diag


def normalize_mesh(vertices, faces):
    return normalize_points(vertices), faces


def sample_mesh(vertices, faces, n_samples=DEFAULT_SAMPLES, seed=0):
    """Area-weighted uniform surface samples; degenerate triangles dropped."""
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=int)
    areas = _triangle_areas(vertices, faces)
    keep = areas > 1e-12
    faces = faces[keep]
    areas = areas[keep]
    if len(faces) == 0:
        raise EmptyMesh("all triangles degenerate")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(faces), size=n_samples, p=areas / areas.sum())
    u = rng.random(n_samples)
    v = rng.random(n_samples)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    a = vertices[faces[chosen, 0]]
    b = vertices[faces[chosen, 1]]
    c = vertices[faces[chosen, 2]]
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)


def sample_assembly_exterior(assembly, n_samples=DEFAULT_SAMPLES, seed=0,
                             oversample=50):
    """Surface samples of an assembly with interior points rejected.

    A sample on one part that falls strictly inside another part's material
    is not visible from the outside and is discarded.  Oversampling bounds
    the retry loop; the final set is trimmed to exactly n_samples.
    """
    parts = list(assembly.placed.values())
    meshes = [mesh_part(p.solid, p.pose.position) for p in parts]
    areas = []
    for v, f in meshes:
        areas.append(_triangle_areas(v, f).sum())
    areas = np.asarray(areas)
    rng = np.random.default_rng(seed)
    kept = []
    total = 0
    rounds = 0
    need = n_samples
    while total < n_samples and rounds < oversample:
        rounds += 1
        counts = rng.multinomial(need, areas / areas.sum())
        for (v, f), count, owner in zip(meshes, counts, range(len(parts))):
            if count == 0:
                continue
            pts = sample_mesh(v, f, n_samples=int(count),
                              seed=int(rng.integers(0, 2 ** 31)))
            visible = np.ones(len(pts), dtype=bool)
            for j, other in enumerate(parts):
                if j == owner:
                    continue
                inside = other.solid.material_contains(
                    other.pose.position, pts, margin=1e-9)
                visible &= ~inside
            if visible.any():
                kept.append(pts[visible])
                total += int(visible.sum())
        need = max(n_samples - total, 1)
    if total == 0:
        raise EmptyMesh("no exterior surface samples")
    out = np.vstack(kept)
    return out[:n_samples] if len(out) >= n_samples else out


def _nearest_distances(query, target):
    if len(query) * len(target) <= BRUTE_FORCE_LIMIT ** 2 \
            and len(target) <= BRUTE_FORCE_LIMIT:
        diff = query[:, None, :] - target[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
    tree = cKDTree(target)
    d, _ = tree.query(query, k=1)
    return d


def chamfer_distance(points_a, points_b):
    """Symmetric mean nearest-neighbour distance (non-squared)."""
    da = _nearest_distances(points_a, points_b)
    db = _nearest_distances(points_b, points_a)
    return 0.5 * (float(da.mean()) + float(db.mean()))


def hausdorff_distance(points_a, points_b):
    da = _nearest_distances(points_a, points_b)
    db = _nearest_distances(points_b, points_a)
    return max(float(da.max()), float(db.max()))


def fscore(points_a, points_b, threshold=FSCORE_THRESHOLD):
    """F-score at a distance threshold; a is the prediction, b the target."""
    da = _nearest_distances(points_a, points_b)
    db = _nearest_distances(points_b, points_a)
    precision = float((da <= threshold).mean())
    recall = float((db <= threshold).mean())
    if precision + recall == 0.0:
        return 0.0, precision, recall
    return 2.0 * precision * recall / (precision + recall), precision, recall


def compare_point_sets(points_a, points_b,
                       threshold=FSCORE_THRESHOLD) -> MetricReport:
    f, p, r = fscore(points_a, points_b, threshold)
    return MetricReport(
        chamfer=chamfer_distance(points_a, points_b),
        hausdorff=hausdorff_distance(points_a, points_b),
        fscore=f, precision=p, recall=r,
        samples=len(points_a), threshold=threshold)


def compare_assembly_to_mesh(assembly, obj_path,
                             n_samples=DEFAULT_SAMPLES, seed=0,
                             threshold=FSCORE_THRESHOLD) -> MetricReport:
    """Normalized similarity between an assembly and a reference OBJ."""
    pred = sample_assembly_exterior(assembly, n_samples=n_samples, seed=seed)
    v, f = load_obj(obj_path)
    ref = sample_mesh(*normalize_mesh(v, f), n_samples=n_samples,
                      seed=seed + 1)
    return compare_point_sets(normalize_points(pred), ref, threshold)


def compare_meshes(obj_a, obj_b, n_samples=DEFAULT_SAMPLES, seed=0,
                   threshold=FSCORE_THRESHOLD) -> MetricReport:
    va, fa = load_obj(obj_a)
    vb, fb = load_obj(obj_b)
    pa = sample_mesh(*normalize_mesh(va, fa), n_samples=n_samples, seed=seed)
    pb = sample_mesh(*normalize_mesh(vb, fb), n_samples=n_samples,
                     seed=seed + 1)
    return compare_point_sets(pa, pb, threshold)
