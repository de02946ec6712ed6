"""Configuration-space scenes with exact collision labels and clearance.

A scene lives on the unit hypercube ``[0, 1]^d``. ``label`` returns +1 for
forbidden (in collision) and -1 for free; forbidden sets are closed, so
boundary points are forbidden. ``clearance`` is the Euclidean distance to
the nearest configuration of the opposite label.

Three kinds are provided:

``DiscScene``
    A single forbidden ball, required to lie inside the cube so that
    ``| ||x - c|| - r |`` is the exact clearance.
``BoxUnionScene``
    Pairwise disjoint axis-aligned boxes. Exact clearance in closed form.
``TwoLinkScene``
    A planar two-link arm among disc obstacles. Joint angles map affinely
    onto ``[0, 1]^2`` (no wraparound). Labels are exact; clearance is the
    distance to the nearest of a dense set of frontier points, one located by
    bisection on every edge of a regular grid where the label changes.

All queries accept a single configuration of shape ``(d,)`` or a batch of
shape ``(m, d)``.
"""

import hashlib
import math
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .rng import make_rng

FORBIDDEN = 1
FREE = -1

DATA_DIR = Path(__file__).parent / "data"

# Bisection halvings when locating frontier points on a grid edge.
_BISECTION_STEPS = 48


class SceneFormatError(ValueError):
    """Raised for malformed scene description files."""


def _as_batch(x, d):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    batch = arr.reshape(1, -1) if single else arr
    if batch.ndim != 2 or batch.shape[1] != d:
        raise ValueError(f"expected configurations of dimension {d}, got shape {arr.shape}")
    if np.any(batch < 0.0) or np.any(batch > 1.0) or not np.all(np.isfinite(batch)):
        raise ValueError("configurations must lie in [0, 1]^d")
    return batch, single


def _fmt(values):
    return ",".join(repr(float(v)) for v in values)


class Scene:
    kind = None
    distribution = "uniform"

    def __init__(self, d):
        if int(d) < 1:
            raise ValueError("dimension must be >= 1")
        self.d = int(d)

    def label(self, x):
        batch, single = _as_batch(x, self.d)
        out = self._label(batch)
        return int(out[0]) if single else out

    def clearance(self, x):
        batch, single = _as_batch(x, self.d)
        out = self._clearance(batch)
        return float(out[0]) if single else out

    def label_and_clearance(self, x):
        batch, _ = _as_batch(x, self.d)
        return self._label(batch), self._clearance(batch)

    def sample_uniform(self, m, seed):
        """Draw ``m`` i.i.d. uniform configurations; deterministic in ``seed``."""
        if int(m) < 1:
            raise ValueError("m must be >= 1")
        return make_rng(seed).random((int(m), self.d))

    def to_text(self):
        lines = [f"SCENE v1 {self.kind} d={self.d}"]
        lines.extend(self._geometry_lines())
        return "\n".join(lines) + "\n"

    @property
    def scene_id(self):
        digest = hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]
        return f"{self.kind}-{digest}"

    def __repr__(self):
        return f"<{type(self).__name__} {self.scene_id}>"


class DiscScene(Scene):
    kind = "disc"

    def __init__(self, center, radius):
        center = np.asarray(center, dtype=float)
        super().__init__(center.size)
        radius = float(radius)
        if radius <= 0.0:
            raise ValueError("disc radius must be positive")
        if np.any(center - radius < 0.0) or np.any(center + radius > 1.0):
            raise ValueError("disc must lie inside the unit cube for its clearance to be exact")
        self.center = center
        self.radius = radius

    def _label(self, batch):
        dist = np.linalg.norm(batch - self.center, axis=1)
        return np.where(dist <= self.radius, FORBIDDEN, FREE)

    def _clearance(self, batch):
        dist = np.linalg.norm(batch - self.center, axis=1)
        return np.abs(dist - self.radius)

    def _geometry_lines(self):
        return [f"disc.center={_fmt(self.center)}", f"disc.radius={self.radius!r}"]


class BoxUnionScene(Scene):
    """Union of closed, pairwise disjoint axis-aligned boxes.

    For a free point the clearance is the distance to the nearest box. For a
    point inside a box it is the distance to the nearest box face that is
    not flush with the cube, since free space never lies outside the cube.
    """

    kind = "box-union"

    def __init__(self, boxes):
        boxes = [np.asarray(b, dtype=float) for b in boxes]
        if not boxes:
            raise ValueError("box-union scene needs at least one box")
        if any(b.ndim != 1 or b.size % 2 for b in boxes):
            raise ValueError("each box is given as xmin..., xmax...")
        super().__init__(boxes[0].size // 2)
        d = self.d
        lo = np.array([b[:d] for b in boxes])
        hi = np.array([b[d:] for b in boxes])
        if lo.shape[1] != d or hi.shape != lo.shape:
            raise ValueError("all boxes must share one dimension")
        if np.any(lo >= hi) or np.any(lo < 0.0) or np.any(hi > 1.0):
            raise ValueError("boxes need xmin < xmax inside [0, 1]")
        for a in range(len(boxes)):
            for c in range(a + 1, len(boxes)):
                gap = np.maximum(0.0, np.maximum(lo[a] - hi[c], lo[c] - hi[a]))
                if not np.any(gap > 0.0):
                    raise ValueError(f"boxes {a} and {c} overlap or touch")
        self.lo = lo
        self.hi = hi

    def _outside_dist(self, batch):
        # (m, k): distance from each point to each box
        gap = np.maximum(self.lo[None] - batch[:, None], 0.0)
        gap = np.maximum(gap, batch[:, None] - self.hi[None])
        return np.linalg.norm(gap, axis=2)

    def _label(self, batch):
        return np.where(self._outside_dist(batch).min(axis=1) <= 0.0, FORBIDDEN, FREE)

    def _clearance(self, batch):
        out = self._outside_dist(batch)
        nearest = out.min(axis=1)
        inside = nearest <= 0.0
        result = nearest.copy()
        if np.any(inside):
            pts = batch[inside]
            box = np.argmin(out[inside], axis=1)
            lo, hi = self.lo[box], self.hi[box]
            to_lo = np.where(lo > 0.0, pts - lo, np.inf)
            to_hi = np.where(hi < 1.0, hi - pts, np.inf)
            result[inside] = np.minimum(to_lo, to_hi).min(axis=1)
        return result

    def _geometry_lines(self):
        return [f"box={_fmt(np.concatenate([lo, hi]))}" for lo, hi in zip(self.lo, self.hi)]


def _segment_point_distance(a, b, p):
    """Distance from points ``p`` (k, 2) to segments ``a -> b`` (m, 2); returns (m, k)."""
    ab = b - a
    ap = p[None, :, :] - a[:, None, :]
    denom = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)[:, None]
    t = np.clip(np.einsum("mkj,mj->mk", ap, ab) / denom, 0.0, 1.0)
    closest = a[:, None, :] + t[..., None] * ab[:, None, :]
    return np.linalg.norm(p[None, :, :] - closest, axis=2)


class TwoLinkScene(Scene):
    """Planar two-link arm; configuration ``(u, v)`` maps to joint angles.

    ``theta1 = 2 pi u - pi`` is the shoulder angle and ``theta2 = 2 pi v - pi``
    the elbow angle relative to the first link. A configuration is forbidden
    when either link segment touches an obstacle disc.

    Clearance never underestimates the exact value. It overestimates by about
    half a grid-cell diagonal at most, except near frontier features that
    fall between grid lines altogether.
    """

    kind = "two-link"

    def __init__(self, link_lengths, obstacles, base=(0.0, 0.0), grid=1024):
        super().__init__(2)
        self.link_lengths = tuple(float(v) for v in link_lengths)
        if len(self.link_lengths) != 2 or min(self.link_lengths) <= 0.0:
            raise ValueError("two positive link lengths required")
        obstacles = np.asarray(obstacles, dtype=float).reshape(-1, 3)
        if len(obstacles) == 0 or np.any(obstacles[:, 2] <= 0.0):
            raise ValueError("at least one obstacle disc with positive radius required")
        self.obstacles = obstacles
        self.base = np.asarray(base, dtype=float)
        if self.base.shape != (2,):
            raise ValueError("base must be a workspace point (x, y)")
        self.grid = int(grid)
        if self.grid < 2:
            raise ValueError("clearance grid needs at least 2 cells per axis")

    def joint_angles(self, batch):
        return 2.0 * np.pi * np.asarray(batch, dtype=float) - np.pi

    def forward_kinematics(self, batch):
        """Return (elbow, tip) workspace positions, each of shape (m, 2)."""
        th = self.joint_angles(batch)
        l1, l2 = self.link_lengths
        elbow = self.base + l1 * np.stack([np.cos(th[:, 0]), np.sin(th[:, 0])], axis=1)
        phi = th[:, 0] + th[:, 1]
        tip = elbow + l2 * np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return elbow, tip

    def _label(self, batch):
        out = np.empty(len(batch), dtype=int)
        centers, radii = self.obstacles[:, :2], self.obstacles[:, 2]
        for start in range(0, len(batch), 1 << 16):
            chunk = batch[start:start + (1 << 16)]
            elbow, tip = self.forward_kinematics(chunk)
            base = np.broadcast_to(self.base, elbow.shape)
            d1 = _segment_point_distance(base, elbow, centers)
            d2 = _segment_point_distance(elbow, tip, centers)
            hit = np.any((d1 <= radii) | (d2 <= radii), axis=1)
            out[start:start + len(chunk)] = np.where(hit, FORBIDDEN, FREE)
        return out

    def _node_axis(self):
        return np.linspace(0.0, 1.0, self.grid + 1)

    def label_grid(self):
        """Labels at the grid nodes ``(i/grid, j/grid)``, shape ``(grid + 1, grid + 1)``."""
        axis = self._node_axis()
        uu, vv = np.meshgrid(axis, axis, indexing="ij")
        return self._label(np.column_stack([uu.ravel(), vv.ravel()])).reshape(len(axis), len(axis))

    @cached_property
    def frontier_points(self):
        """Points on the free/forbidden frontier, one per grid edge whose end labels differ.

        Each is located by bisection along its edge with the exact label
        oracle, so it is a genuine frontier point up to ~1e-15.
        """
        axis = self._node_axis()
        labels = self.label_grid()
        ends = []
        for axis_dir in (0, 1):
            a = labels[:-1, :] if axis_dir == 0 else labels[:, :-1]
            b = labels[1:, :] if axis_dir == 0 else labels[:, 1:]
            i, j = np.nonzero(a != b)
            lo = np.column_stack([axis[i], axis[j]])
            hi = lo.copy()
            hi[:, axis_dir] = axis[(i, j)[axis_dir] + 1]
            ends.append((lo, hi))
        lo = np.concatenate([e[0] for e in ends])
        hi = np.concatenate([e[1] for e in ends])
        if len(lo) == 0:
            return np.empty((0, 2))
        lo_label = self._label(lo)
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            same = self._label(mid) == lo_label
            lo[same] = mid[same]
            hi[~same] = mid[~same]
        return 0.5 * (lo + hi)

    @cached_property
    def _frontier_tree(self):
        pts = self.frontier_points
        return cKDTree(pts) if len(pts) else None

    def _clearance(self, batch):
        tree = self._frontier_tree
        if tree is None:
            return np.full(len(batch), math.sqrt(2.0))
        dist, _ = tree.query(batch)
        return dist

    @property
    def cell_diagonal(self):
        return math.sqrt(2.0) / self.grid

    def _geometry_lines(self):
        lines = [f"link.lengths={_fmt(self.link_lengths)}", f"base={_fmt(self.base)}"]
        lines.extend(f"obstacle.disc={_fmt(ob)}" for ob in self.obstacles)
        lines.append(f"clearance.grid={self.grid}")
        return lines


_KEYS = {
    "disc": {"disc.center", "disc.radius", "distribution"},
    "box-union": {"box", "distribution"},
    "two-link": {"link.lengths", "obstacle.disc", "base", "clearance.grid", "distribution"},
}
_REPEATABLE = {"box", "obstacle.disc"}


def _floats(value, lineno):
    try:
        return [float(tok) for tok in value.split(",")]
    except ValueError:
        raise SceneFormatError(f"line {lineno}: expected comma-separated numbers, got {value!r}") from None


def parse_scene(text):
    """Build a scene from its ``SCENE v1`` text description."""
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise SceneFormatError("empty scene description")
    _, header = lines[0]
    parts = header.split()
    if len(parts) != 4 or parts[0] != "SCENE" or not parts[3].startswith("d="):
        raise SceneFormatError(f"line 1: bad header {header!r}")
    if parts[1] != "v1":
        raise SceneFormatError(f"unsupported scene version {parts[1]!r}")
    kind = parts[2]
    if kind not in _KEYS:
        raise SceneFormatError(f"unknown scene kind {kind!r}")
    try:
        d = int(parts[3][2:])
    except ValueError:
        raise SceneFormatError(f"line 1: bad dimension {parts[3]!r}") from None

    fields = {}
    for lineno, line in lines[1:]:
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise SceneFormatError(f"line {lineno}: expected key=value")
        if key not in _KEYS[kind]:
            raise SceneFormatError(f"line {lineno}: unknown key {key!r} for {kind} scene")
        if key in fields and key not in _REPEATABLE:
            raise SceneFormatError(f"line {lineno}: duplicate key {key!r}")
        fields.setdefault(key, []).append((lineno, value.strip()))

    dist = fields.pop("distribution", [(0, "uniform")])[0][1]
    if dist != "uniform":
        raise SceneFormatError(f"unsupported sampling distribution {dist!r}")

    def need(key):
        if key not in fields:
            raise SceneFormatError(f"{kind} scene requires {key!r}")
        return fields[key]

    try:
        if kind == "disc":
            (ln, center), = need("disc.center")
            (lr, radius), = need("disc.radius")
            scene = DiscScene(_floats(center, ln), _floats(radius, lr)[0])
        elif kind == "box-union":
            scene = BoxUnionScene([_floats(v, ln) for ln, v in need("box")])
        else:
            (ll, lengths), = need("link.lengths")
            obstacles = [_floats(v, ln) for ln, v in need("obstacle.disc")]
            if any(len(ob) != 3 for ob in obstacles):
                raise SceneFormatError("obstacle.disc takes wx,wy,r")
            kwargs = {}
            if "base" in fields:
                (lb, base), = fields["base"]
                kwargs["base"] = _floats(base, lb)
            if "clearance.grid" in fields:
                (lg, grid), = fields["clearance.grid"]
                try:
                    kwargs["grid"] = int(grid)
                except ValueError:
                    raise SceneFormatError(f"line {lg}: clearance.grid must be an integer") from None
            scene = TwoLinkScene(_floats(lengths, ll), obstacles, **kwargs)
    except SceneFormatError:
        raise
    except ValueError as exc:
        raise SceneFormatError(str(exc)) from None
    if scene.d != d:
        raise SceneFormatError(f"header declares d={d} but geometry has d={scene.d}")
    return scene


def load_scene(path):
    """Load a scene file. Bare names resolve to the bundled scenes (``disc``, ``two-link``, ...)."""
    p = Path(path)
    if not p.exists():
        bundled = DATA_DIR / f"{path}.scene"
        if bundled.exists():
            p = bundled
    return parse_scene(p.read_text(encoding="utf-8"))


def save_scene(scene, path):
    Path(path).write_text(scene.to_text(), encoding="utf-8")
