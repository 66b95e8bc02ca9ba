"""Locate the frame in a binarized capture and warp it back to render geometry."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from . import _kernels
from .channel import round_half_up
from .errors import AmbiguousOrientation, MarkersNotFound, SingularHomography
from .frame_codec import FrameLayout
from .raster import ImageRaster

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class QuadCorners:
    """Outer corners of the data grid, ordered TL, TR, BR, BL, as ``(4, 2)`` x/y."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(4, 2)
        object.__setattr__(self, "points", pts)

    @property
    def area(self) -> float:
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def is_convex(self) -> bool:
        p = self.points
        d1 = np.roll(p, -1, axis=0) - p
        d2 = np.roll(p, -2, axis=0) - np.roll(p, -1, axis=0)
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        return bool(np.all(cross > 1e-9) or np.all(cross < -1e-9))


def grid_corners(layout: FrameLayout) -> np.ndarray:
    """Outer grid corners in render-pixel coordinates (pixel centers on integers)."""
    c, q = layout.cell_px, layout.quiet_zone_cells
    x0 = q * c - 0.5
    y0 = q * c - 0.5
    x1 = (q + layout.cols) * c - 0.5
    y1 = (q + layout.rows) * c - 0.5
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def homography(src, dst) -> np.ndarray:
    """Projective map sending the four ``src`` points onto ``dst`` (h33 = 1)."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * i] = u
        b[2 * i + 1] = v
    if np.linalg.cond(A) > 1e12:
        raise SingularHomography("point configuration is degenerate")
    try:
        h = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularHomography(str(exc)) from exc
    return np.append(h, 1.0).reshape(3, 3)


def _apply(H, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    hom = np.c_[pts, np.ones(len(pts))] @ H.T
    return hom[:, :2] / hom[:, 2:3]


def _holes(comp: np.ndarray):
    """Label image of background regions of ``comp`` not connected to its bounding-box edge."""
    lab, n = ndimage.label(~comp)
    if n == 0:
        return None
    edge = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
    keep = np.ones(n + 1, dtype=bool)
    keep[edge] = False
    keep[0] = False
    if not keep.any():
        return None
    return np.where(keep[lab], lab, 0)


def _grid_pixels(black: np.ndarray) -> np.ndarray:
    """Mask of black pixels belonging to the grid.

    Drops components touching the image border and components enclosing most
    of the other black pixels (the dark surroundings of the screen), and keeps
    only what lies inside such an enclosure when one exists.
    """
    labels, n = ndimage.label(black, structure=_EIGHT)
    if n == 0:
        raise MarkersNotFound("no black regions")
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    areas[0] = 0
    total = int(areas.sum())
    border = np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))
    keep = areas >= 4
    keep[border] = False
    keep[0] = False
    inside = None
    boxes = ndimage.find_objects(labels)
    for lab in np.argsort(areas)[::-1][:4]:
        if areas[lab] == 0:
            break
        sl = boxes[lab - 1]
        holes = _holes(labels[sl] == lab)
        if holes is None:
            continue
        # an enclosure has one hole (the screen) holding much of the other black pixels;
        # a large data component only has many small holes
        counts = np.bincount(holes[black[sl]], minlength=holes.max() + 1)
        counts[0] = 0
        best = int(counts.argmax())
        if counts[best] > 0.25 * (total - areas[lab]):
            keep[lab] = False
            region = np.zeros_like(black)
            region[sl] = holes == best
            inside = region if inside is None else inside & region
    mask = keep[labels]
    if inside is not None:
        mask &= inside
    if not mask.any():
        raise MarkersNotFound("no grid candidates inside the frame")
    return mask


def _hull_points(mask: np.ndarray) -> np.ndarray:
    rows = np.flatnonzero(mask.any(axis=1))
    left = mask[rows].argmax(axis=1)
    right = mask.shape[1] - 1 - mask[rows][:, ::-1].argmax(axis=1)
    pts = []
    for dx, dy in ((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)):
        pts.append(np.c_[left + dx, rows + dy])
        pts.append(np.c_[right + dx, rows + dy])
    pts = np.unique(np.concatenate(pts), axis=0)
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise MarkersNotFound(f"degenerate grid region: {exc}") from exc
    return pts[hull.vertices]  # counterclockwise in (x, y)


def _max_area_quad(hull: np.ndarray) -> np.ndarray:
    """Largest-area quadrilateral with vertices on the hull, in hull order."""
    n = len(hull)
    if n < 4:
        raise MarkersNotFound("grid hull has fewer than four vertices")
    k = np.arange(n)
    best, best_idx = -1.0, None
    for i in range(n):
        # indices relative to i, so the diagonal is (0, j) and sides are k < j and k > j
        p = np.roll(hull, -i, axis=0) - hull[i]
        cross = np.abs(p[:, None, 0] * p[None, :, 1] - p[:, None, 1] * p[None, :, 0])
        before = np.where(k[None, :] < k[:, None], cross, -1.0)
        after = np.where(k[None, :] > k[:, None], cross, -1.0)
        kb = before.argmax(axis=1)
        ka = after.argmax(axis=1)
        area = before[k, kb] + after[k, ka]
        area[:2] = -1.0
        area[n - 1] = -1.0
        j = int(area.argmax())
        if area[j] > best:
            best = area[j]
            best_idx = [(i + r) % n for r in (0, int(kb[j]), j, int(ka[j]))]
    return hull[best_idx]


def _line_intersection(p1, d1, p2, d2):
    A = np.array([[d1[0], -d2[0]], [d1[1], -d2[1]]])
    if abs(np.linalg.det(A)) < 1e-9:
        return None
    t = np.linalg.solve(A, p2 - p1)[0]
    return p1 + t * d1


class _Profiles:
    """Outermost mask pixel seen from each image side, per row and per column."""

    def __init__(self, mask: np.ndarray):
        h, w = mask.shape
        self.cols = mask.any(axis=0)
        self.rows = mask.any(axis=1)
        self.top = mask.argmax(axis=0) - 0.5
        self.bottom = (h - 1 - mask[::-1].argmax(axis=0)) + 0.5
        self.left = mask.argmax(axis=1) - 0.5
        self.right = (w - 1 - mask[:, ::-1].argmax(axis=1)) + 0.5


def _side_margin(extent):
    # skip the few pixels where blur rounds the locator corners
    return 0.01 * extent + 3.0


def _fit_side(prof: _Profiles, a, b, p, d, outward):
    """Side line fitted to the outermost mask pixels along the hull line ``(p, d)``.

    Each scan line across the side contributes the pixel boundary just outside
    its outermost mask pixel. Samples more than a pixel inside the hull line
    belong to white cells and are dropped; a least-squares fit trims the
    stragglers, and the remaining samples pin the line by :func:`_band_center`.
    The hull itself hugs the outermost pixel corners and sits up to a pixel
    outside the true edge.
    """
    lo, hi = sorted((a, b), key=lambda v: v[0] if abs(d[0]) >= abs(d[1]) else v[1])
    if abs(d[0]) >= abs(d[1]):
        x0, x1 = lo[0], hi[0]
        margin = _side_margin(x1 - x0)
        xs = np.arange(int(np.ceil(x0 + margin)), int(np.floor(x1 - margin)) + 1)
        xs = xs[(xs >= 0) & (xs < prof.cols.size)]
        xs = xs[prof.cols[xs]]
        ys = (prof.top if outward[1] < 0 else prof.bottom)[xs]
        pts = np.c_[xs, ys]
    else:
        y0, y1 = lo[1], hi[1]
        margin = _side_margin(y1 - y0)
        ys = np.arange(int(np.ceil(y0 + margin)), int(np.floor(y1 - margin)) + 1)
        ys = ys[(ys >= 0) & (ys < prof.rows.size)]
        ys = ys[prof.rows[ys]]
        xs = (prof.left if outward[0] < 0 else prof.right)[ys]
        pts = np.c_[xs, ys]
    if len(pts) < 8:
        return p, d
    nrm = np.array([-d[1], d[0]])
    near = np.abs((pts - p) @ nrm) <= 1.0
    pts = pts[near]
    if len(pts) < 8 or np.ptp(pts @ d) < 4:
        return p, d
    for _ in range(3):
        center = pts.mean(axis=0)
        _, _, vt = np.linalg.svd(pts - center)
        direction = vt[0] if vt[0] @ d > 0 else -vt[0]
        # samples off a neighbouring cell's side sit inward; true ones stay within half a pixel
        resid = (pts - center) @ np.array([-direction[1], direction[0]])
        keep = np.abs(resid) <= 0.6
        if keep.all() or keep.sum() < 8:
            break
        pts = pts[keep]
    refined = _band_center(pts, 0 if abs(d[0]) >= abs(d[1]) else 1)
    if refined is not None:
        center, direction = refined
    if direction @ d < 0:
        direction = -direction
    return center, direction


def _band_center(pts: np.ndarray, axis: int, half_width: float = 0.5):
    """Centre of the set of lines passing within ``half_width`` of every sample.

    Each sample lies on the pixel boundary nearest the edge, so the edge is
    within half a pixel of it across the scan. The feasible (slope, offset)
    region is a polygon; its slope midpoint and the offset midpoint at that
    slope give a line free of the sawtooth bias a least-squares fit picks up
    on shallow or sparsely sampled sides. Returns None when no line fits.
    """
    u = pts[:, axis]
    v = pts[:, 1 - axis]
    u0 = u.mean()
    du = u - u0
    A = np.r_[np.c_[du, np.ones_like(du)], -np.c_[du, np.ones_like(du)]]
    rhs = np.r_[v + half_width, -(v - half_width)]
    slopes = []
    for sign in (1.0, -1.0):
        res = linprog([sign, 0.0], A_ub=A, b_ub=rhs, bounds=[(None, None)] * 2, method="highs")
        if res.status != 0:
            return None
        slopes.append(res.x[0])
    m = 0.5 * (slopes[0] + slopes[1])
    lo = np.max(v - half_width - m * du)
    hi = np.min(v + half_width - m * du)
    c = 0.5 * (lo + hi)
    center = np.empty(2)
    center[axis], center[1 - axis] = u0, c
    direction = np.empty(2)
    direction[axis], direction[1 - axis] = 1.0, m
    return center, direction / np.hypot(*direction)


def _refine_corners(hull: np.ndarray, quad: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Replace each quad vertex by the intersection of the two adjacent side lines.

    Blur rounds the locator corners, so the hull's vertices there are unreliable;
    the long straight hull edges between locators are not. Each side line is
    seeded from the longest hull edge lying along that side and, when ``mask``
    is given, re-fitted to the boundary pixels along it.
    """
    n = len(hull)
    starts = hull
    ends = np.roll(hull, -1, axis=0)
    seg = ends - starts
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    centroid = quad.mean(axis=0)
    prof = _Profiles(mask) if mask is not None else None
    lines = []
    for k in range(4):
        a, b = quad[k], quad[(k + 1) % 4]
        side = b - a
        side_len = float(np.hypot(*side))
        if side_len == 0:
            return quad
        u = side / side_len
        tol = max(1.5, 0.01 * side_len)
        da = np.abs((starts - a) @ np.array([-u[1], u[0]]))
        db = np.abs((ends - a) @ np.array([-u[1], u[0]]))
        aligned = (da <= tol) & (db <= tol) & ((seg @ u) > 0)
        best = int(np.argmax(np.where(aligned, seg_len, -1.0)))
        if aligned[best] and seg_len[best] >= 0.3 * side_len:
            p, d = starts[best], seg[best] / seg_len[best]
        else:
            # a steep or short side digitizes into many short hull edges
            p, d = a, u
        if prof is not None:
            outward = np.array([-d[1], d[0]])
            if (p - centroid) @ outward < 0:
                outward = -outward
            p, d = _fit_side(prof, a, b, p, d, outward)
        lines.append((p, d))
    out = quad.copy()
    for k in range(4):
        p1, d1 = lines[(k - 1) % 4]
        p2, d2 = lines[k]
        x = _line_intersection(p1, d1, p2, d2)
        if x is not None and np.hypot(*(x - quad[k])) < 0.05 * n + 8:
            out[k] = x
    return out


def _sample_mean(gray: np.ndarray, H: np.ndarray, layout: FrameLayout, cell) -> float:
    """Mean of the binary image over the central half of one grid cell."""
    c, q = layout.cell_px, layout.quiet_zone_cells
    r, col = cell
    offs = (np.arange(3) - 1) * 0.25 * c
    cy = (q + r) * c + (c - 1) / 2.0
    cx = (q + col) * c + (c - 1) / 2.0
    pts = np.array([[cx + dx, cy + dy] for dy in offs for dx in offs])
    uv = _apply(H, pts)
    h, w = gray.shape
    x = np.clip(uv[:, 0], 0, w - 1)
    y = np.clip(uv[:, 1], 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(int), w - 2)
    y0 = np.minimum(np.floor(y).astype(int), h - 2)
    fx, fy = x - x0, y - y0
    g = gray
    v = (g[y0, x0] * (1 - fx) * (1 - fy) + g[y0, x0 + 1] * fx * (1 - fy)
         + g[y0 + 1, x0] * (1 - fx) * fy + g[y0 + 1, x0 + 1] * fx * fy)
    return float(v.mean())


def detect_markers(binary: ImageRaster, layout: FrameLayout = FrameLayout(),
                   max_rotation_deg: float | None = 60.0, min_margin: float = 32.0) -> QuadCorners:
    """Find the grid's outer corners in a binarized capture.

    The grid's black pixels (locators, header and data cells) are isolated from
    the dark surroundings, their convex hull is reduced to its largest inscribed
    quadrilateral and each vertex is snapped to the intersection of the adjacent
    straight sides. The cyclic order comes from the only locator whose inner
    corner cell is black; ``max_rotation_deg`` first discards orderings whose
    top edge would be rotated further than that (``None`` keeps all four).
    """
    if not layout.has_markers:
        raise MarkersNotFound("layout has no corner markers")
    px = binary.pixels if binary.channels == 1 else binary.pixels.mean(axis=2)
    black = px < 128
    if not black.any():
        raise MarkersNotFound("image has no black pixels")
    grid = _grid_pixels(black)
    hull = _hull_points(grid)
    quad = _refine_corners(hull, _max_area_quad(hull), grid)
    if abs(QuadCorners(quad).area) < 16.0:
        raise MarkersNotFound("grid region too small")

    candidates = []
    for k in range(4):
        pts = np.roll(quad, -k, axis=0)
        top = pts[1] - pts[0]
        angle = np.degrees(np.arctan2(-top[1], top[0]))
        if max_rotation_deg is None or abs(angle) <= max_rotation_deg:
            candidates.append(k)
    if not candidates:
        raise AmbiguousOrientation("no orientation within the rotation limit")
    if len(candidates) == 1:
        return QuadCorners(np.roll(quad, -candidates[0], axis=0))

    target = grid_corners(layout)
    scores = {}
    for k in candidates:
        pts = np.roll(quad, -k, axis=0)
        try:
            H = homography(target, pts)
        except SingularHomography:
            continue
        notch = [_sample_mean(px, H, layout, cell) for cell in layout.notch_cells]
        scores[k] = np.mean(notch[1:]) - notch[0]
    ranked = sorted(scores, key=scores.get, reverse=True)
    if not ranked:
        raise AmbiguousOrientation("no usable orientation")
    best = scores[ranked[0]]
    second = scores[ranked[1]] if len(ranked) > 1 else -np.inf
    if not best > min_margin or best - second < min_margin:
        raise AmbiguousOrientation(f"orientation scores {[round(float(s), 1) for s in scores.values()]}")
    return QuadCorners(np.roll(quad, -ranked[0], axis=0))


def rectify(capture: ImageRaster, corners: QuadCorners, layout: FrameLayout) -> ImageRaster:
    """Resample the quad back to a fronto-parallel raster of render size (bilinear)."""
    if not corners.is_convex() or abs(corners.area) < 1e-6:
        raise SingularHomography("corners are not a convex quadrilateral")
    H = homography(grid_corners(layout), corners.points)
    px = capture.pixels if capture.channels == 1 else capture.pixels.mean(axis=2)
    out = _kernels.warp_bilinear(px, H, layout.render_height, layout.render_width, 255.0)
    return ImageRaster(np.clip(round_half_up(out), 0, 255).astype(np.uint8))
