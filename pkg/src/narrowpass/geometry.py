"""2D geometry kernels: ray casting, oriented rectangles, polyline projection.

All ray routines are vectorized over rays and obstacles; callers keep scene
geometry in flat float64 arrays so a full lidar sweep is a handful of numpy
calls.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def wrap_angle(theta):
    """Normalize an angle (or array of angles) to (-pi, pi].

    Values already in range pass through untouched, so adding zero to a
    heading cannot perturb it.
    """
    theta = np.asarray(theta)
    in_range = (theta > -np.pi) & (theta <= np.pi)
    wrapped = np.where(in_range, theta, -((-theta + np.pi) % (2.0 * np.pi) - np.pi))
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def unit(theta):
    """Unit direction vector(s) for heading angle(s)."""
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def rotate_points(points: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(points) @ rot.T


def rect_corners(x: float, y: float, heading: float, length: float, width: float) -> np.ndarray:
    """Corners of an oriented rectangle centered at (x, y), CCW order, shape (4, 2)."""
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    return rotate_points(local, heading) + np.array([x, y])


def rays_vs_circles(
    origin: np.ndarray, dirs: np.ndarray, centers: np.ndarray, radii: np.ndarray
) -> np.ndarray:
    """Nearest positive hit distance per ray against a set of circles.

    dirs must be unit vectors, shape (R, 2); centers (C, 2); radii (C,).
    Returns (R,) distances, inf where a ray misses everything.
    """
    if len(centers) == 0:
        return np.full(len(dirs), np.inf)
    rel = centers[None, :, :] - origin[None, None, :]  # (1, C, 2) broadcast to (R, C, 2)
    b = np.einsum("rd,rcd->rc", dirs, np.broadcast_to(rel, (len(dirs),) + rel.shape[1:]))
    c = np.sum(rel * rel, axis=-1) - radii[None, :] ** 2  # (1, C)
    disc = b * b - c
    hit = disc >= 0.0
    sqrt_disc = np.sqrt(np.where(hit, disc, 0.0))
    t_near = b - sqrt_disc
    t_far = b + sqrt_disc
    # take the near root when it is ahead of the origin, else the far one
    t = np.where(t_near >= 0.0, t_near, t_far)
    t = np.where(hit & (t >= 0.0), t, np.inf)
    return t.min(axis=1)


def rays_vs_segments(origin: np.ndarray, dirs: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Nearest positive hit distance per ray against line segments.

    segments has shape (S, 4) as [ax, ay, bx, by]. Returns (R,) distances,
    inf where a ray hits nothing.
    """
    if len(segments) == 0:
        return np.full(len(dirs), np.inf)
    a = segments[:, 0:2]
    e = segments[:, 2:4] - a  # (S, 2)
    ao = a[None, :, :] - origin[None, None, :]  # (1, S, 2)
    denom = dirs[:, 0:1] * e[None, :, 1] - dirs[:, 1:2] * e[None, :, 0]  # (R, S)
    ok = np.abs(denom) > _EPS
    safe = np.where(ok, denom, 1.0)
    t = (ao[..., 0] * e[None, :, 1] - ao[..., 1] * e[None, :, 0]) / safe
    u = (ao[..., 0] * dirs[:, 1:2] - ao[..., 1] * dirs[:, 0:1]) / safe
    valid = ok & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    return t.min(axis=1)


def segments_of_polygon(corners: np.ndarray) -> np.ndarray:
    """Edges of a closed polygon given its vertices, as an (n, 4) array."""
    nxt = np.roll(corners, -1, axis=0)
    return np.hstack([corners, nxt])


def _project_interval(corners: np.ndarray, axis: np.ndarray) -> tuple[float, float]:
    proj = corners @ axis
    return float(proj.min()), float(proj.max())


def rects_overlap(corners_a: np.ndarray, corners_b: np.ndarray) -> bool:
    """Separating-axis test for two oriented rectangles given as (4, 2) corners."""
    for corners in (corners_a, corners_b):
        for i in range(2):
            edge = corners[i + 1] - corners[i]
            axis = np.array([-edge[1], edge[0]])
            a_lo, a_hi = _project_interval(corners_a, axis)
            b_lo, b_hi = _project_interval(corners_b, axis)
            if a_hi < b_lo or b_hi < a_lo:
                return False
    return True


def rect_circle_overlap(corners: np.ndarray, center: np.ndarray, radius: float) -> bool:
    """Oriented rectangle vs circle, via closest point on the rect boundary."""
    if point_in_convex_polygon(center, corners):
        return True
    return point_polygon_edge_distance(center, corners) <= radius


def point_in_convex_polygon(p: np.ndarray, corners: np.ndarray) -> bool:
    nxt = np.roll(corners, -1, axis=0)
    edge = nxt - corners
    rel = p[None, :] - corners
    cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
    return bool(np.all(cross >= -_EPS) or np.all(cross <= _EPS))


def point_polygon_edge_distance(p: np.ndarray, corners: np.ndarray) -> float:
    """Minimum distance from a point to a polygon's edges."""
    a = corners
    b = np.roll(corners, -1, axis=0)
    e = b - a
    rel = p[None, :] - a
    denom = np.maximum(np.sum(e * e, axis=1), _EPS)
    t = np.clip(np.sum(rel * e, axis=1) / denom, 0.0, 1.0)
    closest = a + t[:, None] * e
    return float(np.min(np.hypot(*(p[None, :] - closest).T)))


def circles_overlap_rect_batch(
    corners: np.ndarray, centers: np.ndarray, radii: np.ndarray
) -> bool:
    """True if any circle intersects the oriented rectangle. Vectorized."""
    if len(centers) == 0:
        return False
    a = corners
    b = np.roll(corners, -1, axis=0)
    e = b - a  # (4, 2)
    rel = centers[:, None, :] - a[None, :, :]  # (C, 4, 2)
    denom = np.maximum(np.sum(e * e, axis=1), _EPS)  # (4,)
    t = np.clip(np.einsum("ced,ed->ce", rel, e) / denom, 0.0, 1.0)  # (C, 4)
    closest = a[None, :, :] + t[..., None] * e[None, :, :]
    d2 = np.sum((centers[:, None, :] - closest) ** 2, axis=-1)  # (C, 4)
    if np.any(d2.min(axis=1) <= radii**2):
        return True
    # centers fully inside the rectangle have positive cross with every edge
    cross = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]  # (C, 4)
    inside = np.all(cross >= -_EPS, axis=1) | np.all(cross <= _EPS, axis=1)
    return bool(np.any(inside))


class Polyline:
    """A dense polyline with arc-length bookkeeping and point projection."""

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 2 or points.shape[1] != 2:
            raise ValueError(f"polyline needs shape (N>=2, 2), got {points.shape}")
        self.points = points
        self.seg_vec = points[1:] - points[:-1]
        self.seg_len = np.hypot(self.seg_vec[:, 0], self.seg_vec[:, 1])
        if np.any(self.seg_len < _EPS):
            raise ValueError("polyline has a degenerate segment")
        self.seg_dir = self.seg_vec / self.seg_len[:, None]
        self.cum_s = np.concatenate([[0.0], np.cumsum(self.seg_len)])

    @property
    def length(self) -> float:
        return float(self.cum_s[-1])

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc length s, extrapolating along the end tangents."""
        if s <= 0.0:
            return self.points[0] + s * self.seg_dir[0]
        if s >= self.length:
            return self.points[-1] + (s - self.length) * self.seg_dir[-1]
        i = int(np.searchsorted(self.cum_s, s, side="right") - 1)
        i = min(i, len(self.seg_len) - 1)
        return self.points[i] + (s - self.cum_s[i]) * self.seg_dir[i]

    def tangent_at(self, s: float) -> np.ndarray:
        if s <= 0.0:
            return self.seg_dir[0]
        if s >= self.length:
            return self.seg_dir[-1]
        i = int(np.searchsorted(self.cum_s, s, side="right") - 1)
        i = min(i, len(self.seg_len) - 1)
        return self.seg_dir[i]

    def normal_at(self, s: float) -> np.ndarray:
        t = self.tangent_at(s)
        return np.array([-t[1], t[0]])  # left of travel

    def project(self, pts: np.ndarray, extended: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Project points onto the polyline.

        pts may be (2,) or (P, 2). Returns (s, lateral) where s is arc length
        of the closest point and lateral is the signed offset, positive to the
        left of the direction of travel. With ``extended`` the first and last
        segments extend to infinity, so s may leave [0, length]; otherwise it
        is clamped to that range.
        """
        pts = np.asarray(pts, dtype=np.float64)
        squeeze = pts.ndim == 1
        p = np.atleast_2d(pts)  # (P, 2)
        rel = p[:, None, :] - self.points[None, :-1, :]  # (P, S, 2)
        t = np.einsum("psd,sd->ps", rel, self.seg_dir) / self.seg_len[None, :]
        t = np.clip(t, 0.0, 1.0)
        closest = self.points[None, :-1, :] + (t * self.seg_len[None, :])[..., None] * self.seg_dir[None, :, :]
        diff = p[:, None, :] - closest
        d2 = np.sum(diff * diff, axis=-1)  # (P, S)
        best = np.argmin(d2, axis=1)  # (P,)
        idx = np.arange(len(p))
        s = self.cum_s[best] + t[idx, best] * self.seg_len[best]
        dvec = diff[idx, best]
        tan = self.seg_dir[best]
        lateral = tan[:, 0] * dvec[:, 1] - tan[:, 1] * dvec[:, 0]
        if extended:
            over_start = np.einsum("pd,d->p", p - self.points[0], self.seg_dir[0])
            over_end = np.einsum("pd,d->p", p - self.points[-1], self.seg_dir[-1])
            at_start = (s <= _EPS) & (over_start < 0.0)
            at_end = (s >= self.length - _EPS) & (over_end > 0.0)
            s = np.where(at_start, over_start, s)
            s = np.where(at_end, self.length + over_end, s)
            start_tan, end_tan = self.seg_dir[0], self.seg_dir[-1]
            lat_start = start_tan[0] * (p[:, 1] - self.points[0, 1]) - start_tan[1] * (
                p[:, 0] - self.points[0, 0]
            )
            lat_end = end_tan[0] * (p[:, 1] - self.points[-1, 1]) - end_tan[1] * (
                p[:, 0] - self.points[-1, 0]
            )
            lateral = np.where(at_start, lat_start, lateral)
            lateral = np.where(at_end, lat_end, lateral)
        if squeeze:
            return float(s[0]), float(lateral[0])
        return s, lateral

    def resample(self, spacing: float) -> np.ndarray:
        """Points at roughly uniform arc-length spacing (endpoints included)."""
        n = max(2, int(round(self.length / spacing)) + 1)
        stations = np.linspace(0.0, self.length, n)
        return np.array([self.point_at(s) for s in stations])
