"""Scenario generation for the two-vehicle narrow-road meeting task.

Six difficulty levels vary obstacle density and road geometry: levels 1-3 use
a straight 100 m road with {2, 4, 6} obstacles, levels 4-6 an S-curve (two
opposing 40 m-radius arcs) with {8, 10, 12}. Obstacles are circles hugging
alternating road edges so the drivable corridor becomes a slalom. Generation
is deterministic per (level, seed) and verifies at build time that every
station along the road keeps a traversable gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .geometry import Polyline

OBSTACLES_PER_LEVEL = {1: 2, 2: 4, 3: 6, 4: 8, 5: 10, 6: 12}

ROAD_LENGTH = 100.0
ROAD_WIDTH = 7.0
V_MAX = 8.0
DT = 0.1
MAX_STEPS = 600

VEHICLE_LENGTH = 4.5
VEHICLE_WIDTH = 1.8
WHEELBASE = 2.8

CENTERLINE_RESOLUTION = 0.1
S_CURVE_RADIUS = 40.0
MIN_GAP = VEHICLE_WIDTH + 0.4  # traversable-corridor floor, checked at build time
ROAD_END_MARGIN = 5.0  # drivable overhang past each goal line
SPAWN_INSET = 4.0  # spawn station measured from each road end
OBSTACLE_SPAN = (15.0, 85.0)
OBSTACLE_RADIUS_RANGE = (0.5, 1.2)
OBSTACLE_EDGE_INSET_MAX = 0.4
BOUNDARY_SEGMENT_SPACING = 2.0
GENERATION_RETRIES = 20


class ScenarioGenerationError(RuntimeError):
    """Obstacle placement failed the corridor check for every retry."""


def straight_centerline(length: float = ROAD_LENGTH) -> np.ndarray:
    # two points are enough: projection onto a single segment is exact
    return np.array([[0.0, 0.0], [length, 0.0]])


def s_curve_centerline(
    length: float = ROAD_LENGTH,
    radius: float = S_CURVE_RADIUS,
    resolution: float = CENTERLINE_RESOLUTION,
) -> np.ndarray:
    """Two opposing circular arcs of equal arc length, starting along +x."""
    n = int(round(length / resolution)) + 1
    s = np.linspace(0.0, length, n)
    half = length / 2.0
    pts = np.empty((n, 2))
    first = s <= half
    a1 = s[first] / radius
    pts[first, 0] = radius * np.sin(a1)
    pts[first, 1] = radius * (1.0 - np.cos(a1))
    # state at the junction
    a_mid = half / radius
    mid = np.array([radius * math.sin(a_mid), radius * (1.0 - math.cos(a_mid))])
    rest = ~first
    a2 = (s[rest] - half) / radius
    heading = a_mid - a2
    # opposing arc: center sits to the right of the path at the junction
    center2 = mid + radius * np.array([math.sin(a_mid), -math.cos(a_mid)])
    pts[rest, 0] = center2[0] - radius * np.sin(heading)
    pts[rest, 1] = center2[1] + radius * np.cos(heading)
    return pts


@dataclass
class ScenarioConfig:
    level: int
    seed: int
    centerline_points: np.ndarray
    obstacle_centers: np.ndarray  # (K, 2)
    obstacle_radii: np.ndarray  # (K,)
    spawn_poses: np.ndarray  # (2, 3) rows of [x, y, heading]
    goal_s: np.ndarray  # (2,) goal-line station per agent along the centerline
    boundary_segments: np.ndarray  # (S, 4) wall segments for ray casting
    road_length: float = ROAD_LENGTH
    road_width: float = ROAD_WIDTH
    v_max: float = V_MAX
    dt: float = DT
    max_steps: int = MAX_STEPS
    _centerline: Polyline | None = field(default=None, repr=False, compare=False)

    @property
    def centerline(self) -> Polyline:
        if self._centerline is None:
            self._centerline = Polyline(self.centerline_points)
        return self._centerline

    @property
    def half_width(self) -> float:
        return self.road_width / 2.0

    def goal_line_segments(self) -> np.ndarray:
        """Lateral goal segments spanning the road, one per agent, (2, 4)."""
        segs = []
        for s in self.goal_s:
            p = self.centerline.point_at(float(s))
            n = self.centerline.normal_at(float(s))
            a = p - self.half_width * n
            b = p + self.half_width * n
            segs.append([a[0], a[1], b[0], b[1]])
        return np.array(segs)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "seed": self.seed,
            "road_length": self.road_length,
            "road_width": self.road_width,
            "v_max": self.v_max,
            "dt": self.dt,
            "max_steps": self.max_steps,
            "centerline_points": self.centerline_points.tolist(),
            "obstacle_centers": self.obstacle_centers.tolist(),
            "obstacle_radii": self.obstacle_radii.tolist(),
            "spawn_poses": self.spawn_poses.tolist(),
            "goal_s": self.goal_s.tolist(),
            "boundary_segments": self.boundary_segments.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(
            level=int(d["level"]),
            seed=int(d["seed"]),
            road_length=float(d["road_length"]),
            road_width=float(d["road_width"]),
            v_max=float(d["v_max"]),
            dt=float(d["dt"]),
            max_steps=int(d["max_steps"]),
            centerline_points=np.array(d["centerline_points"], dtype=np.float64),
            obstacle_centers=np.array(d["obstacle_centers"], dtype=np.float64).reshape(-1, 2),
            obstacle_radii=np.array(d["obstacle_radii"], dtype=np.float64),
            spawn_poses=np.array(d["spawn_poses"], dtype=np.float64),
            goal_s=np.array(d["goal_s"], dtype=np.float64),
            boundary_segments=np.array(d["boundary_segments"], dtype=np.float64).reshape(-1, 4),
        )


def _boundary_segments(
    line: Polyline, half_width: float, margin: float, spacing: float = BOUNDARY_SEGMENT_SPACING
) -> np.ndarray:
    """Side walls offset from the centerline plus end caps, coarse enough for lidar."""
    stations = np.arange(-margin, line.length + margin + 1e-9, spacing)
    if stations[-1] < line.length + margin - 1e-9:
        stations = np.append(stations, line.length + margin)
    left, right = [], []
    for s in stations:
        p = line.point_at(float(s))
        n = line.normal_at(float(s))
        left.append(p + half_width * n)
        right.append(p - half_width * n)
    left = np.array(left)
    right = np.array(right)
    segs = []
    for side in (left, right):
        segs.append(np.hstack([side[:-1], side[1:]]))
    caps = np.array(
        [
            [*left[0], *right[0]],
            [*left[-1], *right[-1]],
        ]
    )
    return np.vstack([*segs, caps])


def corridor_gap_profile(
    line: Polyline,
    half_width: float,
    obstacle_centers: np.ndarray,
    obstacle_radii: np.ndarray,
    resolution: float = 0.1,
) -> np.ndarray:
    """Widest free lateral gap at each sampled station along the road.

    Obstacle cross-sections are taken in centerline coordinates (station,
    lateral); stations step by `resolution`.
    """
    stations = np.arange(0.0, line.length + 1e-9, resolution)
    gaps = np.full(len(stations), 2.0 * half_width)
    if len(obstacle_centers) == 0:
        return gaps
    obs_s, obs_lat = line.project(obstacle_centers)
    for i, s in enumerate(stations):
        ds = s - obs_s
        active = np.abs(ds) < obstacle_radii
        if not np.any(active):
            continue
        half_chord = np.sqrt(obstacle_radii[active] ** 2 - ds[active] ** 2)
        lo = obs_lat[active] - half_chord
        hi = obs_lat[active] + half_chord
        order = np.argsort(lo)
        cursor = -half_width
        best = 0.0
        for a, b in zip(lo[order], hi[order]):
            if a > cursor:
                best = max(best, min(a, half_width) - cursor)
            cursor = max(cursor, b)
        best = max(best, half_width - cursor)
        gaps[i] = best
    return gaps


def _place_obstacles(
    line: Polyline, level: int, rng: np.random.Generator, half_width: float
) -> tuple[np.ndarray, np.ndarray]:
    count = OBSTACLES_PER_LEVEL[level]
    lo, hi = OBSTACLE_SPAN
    base = np.linspace(lo, hi, count)
    spacing = (hi - lo) / max(count - 1, 1)
    jitter = rng.uniform(-0.2, 0.2, size=count) * spacing
    stations = np.clip(base + jitter, lo, hi)
    first_side = 1.0 if rng.random() < 0.5 else -1.0
    sides = first_side * (-1.0) ** np.arange(count)
    radii = rng.uniform(*OBSTACLE_RADIUS_RANGE, size=count)
    insets = rng.uniform(0.0, OBSTACLE_EDGE_INSET_MAX, size=count)
    centers = np.empty((count, 2))
    for i, (s, side, r, inset) in enumerate(zip(stations, sides, radii, insets)):
        lat = side * (half_width - r - inset)
        centers[i] = line.point_at(float(s)) + lat * line.normal_at(float(s))
    return centers, radii


def generate_scenario(level: int, seed: int) -> ScenarioConfig:
    """Deterministic scenario for (level, seed); retries placement on a failed
    corridor check and raises ScenarioGenerationError when the budget runs out."""
    if level not in OBSTACLES_PER_LEVEL:
        raise ValueError(f"level must be 1..6, got {level}")
    points = straight_centerline() if level <= 3 else s_curve_centerline()
    line = Polyline(points)
    half_width = ROAD_WIDTH / 2.0

    seed_seq = np.random.SeedSequence(entropy=(seed, level))
    for attempt_seed in seed_seq.spawn(GENERATION_RETRIES):
        rng = np.random.Generator(np.random.PCG64(attempt_seed))
        centers, radii = _place_obstacles(line, level, rng, half_width)
        gaps = corridor_gap_profile(line, half_width, centers, radii)
        if gaps.min() >= MIN_GAP:
            break
    else:
        raise ScenarioGenerationError(
            f"no placement with a {MIN_GAP:.1f} m corridor after "
            f"{GENERATION_RETRIES} attempts (level={level}, seed={seed})"
        )

    spawn_s = np.array([SPAWN_INSET, line.length - SPAWN_INSET])
    poses = np.empty((2, 3))
    for agent, s in enumerate(spawn_s):
        p = line.point_at(float(s))
        t = line.tangent_at(float(s))
        heading = math.atan2(t[1], t[0])
        if agent == 1:
            heading = math.atan2(-t[1], -t[0])  # faces back down the road
        poses[agent] = [p[0], p[1], heading]
    goal_s = np.array([line.length, 0.0])

    # straight walls collapse to one segment per side
    wall_spacing = 2.0 * (line.length + ROAD_END_MARGIN) if level <= 3 else BOUNDARY_SEGMENT_SPACING
    return ScenarioConfig(
        level=level,
        seed=seed,
        centerline_points=points,
        obstacle_centers=centers,
        obstacle_radii=radii,
        spawn_poses=poses,
        goal_s=goal_s,
        boundary_segments=_boundary_segments(line, half_width, ROAD_END_MARGIN, wall_spacing),
    )
