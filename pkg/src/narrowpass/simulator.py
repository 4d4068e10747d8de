"""Two-vehicle kinematic simulator on a generated narrow-road scenario.

Vehicles follow a kinematic bicycle model and step simultaneously. Each agent
carries an absorbing terminal status; once terminal, a vehicle is frozen in
place and its body no longer appears in collision checks or lidar sweeps.
Observations are a 16-ray lidar sweep plus normalized ego features, all
components in [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import (
    circles_overlap_rect_batch,
    rays_vs_circles,
    rays_vs_segments,
    rect_corners,
    rects_overlap,
    segments_of_polygon,
    unit,
    wrap_angle,
)
from .scenario import (
    ROAD_END_MARGIN,
    ScenarioConfig,
    VEHICLE_LENGTH,
    VEHICLE_WIDTH,
    WHEELBASE,
)

MAX_WHEEL_ANGLE = math.radians(35.0)
MAX_ACCEL = 3.0  # m/s^2
N_RAYS = 16
LIDAR_RANGE = 30.0
N_EGO_FEATURES = 6
OBS_DIM = N_RAYS + N_EGO_FEATURES

_RAY_OFFSETS = np.arange(N_RAYS) * (2.0 * math.pi / N_RAYS)


class Status(Enum):
    RUNNING = "running"
    REACH_GOAL = "reach_goal"
    COLLISION = "collision"
    OFF_ROAD = "off_road"
    TIMEOUT = "timeout"

    @property
    def terminal(self) -> bool:
        return self is not Status.RUNNING


TERMINAL_PRIORITY = (Status.COLLISION, Status.OFF_ROAD, Status.REACH_GOAL, Status.TIMEOUT)


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float  # rad, in (-pi, pi]
    speed: float  # m/s, within [0, v_max]

    def corners(self) -> np.ndarray:
        return rect_corners(self.x, self.y, self.heading, VEHICLE_LENGTH, VEHICLE_WIDTH)

    def front_axle(self) -> np.ndarray:
        half = WHEELBASE / 2.0
        return np.array(
            [self.x + half * math.cos(self.heading), self.y + half * math.sin(self.heading)]
        )


@dataclass(frozen=True)
class ActionCommand:
    steer: float  # [-1, 1] -> wheel angle +-35 deg
    accel: float  # [-1, 1] -> +-3 m/s^2

    def clamped(self) -> "ActionCommand":
        return ActionCommand(
            steer=min(1.0, max(-1.0, self.steer)),
            accel=min(1.0, max(-1.0, self.accel)),
        )


@dataclass
class StepOutcome:
    statuses: tuple[Status, Status]
    progress: np.ndarray  # (2,) meters remaining to each agent's goal line
    inter_vehicle_distance: float


def bicycle_step(state: VehicleState, cmd: ActionCommand, dt: float, v_max: float) -> VehicleState:
    """One kinematic bicycle update; commands are clamped before use."""
    cmd = cmd.clamped()
    delta = cmd.steer * MAX_WHEEL_ANGLE
    accel = cmd.accel * MAX_ACCEL
    v = state.speed
    x = state.x + v * math.cos(state.heading) * dt
    y = state.y + v * math.sin(state.heading) * dt
    heading = wrap_angle(state.heading + (v / WHEELBASE) * math.tan(delta) * dt)
    speed = min(max(state.speed + accel * dt, 0.0), v_max)
    return VehicleState(x, y, float(heading), speed)


def cast_lidar(
    scene: ScenarioConfig, ego: VehicleState, other: VehicleState | None
) -> np.ndarray:
    """16 ray distances in meters, capped at LIDAR_RANGE, ray 0 along heading.

    ``other`` is the other vehicle's body, or None if it has despawned.
    """
    origin = np.array([ego.x, ego.y])
    dirs = unit(_RAY_OFFSETS + ego.heading)
    t = rays_vs_segments(origin, dirs, scene.boundary_segments)
    t = np.minimum(
        t, rays_vs_circles(origin, dirs, scene.obstacle_centers, scene.obstacle_radii)
    )
    if other is not None:
        t = np.minimum(t, rays_vs_segments(origin, dirs, segments_of_polygon(other.corners())))
    return np.minimum(t, LIDAR_RANGE)


def longitudinal_progress(scene: ScenarioConfig, state: VehicleState, agent_id: int) -> float:
    """Arc-length distance along the agent's travel direction to its goal line.

    Negative once the vehicle center has passed the goal.
    """
    s, _ = scene.centerline.project(np.array([state.x, state.y]), extended=True)
    return _remaining(scene, float(s), agent_id)


def _remaining(scene: ScenarioConfig, s: float, agent_id: int) -> float:
    # agent 0 travels toward increasing s, agent 1 toward decreasing s
    if agent_id == 0:
        return float(scene.goal_s[0]) - s
    return s - float(scene.goal_s[1])


def check_termination(
    scene: ScenarioConfig,
    states: tuple[VehicleState, VehicleState],
    step_count: int,
    prior: tuple[Status, Status] = (Status.RUNNING, Status.RUNNING),
) -> StepOutcome:
    """Classify both agents after a dynamics update.

    Priority on simultaneous events: Collision > OffRoad > ReachGoal >
    Timeout. Prior terminal statuses are absorbing and returned unchanged.
    """
    line = scene.centerline
    hw = scene.half_width
    statuses: list[Status] = list(prior)
    progress = np.empty(2)
    corners = [st.corners() for st in states]
    for i, st in enumerate(states):
        pts = np.vstack([[st.x, st.y], st.front_axle(), corners[i]])
        s_ext, lat = line.project(pts, extended=True)
        progress[i] = _remaining(scene, float(s_ext[0]), i)
        if prior[i].terminal:
            continue
        other = 1 - i
        hit_other = (not prior[other].terminal) and rects_overlap(corners[i], corners[other])
        if hit_other or circles_overlap_rect_batch(
            corners[i], scene.obstacle_centers, scene.obstacle_radii
        ):
            statuses[i] = Status.COLLISION
        elif bool(
            np.any(np.abs(lat[2:]) > hw)
            or np.any(s_ext[2:] < -ROAD_END_MARGIN)
            or np.any(s_ext[2:] > line.length + ROAD_END_MARGIN)
        ):
            statuses[i] = Status.OFF_ROAD
        elif _remaining(scene, float(s_ext[1]), i) <= 0.0:
            statuses[i] = Status.REACH_GOAL
        elif step_count >= scene.max_steps:
            statuses[i] = Status.TIMEOUT
    d = math.hypot(states[0].x - states[1].x, states[0].y - states[1].y)
    return StepOutcome(statuses=(statuses[0], statuses[1]), progress=progress, inter_vehicle_distance=d)


class NarrowRoadEnv:
    """Owns the per-episode mutable state: vehicle poses, statuses, step count."""

    def __init__(self, scene: ScenarioConfig):
        self.scene = scene
        self.states: list[VehicleState] = []
        self.statuses: list[Status] = [Status.RUNNING, Status.RUNNING]
        self.prev_cmds = np.zeros((2, 2))
        self.step_count = 0
        self.progress = np.zeros(2)
        self.reset()

    def reset(self) -> np.ndarray:
        self.states = [
            VehicleState(x=float(p[0]), y=float(p[1]), heading=float(p[2]), speed=0.0)
            for p in self.scene.spawn_poses
        ]
        self.statuses = [Status.RUNNING, Status.RUNNING]
        self.prev_cmds = np.zeros((2, 2))
        self.step_count = 0
        for i in (0, 1):
            self.progress[i] = longitudinal_progress(self.scene, self.states[i], i)
        return self.observations()

    @property
    def done(self) -> bool:
        return all(s.terminal for s in self.statuses)

    def step(self, actions: np.ndarray) -> tuple[np.ndarray, StepOutcome, dict]:
        """Simultaneous update of both vehicles, then termination, then observations.

        ``actions`` is (2, 2) raw [steer, accel] rows; values are clamped here.
        Terminal agents are frozen and ignore their action.
        """
        was_running = np.array([not s.terminal for s in self.statuses])
        progress_before = self.progress.copy()
        self.step_count += 1
        new_states = []
        for i in (0, 1):
            if was_running[i]:
                cmd = ActionCommand(float(actions[i, 0]), float(actions[i, 1])).clamped()
                new_states.append(bicycle_step(self.states[i], cmd, self.scene.dt, self.scene.v_max))
                self.prev_cmds[i] = (cmd.steer, cmd.accel)
            else:
                new_states.append(self.states[i])
        self.states = new_states
        outcome = check_termination(
            self.scene,
            (self.states[0], self.states[1]),
            self.step_count,
            prior=(self.statuses[0], self.statuses[1]),
        )
        self.statuses = list(outcome.statuses)
        self.progress = outcome.progress.copy()
        info = {
            "was_running": was_running,
            "progress_before": progress_before,
            "speeds": np.array([st.speed for st in self.states]),
            "newly_terminal": np.array(
                [was_running[i] and self.statuses[i].terminal for i in (0, 1)]
            ),
        }
        return self.observations(), outcome, info

    def observations(self) -> np.ndarray:
        obs = np.empty((2, OBS_DIM))
        for i in (0, 1):
            obs[i] = self._observe(i)
        return obs

    def _observe(self, agent_id: int) -> np.ndarray:
        scene = self.scene
        ego = self.states[agent_id]
        other_id = 1 - agent_id
        other = self.states[other_id] if not self.statuses[other_id].terminal else None
        lidar = cast_lidar(scene, ego, other) / LIDAR_RANGE

        line = scene.centerline
        s, lat = line.project(np.array([ego.x, ego.y]), extended=True)
        tan = line.tangent_at(min(max(s, 0.0), line.length))
        travel_heading = math.atan2(tan[1], tan[0])
        sign = 1.0
        if agent_id == 1:
            travel_heading = math.atan2(-tan[1], -tan[0])
            sign = -1.0  # left of travel flips with direction
        heading_err = wrap_angle(ego.heading - travel_heading) / math.pi
        ego_feats = np.array(
            [
                ego.speed / scene.v_max,
                heading_err,
                sign * lat / scene.half_width,
                _remaining(scene, s, agent_id) / scene.road_length,
                self.prev_cmds[agent_id, 0],
                self.prev_cmds[agent_id, 1],
            ]
        )
        np.clip(ego_feats, -1.0, 1.0, out=ego_feats)
        return np.concatenate([lidar, ego_feats])
