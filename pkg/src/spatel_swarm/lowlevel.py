"""Per-robot execution of a flow plan.

Robots in a cell are matched to the planned outgoing flows greedily by
distance to the cell edge they will cross, then move one cell width per
step at constant velocity. Positions are piecewise linear in time, so the
simulator integrates exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridConfig, OccupancyMatrix, cell_bounds, cell_of, neighbors


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SwarmState:
    positions: np.ndarray  # (N, 2) array of (x, y) in metres
    time: float

    def occupancy(self, cfg: GridConfig) -> OccupancyMatrix:
        return OccupancyMatrix.from_positions(cfg, self.positions)


@dataclass(frozen=True)
class ControlSegment:
    robot: int
    k: int
    t0: float
    t1: float
    velocity: tuple[float, float]

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass
class Trajectory:
    cfg: GridConfig
    start: np.ndarray  # positions at step 0
    moves: list  # per step, (N, 2) integer cell displacement (dj, -di)
    segments: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.moves)

    @property
    def robot_count(self) -> int:
        return len(self.start)

    def boundary_positions(self, k: int) -> np.ndarray:
        """Positions at ``t = k * dt``; built from integer offsets so no drift accumulates."""
        off = np.zeros_like(self.start)
        for m in self.moves[:k]:
            off = off + m
        return self.start + off * self.cfg.cell_width

    def state_at(self, t: float) -> SwarmState:
        dt = self.cfg.step
        if self.K == 0 or t <= 0:
            return SwarmState(self.boundary_positions(0), t)
        k = min(int(math.floor(t / dt)), self.K - 1)
        s = min((t - k * dt) / dt, 1.0)
        p = self.boundary_positions(k) + s * self.moves[k] * self.cfg.cell_width
        return SwarmState(p, t)

    def frames(self) -> list[OccupancyMatrix]:
        return [OccupancyMatrix.from_positions(self.cfg, self.boundary_positions(k))
                for k in range(self.K + 1)]

    def samples(self, per_step: int = 1) -> list[SwarmState]:
        if per_step < 1:
            raise ValueError("per_step must be >= 1")
        dt = self.cfg.step
        out = []
        for k in range(self.K):
            for s in range(per_step):
                out.append(self.state_at(k * dt + s * dt / per_step))
        out.append(SwarmState(self.boundary_positions(self.K), self.K * dt))
        return out

    def max_speed(self) -> float:
        return max((seg.speed for seg in self.segments), default=0.0)

    def to_csv(self, per_step: int = 1) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "robot_id", "x", "y"])
        for st in self.samples(per_step):
            for r, (x, y) in enumerate(st.positions):
                w.writerow([f"{st.time:.6g}", r, f"{x:.6f}", f"{y:.6f}"])
        return buf.getvalue()


def place_uniform(cfg: GridConfig, N0: OccupancyMatrix, seed: int = 0, margin: float = 0.1) -> np.ndarray:
    """Random positions realizing ``N0``, robots numbered in row-major cell order.

    Each robot lands uniformly in the inner ``[margin, 1 - margin]`` part of its
    cell, which keeps it off the cell borders.
    """
    if N0.depth != cfg.depth:
        raise SimulationError(f"occupancy depth {N0.depth} != grid depth {cfg.depth}")
    rng = np.random.default_rng(seed)
    pts = []
    for i in range(cfg.size):
        for j in range(cfg.size):
            (x0, x1), (y0, y1) = cell_bounds(cfg, i, j)
            for _ in range(N0[i, j]):
                u, v = rng.uniform(margin, 1 - margin, 2)
                pts.append((x0 + u * (x1 - x0), y0 + v * (y1 - y0)))
    return np.array(pts, dtype=float).reshape(-1, 2)


def _edge_distance(cfg: GridConfig, cell, nb, p) -> float:
    (x0, x1), (y0, y1) = cell_bounds(cfg, *cell)
    di, dj = nb[0] - cell[0], nb[1] - cell[1]
    if di == -1:
        return y1 - p[1]
    if di == 1:
        return p[1] - y0
    if dj == -1:
        return p[0] - x0
    return x1 - p[0]


def assign(cfg: GridConfig, cell, robots, positions, demand: dict) -> dict:
    """Match robots of ``cell`` to outgoing flows.

    ``robots`` are robot indices in the cell, ``demand`` maps a neighbour cell
    to the number of robots that must move there. Repeatedly the robot closest
    to an edge whose neighbour still needs robots is sent across that edge;
    ties go to the lower robot index, then the earlier neighbour in row-major
    order. Returns ``{neighbour: [robot, ...]}``.
    """
    cell = tuple(cell)
    nbs = neighbors(cfg.size, *cell)
    left = {}
    for nb, d in demand.items():
        nb = tuple(nb)
        if nb not in nbs:
            raise SimulationError(f"{cell}->{nb} is not a grid edge")
        if d < 0:
            raise SimulationError(f"negative demand {d} on {cell}->{nb}")
        if d:
            left[nb] = int(d)
    if sum(left.values()) > len(robots):
        raise SimulationError(
            f"cell {cell} must send {sum(left.values())} robots but holds {len(robots)}"
        )
    free = sorted(robots)
    out: dict = {nb: [] for nb in left}
    order = {nb: t for t, nb in enumerate(nbs)}
    while any(left.values()):
        best = None
        for r in free:
            for nb, d in left.items():
                if d:
                    key = (_edge_distance(cfg, cell, nb, positions[r]), r, order[nb])
                    if best is None or key < best[0]:
                        best = (key, r, nb)
        _, r, nb = best
        out[nb].append(r)
        left[nb] -= 1
        free.remove(r)
    return out


def simulate(plan, initial: np.ndarray, cfg: GridConfig) -> Trajectory:
    """Execute ``plan`` from robot positions ``initial`` (an ``(N, 2)`` array)."""
    pos = np.asarray(initial, dtype=float).reshape(-1, 2)
    half = cfg.side_length / 2
    if (np.abs(pos) > half + 1e-12).any():
        raise SimulationError("initial positions must lie inside the workspace")
    speed = cfg.cell_width / cfg.step
    if speed > cfg.max_speed * (1 + 1e-12):
        raise SimulationError(f"one cell per step needs {speed} m/s > u_m = {cfg.max_speed}")
    if plan.step != cfg.step:
        raise SimulationError(f"plan step {plan.step} != configured step {cfg.step}")
    frames = plan.occupancies
    if OccupancyMatrix.from_positions(cfg, pos) != frames[0]:
        raise SimulationError("initial positions do not match the plan's first occupancy frame")
    traj = Trajectory(cfg, pos.copy(), [])
    for k in range(len(frames) - 1):
        cur = traj.boundary_positions(k)
        cells: dict = {}
        for r, p in enumerate(cur):
            cells.setdefault(cell_of(cfg, *p), []).append(r)
        move = np.zeros_like(pos)
        for i in range(cfg.size):
            for j in range(cfg.size):
                demand = {nb: plan.flow(k, (i, j), nb) for nb in neighbors(cfg.size, i, j)}
                if not any(demand.values()):
                    continue
                for nb, rs in assign(cfg, (i, j), cells.get((i, j), []), cur, demand).items():
                    d = (nb[1] - j, i - nb[0])
                    vel = (d[0] * speed, d[1] * speed)
                    for r in rs:
                        move[r] = d
                        traj.segments.append(ControlSegment(r, k, k * cfg.step, (k + 1) * cfg.step, vel))
        traj.moves.append(move)
        got = OccupancyMatrix.from_positions(cfg, traj.boundary_positions(k + 1))
        if got != frames[k + 1]:
            raise SimulationError(f"simulated occupancy at step {k + 1} differs from the plan")
    traj.segments.sort(key=lambda s: (s.k, s.robot))
    return traj
