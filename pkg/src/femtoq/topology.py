"""Node placement, ring-state encoding, and macro-user proximity geometry."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


class Position(NamedTuple):
    x: float
    y: float


def distance(a: Position, b: Position) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class Topology:
    """Fixed placement of the macro station, macro user, femto stations and users."""

    mbs: Position
    mue: Position
    fbs: tuple[Position, ...]
    fue: tuple[Position, ...]

    def __post_init__(self):
        if len(self.fbs) < 1:
            raise ValueError("at least one femto base station is required")
        if len(self.fbs) != len(self.fue):
            raise ValueError(
                f"femto station/user counts differ: {len(self.fbs)} vs {len(self.fue)}"
            )
        nodes = [self.mbs, self.mue, *self.fbs, *self.fue]
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                if nodes[i] == nodes[j]:
                    raise ValueError(f"coincident nodes at {nodes[i]}")

    @property
    def m(self) -> int:
        return len(self.fbs)


@dataclass(frozen=True)
class RingRadii:
    """Ring boundaries (meters) around the macro station and the macro user."""

    mbs: tuple[float, ...]
    mue: tuple[float, ...]

    def __post_init__(self):
        for name, radii in (("mbs", self.mbs), ("mue", self.mue)):
            if len(radii) == 0:
                raise ValueError(f"{name} ring radii must be nonempty")
            if any(r <= 0 for r in radii):
                raise ValueError(f"{name} ring radii must be positive")
            if any(a >= b for a, b in zip(radii, radii[1:])):
                raise ValueError(f"{name} ring radii must be strictly ascending")

    @property
    def n_states(self) -> int:
        return (len(self.mbs) + 1) * (len(self.mue) + 1)


class AgentState(NamedTuple):
    """Discretized location: ring index around the macro station and the macro user."""

    mbs_ring: int
    mue_ring: int


def ring_index(d: float, radii: Sequence[float]) -> int:
    """Index of the ring containing distance ``d``.

    Returns the number of boundaries strictly smaller than ``d``: 0 inside
    the innermost ring (boundary distances belong to the inner ring) up to
    ``len(radii)`` beyond the outermost boundary.
    """
    if len(radii) == 0:
        raise ValueError("ring radii must be nonempty")
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    return bisect_left(radii, d)


def agent_state(fbs: Position, mbs: Position, mue: Position, radii: RingRadii) -> AgentState:
    """Ring state of a femto station relative to the macro station and user."""
    return AgentState(
        ring_index(distance(fbs, mbs), radii.mbs),
        ring_index(distance(fbs, mue), radii.mue),
    )


def proximity_ratio(fbs: Position, mue: Position, d_th: float) -> float:
    """Femto-to-macro-user distance normalized by the vicinity threshold.

    Below 1 the station sits inside the macro user's vicinity; the value
    weights the reward's fairness terms, so a zero distance is rejected.
    """
    if d_th <= 0:
        raise ValueError(f"vicinity threshold must be positive, got {d_th}")
    d = distance(fbs, mue)
    if d == 0.0:
        raise ValueError("femto station coincides with the macro user")
    return d / d_th


def generate_layout(
    m: int,
    spacing: float,
    fue_radius: float,
    mbs_pos: Position,
    mue_pos: Position,
    seed,
    *,
    min_fue_distance: float = 0.5,
) -> Topology:
    """Place ``m`` femto stations on a square grid and drop one user near each.

    The grid is filled row-major and shifted so its centroid sits at the
    origin, which keeps the macro user (placed near the origin by default)
    among the stations. Users are uniform over a disk of ``fue_radius``
    around their station, re-drawn until at least ``min_fue_distance``
    away so serving links keep a physical (sub-unity) gain. Deterministic
    for a fixed seed.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    if fue_radius <= 0:
        raise ValueError(f"user radius must be positive, got {fue_radius}")
    if not 0 < min_fue_distance < fue_radius:
        raise ValueError("min_fue_distance must lie in (0, fue_radius)")

    cols = math.ceil(math.sqrt(m))
    grid = [( (i % cols) * spacing, (i // cols) * spacing ) for i in range(m)]
    cx = sum(p[0] for p in grid) / m
    cy = sum(p[1] for p in grid) / m
    fbs = tuple(Position(x - cx, y - cy) for x, y in grid)

    rng = np.random.default_rng(seed)
    fue = []
    for station in fbs:
        while True:
            u_r, u_theta = rng.random(2)
            r = fue_radius * math.sqrt(u_r)
            if r >= min_fue_distance:
                break
        theta = 2.0 * math.pi * u_theta
        fue.append(Position(station.x + r * math.cos(theta), station.y + r * math.sin(theta)))
    return Topology(mbs=Position(*mbs_pos), mue=Position(*mue_pos), fbs=fbs, fue=tuple(fue))
