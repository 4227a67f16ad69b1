"""Decentralized rendezvous for planar agents with bearing-only sensing.

Agents sit in the plane and can only measure directions to the other
agents, not distances.  A scheduler activates one agent at a time, uniformly
at random.  The activated agent looks at the set of directions toward the
others and finds the widest empty sector between consecutive directions; if
that sector's half-width gamma reaches pi/2 + pi/n, every other agent is
confined to a narrow frontal cone, and the agent may safely advance into
the crowd: it walks opposite the empty sector's bisector until it either
reaches another agent's position or some agent appears exactly at a right
angle to its heading.  Agents that share a position are tied and move as
one group, so groups only ever merge.  Repeating activated moves gathers
everyone at a single point.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Profile, build_hull, hausdorff, identity_spec, inclusion_excess
from .simulate import (
    STOP_CONSENSUS,
    STOP_MAX_STEPS,
    ConsensusVerdict,
    Trajectory,
    consensus_verdict,
)

TIE_TOL = 1e-12
ANGLE_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class RendezvousError(RuntimeError):
    pass


class ConsensusReachedError(RendezvousError):
    """Scan found no agent at a distinct position: already gathered."""


class ActivationCapError(RendezvousError):
    """No qualifying mover within the activation budget (diagnostic)."""


@dataclass
class RendezvousState:
    """Positions (n, 2) plus the scheduler's random stream.  States returned
    by protocol_step share the stream with their predecessor."""

    positions: np.ndarray
    rng: np.random.Generator

    def __post_init__(self):
        arr = np.asarray(self.positions, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise RendezvousError("positions must be an (n, 2) array")
        if arr.shape[0] < 2:
            raise RendezvousError("need at least two agents")
        if not np.isfinite(arr).all():
            raise RendezvousError("positions must be finite")
        self.positions = arr

    @property
    def n(self) -> int:
        return self.positions.shape[0]


def tie_groups(state: RendezvousState) -> list[list[int]]:
    """Partition agents into groups of coinciding positions (<= TIE_TOL)."""
    groups: list[list[int]] = []
    for i in range(state.n):
        for g in groups:
            if np.linalg.norm(state.positions[i] - state.positions[g[0]]) <= TIE_TOL:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


@dataclass(frozen=True)
class ScanResult:
    """Largest empty direction sector seen from one agent: bisector alpha,
    half-width gamma, and the deduplicated sorted directions themselves."""

    directions: tuple[float, ...]
    alpha: float
    gamma: float


def scan(state: RendezvousState, agent: int) -> ScanResult:
    p = state.positions[agent]
    rel = state.positions - p
    dist = np.linalg.norm(rel, axis=1)
    others = [j for j in range(state.n) if j != agent and dist[j] > TIE_TOL]
    if not others:
        raise ConsensusReachedError("no agent at a distinct position")
    angles = np.sort(np.mod(np.arctan2(rel[others, 1], rel[others, 0]), TWO_PI))
    dedup = [float(angles[0])]
    for a in angles[1:]:
        if a - dedup[-1] > TIE_TOL:
            dedup.append(float(a))
    if len(dedup) > 1 and dedup[0] + TWO_PI - dedup[-1] <= TIE_TOL:
        dedup.pop()
    if len(dedup) == 1:
        # a single occupied direction: the empty sector is everything else
        alpha = math.fmod(dedup[0] + math.pi, TWO_PI)
        return ScanResult(tuple(dedup), alpha, math.pi)
    gaps = [
        (dedup[(i + 1) % len(dedup)] - dedup[i]) % TWO_PI for i in range(len(dedup))
    ]
    best = int(np.argmax(gaps))
    alpha = math.fmod(dedup[best] + gaps[best] / 2.0, TWO_PI)
    return ScanResult(tuple(dedup), alpha, gaps[best] / 2.0)


def movement_threshold(n: int) -> float:
    return math.pi / 2.0 + math.pi / n


def should_move(sr: ScanResult, n: int, angle_tol: float = ANGLE_TOL) -> bool:
    """Wide enough empty sector?  n is the total agent count of the system,
    not the number of distinct positions."""
    return sr.gamma >= movement_threshold(n) - angle_tol


@dataclass(frozen=True)
class MoveOutcome:
    position: np.ndarray
    stopped_by: str  # reached | perpendicular
    distance: float


def move_rule_star(state: RendezvousState, agent: int, beta: float) -> MoveOutcome:
    """Advance along heading beta until the first stop event: either the ray
    passes through another agent's position (walk exactly onto it) or,
    before that, some agent's bearing becomes perpendicular to the heading
    (walk min_q (q - p) . u).  Agents behind the heading would make that
    minimum non-positive; callers only move when the scan rules that out."""
    p = state.positions[agent]
    u = np.array([math.cos(beta), math.sin(beta)])
    rel = state.positions - p
    dist = np.linalg.norm(rel, axis=1)
    others = [j for j in range(state.n) if j != agent and dist[j] > TIE_TOL]
    if not others:
        raise ConsensusReachedError("no agent at a distinct position")
    proj = rel[others] @ u
    smin = float(proj.min())
    if smin <= 0.0:
        raise RendezvousError(
            f"move rule stalls for agent {agent}: an agent projects at {smin!r}"
        )
    perp = rel[others, 0] * u[1] - rel[others, 1] * u[0]
    onray = [
        k
        for k in range(len(others))
        if abs(perp[k]) <= TIE_TOL and proj[k] <= smin + TIE_TOL
    ]
    if onray:
        k = min(onray, key=lambda k: proj[k])
        target = others[k]
        return MoveOutcome(
            state.positions[target].copy(), "reached", float(proj[k])
        )
    return MoveOutcome(p + smin * u, "perpendicular", smin)


@dataclass
class GroupEvent:
    """One grouped protocol step: activations up to and including the first
    agent that moved (or the activation that discovered consensus)."""

    step: int
    activations: tuple[int, ...]
    mover: int | None
    alpha: float | None
    gamma: float | None
    beta: float | None
    distance: float | None
    stopped_by: str | None = None
    consensus: bool = False


def events_to_jsonl(events) -> str:
    lines = []
    for ev in events:
        lines.append(
            json.dumps(
                {
                    "step": ev.step,
                    "activations": list(ev.activations),
                    "mover": ev.mover,
                    "alpha": ev.alpha,
                    "gamma": ev.gamma,
                    "beta": ev.beta,
                    "distance": ev.distance,
                }
            )
        )
    return "\n".join(lines) + "\n"


def protocol_step(
    state: RendezvousState,
    *,
    angle_tol: float = ANGLE_TOL,
    cap_factor: int = 10,
    chooser: Callable[[], int] | None = None,
) -> tuple[RendezvousState, GroupEvent]:
    """Activate agents until one moves; return the new state and the grouped
    event.  The mover's whole tie group translates with it.  If all agents
    are already tied, one activation discovers consensus.  `chooser`
    overrides the uniform scheduler (it must return agent indices); the
    default draws from state.rng."""
    n = state.n
    draw = chooser or (lambda: int(state.rng.integers(n)))
    groups = tie_groups(state)
    if len(groups) == 1:
        agent = draw()
        return state, GroupEvent(
            step=0,
            activations=(agent,),
            mover=None,
            alpha=None,
            gamma=None,
            beta=None,
            distance=None,
            consensus=True,
        )
    activations: list[int] = []
    for _ in range(cap_factor * n):
        agent = draw()
        activations.append(agent)
        sr = scan(state, agent)
        if not should_move(sr, n, angle_tol):
            continue
        beta = math.fmod(sr.alpha + math.pi, TWO_PI)
        outcome = move_rule_star(state, agent, beta)
        new_positions = state.positions.copy()
        for g in groups:
            if agent in g:
                for j in g:
                    new_positions[j] = outcome.position
                break
        new_state = RendezvousState(new_positions, state.rng)
        return new_state, GroupEvent(
            step=0,
            activations=tuple(activations),
            mover=agent,
            alpha=sr.alpha,
            gamma=sr.gamma,
            beta=beta,
            distance=outcome.distance,
            stopped_by=outcome.stopped_by,
        )
    raise ActivationCapError(
        f"no agent qualified to move within {cap_factor * n} activations"
    )


@dataclass(frozen=True)
class StepCheck:
    """Per grouped step audit: hull nesting, mover extremality, threshold
    margin, and movement distance."""

    step: int
    included: bool
    mover_is_vertex: bool
    gamma_margin: float
    distance: float

    @property
    def ok(self) -> bool:
        return (
            self.included
            and self.mover_is_vertex
            and self.gamma_margin >= -ANGLE_TOL
            and self.distance > 0.0
        )

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "included": self.included,
            "mover_is_vertex": self.mover_is_vertex,
            "gamma_margin": self.gamma_margin,
            "distance": self.distance,
            "ok": self.ok,
        }


@dataclass
class RendezvousResult:
    trajectory: Trajectory
    events: tuple[GroupEvent, ...]
    verdict: ConsensusVerdict
    checks: tuple[StepCheck, ...]

    @property
    def all_checks_ok(self) -> bool:
        return all(c.ok for c in self.checks)


def run_protocol(
    initial,
    *,
    tol: float = 1e-6,
    max_grouped_steps: int = 10_000,
    seed: int = 0,
    angle_tol: float = ANGLE_TOL,
    cap_factor: int = 10,
    chooser: Callable[[], int] | None = None,
) -> RendezvousResult:
    """Run grouped protocol steps until the agent set has diameter <= tol.

    Returns the grouped-step trajectory (one profile per move), the event
    log, the consensus verdict, and the per-step audit checks.  When the
    agents end up exactly tied a final activation discovers consensus and
    is logged as an event with mover null."""
    state = RendezvousState(np.array(initial, dtype=float), np.random.default_rng(seed))
    n = state.n
    spec = identity_spec()
    profile = Profile(state.positions)
    hull = build_hull(profile, spec)

    traj = Trajectory(
        spec=spec,
        profiles=[profile],
        diameters=[profile.diameter()],
        gaps=[0.0],
        included=[True],
        map_indices=[],
        time_indices=[],
        stop_reason=STOP_MAX_STEPS,
        final=profile,
        seed=seed,
    )
    events: list[GroupEvent] = []
    checks: list[StepCheck] = []
    threshold = movement_threshold(n)

    for step in range(1, max_grouped_steps + 1):
        if traj.diameters[-1] <= tol:
            if len(tie_groups(state)) == 1:
                _, ev = protocol_step(
                    state, angle_tol=angle_tol, cap_factor=cap_factor, chooser=chooser
                )
                ev.step = step
                events.append(ev)
            traj.stop_reason = STOP_CONSENSUS
            break
        pre_positions = state.positions.copy()
        state, ev = protocol_step(
            state, angle_tol=angle_tol, cap_factor=cap_factor, chooser=chooser
        )
        ev.step = step
        events.append(ev)
        new_profile = Profile(state.positions)
        new_hull = build_hull(new_profile, spec)
        excess, _ = inclusion_excess(new_hull, hull)
        vertex_dist = min(
            float(np.linalg.norm(v - pre_positions[ev.mover])) for v in hull.vertices
        )
        checks.append(
            StepCheck(
                step=step,
                included=excess <= 1e-9,
                mover_is_vertex=vertex_dist <= 1e-9,
                gamma_margin=float(ev.gamma - threshold),
                distance=float(ev.distance),
            )
        )
        traj.profiles.append(new_profile)
        traj.diameters.append(new_profile.diameter())
        traj.gaps.append(hausdorff(new_hull, hull))
        traj.included.append(excess <= 1e-9)
        traj.final = new_profile
        profile, hull = new_profile, new_hull
    else:
        if traj.diameters[-1] <= tol:
            traj.stop_reason = STOP_CONSENSUS
    return RendezvousResult(
        trajectory=traj,
        events=tuple(events),
        verdict=consensus_verdict(traj, tol),
        checks=tuple(checks),
    )
