"""Trajectory engine for switching map sequences.

x(t+1) = f_t(x(t)) where f_t is drawn from a finite family by a switching
policy (single map, cyclic, seeded random, or a fully scripted sequence).
Time dependent maps keep their own internal clocks: a map's time index is
its start index plus the number of times it has been applied so far, unless
the script pins an explicit index.  Every run monitors the hull sequence
(inclusion of each hull in its predecessor, Hausdorff gap, diameter) and
stops on consensus, on a violated inclusion, on a domain error, or at the
step cap.  Long runs can stream their CSV to disk row by row instead of
holding every profile in memory.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    DEFAULT_TOL,
    CoordinateMapSpec,
    Hull,
    Profile,
    build_hull,
    hausdorff,
    hull_diameter,
    identity_spec,
    inclusion_excess,
)
from .maps import DomainError, MapDescriptor, apply_map

PROFILE_CAP = 10_000

STOP_CONSENSUS = "consensus"
STOP_MAX_STEPS = "max_steps"
STOP_VIOLATION = "violation"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SwitchingSequence:
    """Switching policy over a finite family of maps.

    policy "single" repeats maps[0]; "cyclic" walks the family round robin;
    "random" draws uniformly with the mandatory seed; "scripted" follows
    `script`, whose entries are map indices or (index, time_index) pairs
    that override the map's internal clock.
    """

    maps: tuple[MapDescriptor, ...]
    policy: str = "single"
    seed: int | None = None
    script: tuple | None = None

    def __post_init__(self):
        if not self.maps:
            raise SimulationError("need at least one map")
        if self.policy not in ("single", "cyclic", "random", "scripted"):
            raise SimulationError(f"unknown policy {self.policy!r}")
        if self.policy == "random" and self.seed is None:
            raise SimulationError("random switching needs a seed")
        if self.policy == "scripted":
            if not self.script:
                raise SimulationError("scripted switching needs a script")
            for entry in self.script:
                idx = entry[0] if isinstance(entry, (tuple, list)) else entry
                if not 0 <= int(idx) < len(self.maps):
                    raise SimulationError(f"script index {idx} out of range")
        shapes = {(m.n, m.d) for m in self.maps}
        ns = {s[0] for s in shapes if s[0] is not None}
        ds = {s[1] for s in shapes if s[1] is not None}
        if len(ns) > 1 or len(ds) > 1:
            raise SimulationError("family members disagree on profile shape")
        object.__setattr__(self, "maps", tuple(self.maps))
        if self.script is not None:
            object.__setattr__(
                self,
                "script",
                tuple(
                    tuple(int(v) for v in e) if isinstance(e, (tuple, list)) else int(e)
                    for e in self.script
                ),
            )


def single(desc: MapDescriptor) -> SwitchingSequence:
    return SwitchingSequence(maps=(desc,), policy="single")


def cyclic(descs: Sequence[MapDescriptor]) -> SwitchingSequence:
    return SwitchingSequence(maps=tuple(descs), policy="cyclic")


def random_policy(descs: Sequence[MapDescriptor], seed: int) -> SwitchingSequence:
    return SwitchingSequence(
        maps=tuple(descs),
        policy="random",
        seed=None if seed is None else int(seed),
    )


def scripted(descs: Sequence[MapDescriptor], script) -> SwitchingSequence:
    return SwitchingSequence(maps=tuple(descs), policy="scripted", script=tuple(script))


class _Resolver:
    """Stateful walker over a switching sequence.

    Tracks per-map use counts so each family member advances its internal
    clock only when it actually fires.
    """

    def __init__(self, seq: SwitchingSequence):
        self.seq = seq
        self.uses = [0] * len(seq.maps)
        self.rng = (
            np.random.default_rng(seq.seed) if seq.policy == "random" else None
        )

    def step(self, k: int) -> tuple[MapDescriptor, int, int]:
        seq = self.seq
        override = None
        if seq.policy == "single":
            idx = 0
        elif seq.policy == "cyclic":
            idx = k % len(seq.maps)
        elif seq.policy == "random":
            idx = int(self.rng.integers(len(seq.maps)))
        else:
            entry = seq.script[k]
            if isinstance(entry, tuple):
                idx, override = entry
            else:
                idx = entry
        desc = seq.maps[idx]
        t = override if override is not None else desc.start_index + self.uses[idx]
        self.uses[idx] += 1
        return desc, t, idx


def realize(seq: SwitchingSequence, steps: int) -> SwitchingSequence:
    """Freeze the next `steps` choices of a sequence into a scripted one
    (with explicit time indices), e.g. to replay one random realization."""
    r = _Resolver(seq)
    script = []
    for k in range(steps):
        _, t, idx = r.step(k)
        script.append((idx, t))
    return SwitchingSequence(maps=seq.maps, policy="scripted", script=tuple(script))


@dataclass
class Trajectory:
    """Recorded run.  Per-time lists all have length steps + 1; entry 0 is
    the initial state (gap 0, included True).  When a long run streams to
    CSV, `profiles` keeps only the first PROFILE_CAP states and
    profiles_truncated is set; the final profile is always retained."""

    spec: CoordinateMapSpec
    profiles: list[Profile]
    diameters: list[float]
    gaps: list[float]
    included: list[bool]
    map_indices: list[int]
    time_indices: list[int]
    stop_reason: str
    final: Profile
    hulls: list[Hull] | None = None
    violation: dict | None = None
    seed: int | None = None
    profiles_truncated: bool = False

    @property
    def steps(self) -> int:
        return len(self.diameters) - 1

    @property
    def final_diameter(self) -> float:
        return self.diameters[-1]


@dataclass(frozen=True)
class ConsensusVerdict:
    reached: bool
    gamma: tuple[float, ...] | None  # centroid of the final profile
    final_diameter: float
    steps: int

    def to_dict(self) -> dict:
        return {
            "reached": self.reached,
            "gamma": None if self.gamma is None else list(self.gamma),
            "final_diameter": self.final_diameter,
            "steps": self.steps,
        }


def consensus_verdict(traj: Trajectory, tol: float = 1e-9) -> ConsensusVerdict:
    reached = traj.final_diameter <= tol
    gamma = tuple(float(c) for c in traj.final.centroid()) if reached else None
    return ConsensusVerdict(reached, gamma, traj.final_diameter, traj.steps)


def _csv_header(d: int) -> str:
    cols = ",".join(f"c{i + 1}" for i in range(d))
    return f"t,agent,{cols},diameter,gap"


def _csv_rows(t: int, profile: Profile, diameter: float, gap: float) -> list[str]:
    rows = []
    for i in range(profile.n):
        coords = ",".join(repr(float(c)) for c in profile.coords[i])
        rows.append(f"{t},{i},{coords},{repr(float(diameter))},{repr(float(gap))}")
    return rows


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write the full per-agent trajectory table.  Requires untruncated
    profiles; streamed runs already wrote their CSV during the run."""
    if traj.profiles_truncated:
        raise SimulationError("profiles were truncated; use the streamed CSV")
    with open(path, "w") as fh:
        fh.write(_csv_header(traj.profiles[0].d) + "\n")
        for t, x in enumerate(traj.profiles):
            for row in _csv_rows(t, x, traj.diameters[t], traj.gaps[t]):
                fh.write(row + "\n")


def run(
    seq: SwitchingSequence,
    initial: Profile,
    spec: CoordinateMapSpec | None = None,
    *,
    tol: float = 1e-9,
    max_steps: int = 100_000,
    monitor_tol: float = DEFAULT_TOL,
    record_hulls: bool = False,
    csv_path=None,
    profile_cap: int = PROFILE_CAP,
    seed: int | None = None,
) -> Trajectory:
    """Iterate the switching sequence from `initial` until the hull diameter
    drops to tol (consensus), an inclusion or domain violation occurs, or
    max_steps is exhausted.  With csv_path the per-step rows stream to disk
    as they are produced and only the first profile_cap profiles stay in
    memory."""
    spec = spec or identity_spec()
    resolver = _Resolver(seq)
    hull = build_hull(initial, spec)
    dia = hull_diameter(hull)

    traj = Trajectory(
        spec=spec,
        profiles=[initial],
        diameters=[dia],
        gaps=[0.0],
        included=[True],
        map_indices=[],
        time_indices=[],
        stop_reason=STOP_MAX_STEPS,
        final=initial,
        hulls=[hull] if record_hulls else None,
        seed=seed if seed is not None else seq.seed,
    )

    budget = max_steps
    if seq.policy == "scripted":
        budget = min(budget, len(seq.script))

    sink = open(csv_path, "w") if csv_path is not None else None
    try:
        if sink:
            sink.write(_csv_header(initial.d) + "\n")
            for row in _csv_rows(0, initial, dia, 0.0):
                sink.write(row + "\n")
        if dia <= tol:
            traj.stop_reason = STOP_CONSENSUS
            return traj
        x = initial
        for k in range(budget):
            desc, t_int, idx = resolver.step(k)
            try:
                y = apply_map(desc, t_int, x)
            except DomainError as exc:
                traj.stop_reason = STOP_VIOLATION
                traj.violation = {"step": k + 1, "kind": "domain", "detail": str(exc)}
                return traj
            new_hull = build_hull(y, spec)
            excess, vertex = inclusion_excess(new_hull, hull)
            ok = excess <= monitor_tol
            gap = hausdorff(new_hull, hull)
            dia = hull_diameter(new_hull)

            traj.map_indices.append(idx)
            traj.time_indices.append(t_int)
            traj.diameters.append(dia)
            traj.gaps.append(gap)
            traj.included.append(ok)
            traj.final = y
            if record_hulls:
                traj.hulls.append(new_hull)
            if len(traj.profiles) <= profile_cap or sink is None:
                traj.profiles.append(y)
            else:
                traj.profiles_truncated = True
            if sink:
                for row in _csv_rows(k + 1, y, dia, gap):
                    sink.write(row + "\n")

            if not ok:
                traj.stop_reason = STOP_VIOLATION
                traj.violation = {
                    "step": k + 1,
                    "kind": "inclusion",
                    "map": desc.label(),
                    "time_index": t_int,
                    "vertex": [float(v) for v in vertex],
                    "excess": float(excess),
                }
                return traj
            if dia <= tol:
                traj.stop_reason = STOP_CONSENSUS
                return traj
            x, hull = y, new_hull
        traj.stop_reason = STOP_MAX_STEPS
        return traj
    finally:
        if sink:
            sink.close()


def summary_dict(traj: Trajectory, tol: float = 1e-9) -> dict:
    verdict = consensus_verdict(traj, tol)
    return {
        "stop_reason": traj.stop_reason,
        "steps": traj.steps,
        "gamma": None if verdict.gamma is None else list(verdict.gamma),
        "final_diameter": traj.final_diameter,
        "seed": traj.seed,
    }


def hull_monitor(traj: Trajectory) -> list[tuple[int, bool, float]]:
    """(step, included, gap) per transition, recomputed from the stored
    profiles (or hulls when recorded) as an independent audit; falls back to
    the values recorded during the run when profiles were truncated."""
    if traj.profiles_truncated:
        return [
            (t, traj.included[t], traj.gaps[t]) for t in range(1, len(traj.gaps))
        ]
    hulls = traj.hulls or [build_hull(x, traj.spec) for x in traj.profiles]
    out = []
    for t in range(1, len(hulls)):
        excess, _ = inclusion_excess(hulls[t], hulls[t - 1])
        out.append((t, excess <= DEFAULT_TOL, hausdorff(hulls[t], hulls[t - 1])))
    return out


@dataclass(frozen=True)
class ProbeRecord:
    initial_distance: float
    limit_distance: float | None
    converged: bool

    def to_dict(self) -> dict:
        return {
            "initial_distance": self.initial_distance,
            "limit_distance": self.limit_distance,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class RadiusEntry:
    radius: float
    max_limit_distance: float | None
    probes: tuple[ProbeRecord, ...]

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "max_limit_distance": self.max_limit_distance,
            "probes": [p.to_dict() for p in self.probes],
        }


@dataclass(frozen=True)
class ContinuityReport:
    base: ConsensusVerdict
    entries: tuple[RadiusEntry, ...]

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "entries": [e.to_dict() for e in self.entries],
        }


def continuity_experiment(
    seq: SwitchingSequence,
    initial: Profile,
    radii: Sequence[float],
    probes_per_radius: int = 10,
    *,
    spec: CoordinateMapSpec | None = None,
    tol: float = 1e-9,
    max_steps: int = 10_000,
    seed: int = 0,
) -> ContinuityReport:
    """Sensitivity of the consensus value to the initial profile under one
    fixed realization of the switching sequence.

    The sequence is frozen first, so every probe sees the same maps in the
    same order with the same time indices.  Each probe perturbs the initial
    profile inside a sup-norm ball and records the distance between its
    consensus value and the base one; probes that fail to reach consensus
    within max_steps are flagged."""
    frozen = realize(seq, max_steps)
    base_traj = run(frozen, initial, spec, tol=tol, max_steps=max_steps)
    base = consensus_verdict(base_traj, tol)
    rng = np.random.default_rng(seed)
    entries = []
    for radius in radii:
        probes = []
        for _ in range(probes_per_radius):
            delta = rng.uniform(-radius, radius, size=initial.coords.shape)
            probe0 = Profile(initial.coords + delta)
            init_dist = float(np.abs(delta).max())
            ptraj = run(frozen, probe0, spec, tol=tol, max_steps=max_steps)
            pv = consensus_verdict(ptraj, tol)
            if base.reached and pv.reached:
                limit = float(
                    np.abs(np.asarray(pv.gamma) - np.asarray(base.gamma)).max()
                )
            else:
                limit = None
            probes.append(ProbeRecord(init_dist, limit, pv.reached))
        limits = [p.limit_distance for p in probes if p.limit_distance is not None]
        entries.append(
            RadiusEntry(
                radius=float(radius),
                max_limit_distance=max(limits) if limits else None,
                probes=tuple(probes),
            )
        )
    return ContinuityReport(base=base, entries=tuple(entries))
