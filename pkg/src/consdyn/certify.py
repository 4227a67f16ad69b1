"""Numeric certification of averaging behavior, plus stochastic matrix
analysis.

A map is averaging for a coordinate-map spec when the hull of the updated
profile sits inside the hull of the current one; it is proper at a profile
when the inclusion is strict, measured by the Hausdorff gap between the two
hulls.  A family is equiproper when at every sampled non-consensus profile
the gap stays positive uniformly over the family members.  These are
sampling certificates, not proofs: they scan seeded random profiles (and a
time range for time dependent maps) and report minima and witnesses.

The linear theory lives here too: coefficient of ergodicity, scrambling
tests, and the first matrix powers that become scrambling / strictly
positive.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    CoordinateMapSpec,
    Hull,
    Profile,
    build_hull,
    hausdorff,
    inclusion_excess,
)
from .maps import MapDescriptor, apply_map, validate_row_stochastic

SUPPORT_TOL = 1e-12
DEFAULT_GAP_FLOOR = 1e-9
DEFAULT_CONSENSUS_TOL = 1e-6


class CertifyError(RuntimeError):
    pass


class InclusionViolationError(CertifyError):
    """Raised when a claimed-averaging map leaves its hull."""

    def __init__(self, witness: "Witness"):
        self.witness = witness
        super().__init__(
            f"hull inclusion fails for {witness.map_label} at t={witness.time_index}: "
            f"vertex {witness.vertex} exceeds the outer hull by {witness.excess:.3e}"
        )


@dataclass(frozen=True)
class SampleConfig:
    """Seeded uniform-box profile sampler."""

    seed: int
    count: int
    n: int
    d: int
    low: float = -1.0
    high: float = 1.0

    def __post_init__(self):
        if self.count < 1 or self.n < 1 or self.d < 1:
            raise ValueError("count, n and d must be positive")
        if not self.low < self.high:
            raise ValueError("need low < high")

    def draw(self, rng: np.random.Generator | None = None) -> list[Profile]:
        rng = rng or np.random.default_rng(self.seed)
        return [
            Profile(rng.uniform(self.low, self.high, size=(self.n, self.d)))
            for _ in range(self.count)
        ]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "n": self.n,
            "d": self.d,
            "low": self.low,
            "high": self.high,
        }


@dataclass(frozen=True)
class Witness:
    """Reproducible pointer to a failed hull inclusion."""

    map_label: str
    profile_id: int
    time_index: int
    vertex: tuple[float, ...]
    excess: float
    profile: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "map": self.map_label,
            "profile_id": self.profile_id,
            "time_index": self.time_index,
            "vertex": list(self.vertex),
            "excess": self.excess,
            "profile": [list(row) for row in self.profile],
        }


@dataclass(frozen=True)
class ProfileRecord:
    profile_id: int
    included: bool
    min_gap: float | None  # over the maps/times checked at this profile
    worst_excess: float

    def to_dict(self) -> dict:
        return {
            "profile_id": self.profile_id,
            "included": self.included,
            "min_gap": self.min_gap,
            "worst_excess": self.worst_excess,
        }


@dataclass(frozen=True)
class CertReport:
    """Outcome of an averaging / equiproperness scan."""

    check: str  # averaging | equiproper
    labels: tuple[str, ...]
    spec: CoordinateMapSpec
    records: tuple[ProfileRecord, ...]
    family_min_gap: float | None
    witness: Witness | None
    tol: float
    sample: SampleConfig | None = None
    gap_floor: float | None = None
    equiproper: bool | None = None
    consensus_tol: float | None = None

    @property
    def ok(self) -> bool:
        return self.witness is None

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "maps": list(self.labels),
            "coordinate_map": self.spec.to_dict(),
            "tol": self.tol,
            "sample": None if self.sample is None else self.sample.to_dict(),
            "profiles": len(self.records),
            "family_min_gap": self.family_min_gap,
            "gap_floor": self.gap_floor,
            "equiproper": self.equiproper,
            "consensus_tol": self.consensus_tol,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "records": [r.to_dict() for r in self.records],
        }


def default_time_range(desc: MapDescriptor, time_steps: int = 50) -> tuple[int, ...]:
    if desc.time_dependent:
        return tuple(range(desc.start_index, desc.start_index + time_steps))
    return (desc.start_index,)


def _transformed(desc: MapDescriptor, profile: Profile) -> Profile:
    # deformed maps are certified in the flattened coordinates where the
    # inner map lives; elsewhere the profile is used as is
    if desc.kind == "deformed":
        return Profile(desc.deformation.forward(profile.coords))
    return profile


def _hull_pair(
    desc: MapDescriptor, spec: CoordinateMapSpec, x: Profile, y: Profile
) -> tuple[Hull, Hull]:
    return (
        build_hull(_transformed(desc, y), spec),
        build_hull(_transformed(desc, x), spec),
    )


def _resolve_spec(
    spec: CoordinateMapSpec | None, descs: Sequence[MapDescriptor]
) -> CoordinateMapSpec:
    if spec is not None:
        return spec
    claims = {d.claim for d in descs}
    if len(claims) == 1 and None not in claims:
        return next(iter(claims))
    raise CertifyError(
        "no common claimed coordinate map; pass spec= explicitly"
    )


def _check_sampler(descs: Sequence[MapDescriptor], samples: SampleConfig) -> None:
    for desc in descs:
        if desc.n is not None and desc.n != samples.n:
            raise CertifyError(
                f"{desc.label()} needs n={desc.n}, sampler draws n={samples.n}"
            )
        if desc.d is not None and desc.d != samples.d:
            raise CertifyError(
                f"{desc.label()} needs d={desc.d}, sampler draws d={samples.d}"
            )
        if desc.domain == "positive" and samples.low <= 0:
            raise CertifyError(
                f"{desc.label()} lives on positive profiles; sampler box "
                f"starts at {samples.low}"
            )


def properness_gap(
    desc: MapDescriptor,
    t: int,
    spec: CoordinateMapSpec,
    profile: Profile,
    tol: float = 1e-9,
    profile_id: int = -1,
) -> float:
    """Hausdorff gap between the pre and post hulls at one profile and time.

    Raises InclusionViolationError if the post hull is not inside the pre
    hull up to tol; a zero return means the map did not shrink the hull.
    """
    y = apply_map(desc, t, profile)
    inner, outer = _hull_pair(desc, spec, profile, y)
    excess, vertex = inclusion_excess(inner, outer)
    if excess > tol:
        raise InclusionViolationError(
            Witness(
                map_label=desc.label(),
                profile_id=profile_id,
                time_index=t,
                vertex=tuple(float(v) for v in vertex),
                excess=excess,
                profile=tuple(tuple(float(c) for c in row) for row in profile.coords),
            )
        )
    return hausdorff(inner, outer)


def check_averaging(
    desc: MapDescriptor,
    spec: CoordinateMapSpec | None = None,
    samples: SampleConfig | None = None,
    profiles: Iterable[Profile] | None = None,
    tol: float = 1e-9,
    time_range: Sequence[int] | None = None,
    time_steps: int = 50,
) -> CertReport:
    """Scan profiles (sampled or given) and all times in range; record hull
    inclusion and gaps.  Stops at the first violation and returns the
    witness in the report."""
    spec = _resolve_spec(spec, [desc])
    if profiles is None:
        if samples is None:
            raise CertifyError("pass either samples= or profiles=")
        _check_sampler([desc], samples)
        profiles = samples.draw()
    else:
        profiles = list(profiles)
    times = tuple(time_range) if time_range is not None else default_time_range(
        desc, time_steps
    )
    records: list[ProfileRecord] = []
    witness = None
    for pid, x in enumerate(profiles):
        gaps: list[float] = []
        worst = 0.0
        ok = True
        for t in times:
            try:
                gaps.append(properness_gap(desc, t, spec, x, tol, profile_id=pid))
            except InclusionViolationError as exc:
                ok = False
                worst = exc.witness.excess
                witness = exc.witness
                break
        records.append(
            ProfileRecord(pid, ok, min(gaps) if gaps else None, worst)
        )
        if witness is not None:
            break
    finite = [r.min_gap for r in records if r.included and r.min_gap is not None]
    return CertReport(
        check="averaging",
        labels=(desc.label(),),
        spec=spec,
        records=tuple(records),
        family_min_gap=min(finite) if finite else None,
        witness=witness,
        tol=tol,
        sample=samples,
    )


def check_equiproper(
    family,
    spec: CoordinateMapSpec | None = None,
    samples: SampleConfig | None = None,
    profiles: Iterable[Profile] | None = None,
    tol: float = 1e-9,
    gap_floor: float = DEFAULT_GAP_FLOOR,
    consensus_tol: float = DEFAULT_CONSENSUS_TOL,
    time_steps: int = 50,
) -> CertReport:
    """Equiproperness scan of a map family.

    family entries are MapDescriptors or (MapDescriptor, time_range) pairs.
    Sampled profiles with diameter <= consensus_tol are rejected and
    redrawn: properness is only meaningful away from consensus.  For each
    kept profile the minimum gap over every family member and time index is
    recorded; the report states the family-wide minimum and whether it
    clears gap_floor.  An inclusion violation aborts the scan with its
    witness in the report."""
    members: list[tuple[MapDescriptor, tuple[int, ...]]] = []
    for entry in family:
        if isinstance(entry, MapDescriptor):
            members.append((entry, default_time_range(entry, time_steps)))
        else:
            desc, times = entry
            members.append((desc, tuple(times)))
    if not members:
        raise CertifyError("empty family")
    descs = [m[0] for m in members]
    spec = _resolve_spec(spec, descs)
    if profiles is None:
        if samples is None:
            raise CertifyError("pass either samples= or profiles=")
        _check_sampler(descs, samples)
        rng = np.random.default_rng(samples.seed)
        kept: list[Profile] = []
        attempts = 0
        while len(kept) < samples.count:
            attempts += 1
            if attempts > 100 * samples.count:
                raise CertifyError("sampler cannot avoid consensus profiles")
            (x,) = SampleConfig(
                seed=samples.seed, count=1, n=samples.n, d=samples.d,
                low=samples.low, high=samples.high,
            ).draw(rng)
            if x.diameter() > consensus_tol:
                kept.append(x)
        profiles = kept
    else:
        profiles = [x for x in profiles if x.diameter() > consensus_tol]
        if not profiles:
            raise CertifyError("all supplied profiles are at consensus")
    records: list[ProfileRecord] = []
    witness = None
    for pid, x in enumerate(profiles):
        gaps: list[float] = []
        try:
            for desc, times in members:
                for t in times:
                    gaps.append(properness_gap(desc, t, spec, x, tol, profile_id=pid))
        except InclusionViolationError as exc:
            witness = exc.witness
            records.append(ProfileRecord(pid, False, None, exc.witness.excess))
            break
        records.append(ProfileRecord(pid, True, min(gaps), 0.0))
    finite = [r.min_gap for r in records if r.min_gap is not None]
    family_min = min(finite) if finite else None
    return CertReport(
        check="equiproper",
        labels=tuple(d.label() for d in descs),
        spec=spec,
        records=tuple(records),
        family_min_gap=family_min,
        witness=witness,
        tol=tol,
        sample=samples,
        gap_floor=gap_floor,
        equiproper=None if witness is not None else bool(
            family_min is not None and family_min >= gap_floor
        ),
        consensus_tol=consensus_tol,
    )


# ---------------------------------------------------------------------------
# row-stochastic matrix analysis


def scrambling_coefficient(matrix) -> float:
    """Coefficient of ergodicity tau(A) = max over row pairs of half the L1
    distance between the rows.  tau < 1 exactly when every pair of rows
    shares support, and hull diameters contract by tau under x -> Ax."""
    a = validate_row_stochastic(matrix)
    n = a.shape[0]
    if n == 1:
        return 0.0
    worst = 0.0
    for i, j in itertools.combinations(range(n), 2):
        worst = max(worst, 0.5 * float(np.abs(a[i] - a[j]).sum()))
    return worst


def is_scrambling(matrix, support_tol: float = SUPPORT_TOL) -> bool:
    """True when any two rows put weight > support_tol on a common column."""
    a = validate_row_stochastic(matrix)
    pos = a > support_tol
    n = a.shape[0]
    return all(
        bool((pos[i] & pos[j]).any()) for i, j in itertools.combinations(range(n), 2)
    )


def scrambling_index(matrix, cap: int = 64, support_tol: float = SUPPORT_TOL) -> int | None:
    """Smallest k <= cap with A^k scrambling, else None."""
    a = validate_row_stochastic(matrix)
    p = a.copy()
    for k in range(1, cap + 1):
        if is_scrambling(p, support_tol):
            return k
        p = p @ a
    return None


def regularity_index(matrix, cap: int = 64, support_tol: float = SUPPORT_TOL) -> int | None:
    """Smallest k <= cap with A^k entrywise > support_tol, else None."""
    a = validate_row_stochastic(matrix)
    p = a.copy()
    for k in range(1, cap + 1):
        if (p > support_tol).all():
            return k
        p = p @ a
    return None


@dataclass(frozen=True)
class MatrixAnalysis:
    tau: float
    scrambling: bool
    scrambling_index: int | None
    regularity_index: int | None
    cap: int

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "scrambling": self.scrambling,
            "scrambling_index": self.scrambling_index,
            "regularity_index": self.regularity_index,
            "cap": self.cap,
        }


def analyze_matrix(matrix, cap: int = 64) -> MatrixAnalysis:
    a = validate_row_stochastic(matrix)
    return MatrixAnalysis(
        tau=scrambling_coefficient(a),
        scrambling=is_scrambling(a),
        scrambling_index=scrambling_index(a, cap),
        regularity_index=regularity_index(a, cap),
        cap=cap,
    )
