"""Agent update maps.

Each map is described by a frozen MapDescriptor carrying its kind, numeric
parameters, shape constraints, domain, and the coordinate-map spec under
which it claims to be averaging (new hull inside old hull).  Time dependent
families are a single descriptor applied with an explicit time index; the
descriptor records the first valid index.

Shipped kinds: row-stochastic linear maps, two decaying two-agent pairs,
vanishing-confidence weighted averaging, componentwise mean selection over
three agents, a stripe-coupling planar map, the midpoint exchange map, a
plain scaling fixture, and deformed wrappers that conjugate an inner map by
a componentwise change of coordinates (e.g. log/exp turns arithmetic
averaging into geometric averaging).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import CoordinateMapSpec, Profile, identity_spec, interval_spec

POSITIVE_FLOOR = 1e-300


class MapError(ValueError):
    pass


class MapSpecError(MapError):
    """Bad construction parameters."""


class DomainError(MapError):
    """Profile outside the map's domain."""


@dataclass(frozen=True)
class Deformation:
    """Componentwise change of coordinates used to conjugate a map.

    forward/inverse act on scalars or arrays elementwise and invert each
    other on `domain`.  `inverse_lipschitz` documents a Lipschitz bound of
    the inverse on bounded sets (None if unbounded), which is what lets
    contraction certificates transfer back through the deformation.
    """

    name: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    domain: str = "reals"
    inverse_lipschitz: float | None = None


def identity_deformation() -> Deformation:
    return Deformation("identity", lambda x: x, lambda x: x, "reals", 1.0)


def log_exp_deformation() -> Deformation:
    return Deformation("log_exp", np.log, np.exp, "positive", None)


DEFORMATIONS: dict[str, Callable[[], Deformation]] = {
    "identity": identity_deformation,
    "log_exp": log_exp_deformation,
}


@dataclass(frozen=True)
class MapDescriptor:
    """Immutable description of one update map (or time family of maps)."""

    kind: str
    params: dict = field(default_factory=dict)
    n: int | None = None  # None: any agent count
    d: int | None = None  # None: any dimension
    domain: str = "reals"  # reals | positive
    start_index: int = 0
    time_dependent: bool = False
    claim: CoordinateMapSpec | None = None
    inner: "MapDescriptor | None" = None
    deformation: Deformation | None = None
    width_profile: Callable[[float], float] | None = None

    def label(self) -> str:
        if self.kind == "deformed":
            return f"deformed[{self.deformation.name}]({self.inner.label()})"
        if self.kind == "decaying_pair":
            return f"decaying_pair[{self.params['rate']}]"
        if self.kind == "mean_selector":
            return f"mean_selector{tuple(self.params['selectors'])}"
        return self.kind

    def __eq__(self, other):
        if not isinstance(other, MapDescriptor):
            return NotImplemented
        if self.width_profile is not None or other.width_profile is not None:
            return self is other
        return descriptor_to_dict(self) == descriptor_to_dict(other)

    def __hash__(self):
        return hash(self.label())


def validate_row_stochastic(matrix, tol: float = 1e-12) -> np.ndarray:
    """Return the matrix as a float array, or raise naming the first bad row."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MapSpecError(f"matrix must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise MapSpecError("matrix entries must be finite")
    for i, row in enumerate(a):
        if (row < 0).any():
            raise MapSpecError(f"row {i} has a negative entry")
        if abs(row.sum() - 1.0) > tol:
            raise MapSpecError(f"row {i} sums to {row.sum()!r}, not 1")
    return a


def linear_map(matrix) -> MapDescriptor:
    """x(t+1) = A x(t) with a row-stochastic A; averaging for the convex hull."""
    a = validate_row_stochastic(matrix)
    return MapDescriptor(
        kind="linear",
        params={"matrix": [[float(v) for v in row] for row in a]},
        n=a.shape[0],
        claim=identity_spec(),
    )


def decaying_pair_family(rate: str) -> MapDescriptor:
    """Two-agent time families with weights decaying toward the identity.

    rate "quarter_power": symmetric cross weights 4^-t from t = 1; both
    agents keep moving but total motion stays summable, so the limit
    positions disagree.  rate "one_over_t": agent 1 moves weight 1/t toward
    a fixed agent 2 from t = 2; motion is non-summable yet the gap decays
    like 1/(t-1), again without consensus in finite time.
    """
    if rate not in ("quarter_power", "one_over_t"):
        raise MapSpecError(f"unknown decay rate {rate!r}")
    return MapDescriptor(
        kind="decaying_pair",
        params={"rate": rate},
        n=2,
        start_index=1 if rate == "quarter_power" else 2,
        time_dependent=True,
        claim=identity_spec(),
    )


def vanishing_confidence(epsilon: float) -> MapDescriptor:
    """Weighted averaging with weights exp(-(|x_i - x_j|/epsilon)^t).

    As t grows the kernel sharpens, so far-away agents lose influence and
    well separated clusters freeze instead of merging.
    """
    if not (epsilon > 0):
        raise MapSpecError("epsilon must be positive")
    return MapDescriptor(
        kind="vanishing_confidence",
        params={"epsilon": float(epsilon)},
        d=1,
        start_index=1,
        time_dependent=True,
        claim=identity_spec(),
    )


VALID_SELECTORS = (1, 2, 3, 4)  # max, arithmetic mean, geometric mean, min


def mean_selector(selectors) -> MapDescriptor:
    """Componentwise mean selection for three agents.

    Agent i is sent to the selector sigma_i applied over the current agent
    values in each coordinate: 1 max, 2 arithmetic mean, 3 geometric mean,
    4 min.  The family is interval-averaging, and proper exactly when max
    and min are not both selected (otherwise the box never shrinks).
    Geometric means restrict the domain to positive values.
    """
    sel = tuple(int(s) for s in selectors)
    if len(sel) != 3 or any(s not in VALID_SELECTORS for s in sel):
        raise MapSpecError(f"selectors must be three values from {VALID_SELECTORS}")
    proper = not (1 in sel and 4 in sel)
    return MapDescriptor(
        kind="mean_selector",
        params={"selectors": list(sel)},
        n=3,
        domain="positive" if 3 in sel else "reals",
        claim=interval_spec() if proper else None,
    )


def default_stripe_width(l: float) -> float:
    return (1.0 - min(l, 1.0)) / 2.0


def stripe_map(width_profile: Callable[[float], float] | None = None) -> MapDescriptor:
    """Three planar agents: agent 1 anchors, agent 2 slides along the 1-2
    chord by a weight depending on agent 3's distance to that line, agent 3
    drifts toward agent 2.  width_profile maps that line distance to the
    weight on agent 1; None uses (1 - min(l, 1))/2.  Custom profiles are not
    serializable."""
    if width_profile is not None and not callable(width_profile):
        raise MapSpecError("width_profile must be callable")
    return MapDescriptor(
        kind="stripe",
        n=3,
        d=2,
        claim=identity_spec(),
        width_profile=width_profile,
    )


def midpoint_map() -> MapDescriptor:
    """Each of three agents jumps to the midpoint of the other two."""
    return MapDescriptor(kind="midpoint", n=3, claim=identity_spec())


def scale_map(factor: float) -> MapDescriptor:
    """x -> factor * x; a non-averaging fixture for factor > 1 since doubling
    escapes any hull not containing the origin."""
    return MapDescriptor(kind="scale", params={"factor": float(factor)})


def deform(inner: MapDescriptor, phi: Deformation) -> MapDescriptor:
    """Conjugate `inner` by the componentwise change of coordinates `phi`:
    the deformed map is inverse o inner o forward.  Requires inner to accept
    everything in the forward image of phi's domain."""
    if inner.kind == "deformed":
        raise MapSpecError("nesting deformations is not supported")
    return MapDescriptor(
        kind="deformed",
        params={"deformation": phi.name},
        n=inner.n,
        d=inner.d,
        domain=phi.domain,
        start_index=inner.start_index,
        time_dependent=inner.time_dependent,
        claim=inner.claim,
        inner=inner,
        deformation=phi,
    )


def _check_domain(desc: MapDescriptor, coords: np.ndarray) -> None:
    if desc.domain == "positive" and not (coords > POSITIVE_FLOOR).all():
        raise DomainError(f"{desc.label()} requires strictly positive coordinates")


def _apply_linear(desc, t, coords):
    a = np.asarray(desc.params["matrix"], dtype=float)
    return a @ coords


def _apply_decaying_pair(desc, t, coords):
    x1, x2 = coords[0], coords[1]
    if desc.params["rate"] == "quarter_power":
        q = 0.25**t
        return np.array([(1.0 - q) * x1 + q * x2, q * x1 + (1.0 - q) * x2])
    # ((t-1)*x1 + x2)/t keeps integer-valued canonical runs exact to the last ulp
    return np.array([((t - 1.0) * x1 + x2) / t, x2])


def _apply_vanishing(desc, t, coords):
    eps = desc.params["epsilon"]
    x = coords[:, 0]
    r = np.abs(x[:, None] - x[None, :]) / eps
    with np.errstate(over="ignore", under="ignore"):
        w = np.exp(-(r**t))
    return ((w @ x) / w.sum(axis=1))[:, None]


def _apply_mean_selector(desc, t, coords):
    out = np.empty_like(coords)
    for i, s in enumerate(desc.params["selectors"]):
        if s == 1:
            out[i] = coords.max(axis=0)
        elif s == 2:
            out[i] = coords.mean(axis=0)
        elif s == 3:
            out[i] = np.exp(np.log(coords).mean(axis=0))
        else:
            out[i] = coords.min(axis=0)
    return out


def _apply_stripe(desc, t, coords):
    x1, x2, x3 = coords
    width = desc.width_profile or default_stripe_width
    e = x2 - x1
    den = float(np.linalg.norm(e))
    if den <= POSITIVE_FLOOR:
        l = float(np.linalg.norm(x3 - x1))  # degenerate chord: plain distance
    else:
        l = abs(float(e[0] * (x3 - x1)[1] - e[1] * (x3 - x1)[0])) / den
    a = float(width(l))
    return np.array([x1, a * x1 + (1.0 - a) * x2, 0.2 * x2 + 0.8 * x3])


def _apply_midpoint(desc, t, coords):
    total = coords.sum(axis=0)
    return (total[None, :] - coords) / 2.0


def _apply_scale(desc, t, coords):
    return desc.params["factor"] * coords


def _apply_deformed(desc, t, coords):
    fw = desc.deformation.forward(coords)
    out = apply_map(desc.inner, t, Profile(fw))
    return desc.deformation.inverse(out.coords)


_APPLY = {
    "linear": _apply_linear,
    "decaying_pair": _apply_decaying_pair,
    "vanishing_confidence": _apply_vanishing,
    "mean_selector": _apply_mean_selector,
    "stripe": _apply_stripe,
    "midpoint": _apply_midpoint,
    "scale": _apply_scale,
    "deformed": _apply_deformed,
}


def apply_map(desc: MapDescriptor, t: int, profile: Profile) -> Profile:
    """Apply descriptor at time index t.  Raises DomainError off-domain and
    MapError on shape or index misuse."""
    if t < desc.start_index:
        raise MapError(
            f"{desc.label()} starts at index {desc.start_index}, got t={t}"
        )
    coords = profile.coords
    if desc.n is not None and profile.n != desc.n:
        raise MapError(f"{desc.label()} expects {desc.n} agents, got {profile.n}")
    if desc.d is not None and profile.d != desc.d:
        raise MapError(f"{desc.label()} expects dimension {desc.d}, got {profile.d}")
    _check_domain(desc, coords)
    return Profile(_APPLY[desc.kind](desc, t, coords))


def descriptor_to_dict(desc: MapDescriptor) -> dict:
    """Serializable form: kind, params, domain, start_index, coordinate_map."""
    if desc.kind == "stripe" and desc.width_profile is not None:
        raise MapSpecError("custom stripe width profiles are not serializable")
    params = {k: v for k, v in desc.params.items()}
    if desc.kind == "deformed":
        params["inner"] = descriptor_to_dict(desc.inner)
    return {
        "kind": desc.kind,
        "params": params,
        "domain": desc.domain,
        "start_index": desc.start_index,
        "coordinate_map": None if desc.claim is None else desc.claim.to_dict(),
    }


def descriptor_from_dict(data: dict) -> MapDescriptor:
    """Rebuild a descriptor from its serialized form via the canonical
    constructors, then cross-check any redundant fields present."""
    kind = data.get("kind")
    params = data.get("params", {})
    try:
        if kind == "linear":
            desc = linear_map(params["matrix"])
        elif kind == "decaying_pair":
            desc = decaying_pair_family(params["rate"])
        elif kind == "vanishing_confidence":
            desc = vanishing_confidence(params["epsilon"])
        elif kind == "mean_selector":
            desc = mean_selector(params["selectors"])
        elif kind == "stripe":
            desc = stripe_map()
        elif kind == "midpoint":
            desc = midpoint_map()
        elif kind == "scale":
            desc = scale_map(params["factor"])
        elif kind == "deformed":
            name = params["deformation"]
            if name not in DEFORMATIONS:
                raise MapSpecError(f"unknown deformation {name!r}")
            desc = deform(descriptor_from_dict(params["inner"]), DEFORMATIONS[name]())
        else:
            raise MapSpecError(f"unknown map kind {kind!r}")
    except KeyError as exc:
        raise MapSpecError(f"map {kind!r} is missing parameter {exc}") from exc
    for key, val in (("domain", desc.domain), ("start_index", desc.start_index)):
        if key in data and data[key] != val:
            raise MapSpecError(
                f"{key}={data[key]!r} conflicts with canonical value {val!r}"
            )
    if "coordinate_map" in data and data["coordinate_map"] is not None:
        stated = CoordinateMapSpec.from_dict(data["coordinate_map"])
        if desc.claim is not None and stated != desc.claim:
            raise MapSpecError("coordinate_map conflicts with the canonical claim")
        if desc.claim is None:
            raise MapSpecError(f"{desc.label()} does not claim a coordinate map")
    return desc
