# -*- coding: utf-8 -*-

"""Anchored bundles, their induced vector fields, composite flows, and bracket ranks.

An anchored bundle over ``R^n`` is given here in a global trivialization ``N = R^n x R^k``
by its anchor ``gamma(q, u)``, the velocity assigned to the fiber element ``u`` at ``q``.
Sections of the bundle induce vector fields ``q -> gamma(q, s(q))``; their composite
flows sweep out the leaves of the foliation generated by the image of the anchor.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .constants import (
    BRACKET_MAX_STEP,
    BRACKET_NESTING_FACTOR,
    BRACKET_STEP,
    DOMAIN_GUARD,
    RANK_THRESHOLD,
    get_default_step,
)
from .exceptions import Blowup, NonFiniteOutput
from .liegroup import steps_for

__all__ = [
    "AnchoredBundle",
    "Section",
    "CompositeFlowSpec",
    "Concatenation",
    "OrbitSample",
    "BracketField",
    "evaluate_anchor",
    "linearity_residual",
    "invert_bundle",
    "induced_field",
    "flow",
    "composite_flow",
    "concatenation",
    "lie_bracket",
    "bracket_rank",
    "sample_orbit",
    "BUNDLE_NAMES",
    "get_bundle",
    "montgomery_profile",
]

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]
Anchor = Callable[[np.ndarray, np.ndarray], np.ndarray]
LeafResidual = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class AnchoredBundle:
    """A trivial bundle ``R^n x R^k -> R^n`` with an anchor map into ``TR^n``."""

    #: The dimension n of the base
    base_dim: int
    #: The dimension k of the fibers
    fiber_dim: int
    #: The anchor, mapping a base point and fiber coordinates to a velocity
    anchor: Anchor
    #: Whether the anchor is linear in the fiber coordinates
    linear: bool = False
    name: str = "anonymous"
    #: Distance of a point from the leaf through a reference point, when the leaves are known
    leaf_residual: Optional[LeafResidual] = None


@dataclass(frozen=True)
class Section:
    """A section of an anchored bundle, given by its fiber coordinates over each point."""

    bundle: AnchoredBundle
    value: VectorField
    name: str = ""

    @classmethod
    def constant(cls, bundle: AnchoredBundle, u: Sequence[float], name: str = "") -> "Section":
        """Build the section with constant fiber coordinates ``u``."""
        u = np.asarray(u, dtype=float)
        return cls(bundle, lambda _q: u, name=name or f"const{tuple(u.tolist())}")


@dataclass(frozen=True)
class CompositeFlowSpec:
    """The fields ``(X_l, ..., X_1)`` and times ``(t_l, ..., t_1)`` of a composite flow.

    ``X_1`` is flowed first.
    """

    fields: Tuple[Section, ...]
    times: Tuple[float, ...]

    def __post_init__(self):  # noqa:D105
        if len(self.fields) != len(self.times):
            raise ValueError(f"got {len(self.fields)} fields but {len(self.times)} times")

    def inverse(self) -> "CompositeFlowSpec":
        """Get the composite flow undoing this one (reversed order, negated times)."""
        return CompositeFlowSpec(
            tuple(reversed(self.fields)),
            tuple(-t for t in reversed(self.times)),
        )


@dataclass(frozen=True)
class Concatenation:
    """A piecewise base trajectory made of integral curves of ``sgn(t_i) X_i``."""

    times: np.ndarray
    points: np.ndarray
    #: The junction times ``a_0 < a_1 < ... < a_l``
    breakpoints: Tuple[float, ...]

    @property
    def endpoint(self) -> np.ndarray:
        """The last point of the trajectory."""
        return self.points[-1]


@dataclass(frozen=True)
class OrbitSample:
    """Endpoints of random composite flows from a common start."""

    start: np.ndarray
    points: np.ndarray
    #: Number of composite flows that left the domain guard and were dropped
    dropped: int = 0


def evaluate_anchor(bundle: AnchoredBundle, q, u) -> np.ndarray:
    """Evaluate the anchor ``gamma(q, u)``.

    :raises NonFiniteOutput: If the anchor returns a non-finite vector
    """
    rv = np.asarray(bundle.anchor(np.asarray(q, dtype=float), np.asarray(u, dtype=float)))
    if not np.all(np.isfinite(rv)):
        raise NonFiniteOutput(f"anchor of {bundle.name} is not finite at q={q}, u={u}")
    return rv


def linearity_residual(bundle: AnchoredBundle, probes: int = 100, seed: int = 0) -> float:
    """Get the worst relative additivity defect of the anchor on random probes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        q = rng.uniform(-2, 2, bundle.base_dim)
        u, v = rng.normal(size=(2, bundle.fiber_dim))
        total = evaluate_anchor(bundle, q, u + v)
        defect = total - evaluate_anchor(bundle, q, u) - evaluate_anchor(bundle, q, v)
        worst = max(worst, float(np.linalg.norm(defect)) / (1 + float(np.linalg.norm(total))))
    return worst


def invert_bundle(bundle: AnchoredBundle) -> AnchoredBundle:
    """Get the inverse anchored bundle, with anchor ``-gamma``."""
    anchor = bundle.anchor
    name = bundle.name[:-3] if bundle.name.endswith("^-1") else f"{bundle.name}^-1"
    return AnchoredBundle(
        base_dim=bundle.base_dim,
        fiber_dim=bundle.fiber_dim,
        anchor=lambda q, u: -anchor(q, u),
        linear=bundle.linear,
        name=name,
        leaf_residual=bundle.leaf_residual,
    )


def induced_field(bundle: AnchoredBundle, section: Section) -> VectorField:
    """Get the vector field ``gamma(q, s(q))`` induced by a section."""

    def _field(q: np.ndarray) -> np.ndarray:
        return evaluate_anchor(bundle, q, section.value(q))

    return _field


def guard(x: np.ndarray) -> np.ndarray:
    """Check that a point is finite and inside the domain guard box."""
    if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DOMAIN_GUARD:
        raise Blowup(f"trajectory left the domain guard box at {x}")
    return x


def rk4_stages(f: Callable[[float, np.ndarray], np.ndarray], t: float, x: np.ndarray, h: float):
    """Compute the stage points of one classical Runge-Kutta step.

    :returns: A pair of the four stage ``(time, point)`` pairs and the next point
    """
    k1 = f(t, x)
    x2 = x + 0.5 * h * k1
    k2 = f(t + 0.5 * h, x2)
    x3 = x + 0.5 * h * k2
    k3 = f(t + 0.5 * h, x3)
    x4 = x + h * k3
    k4 = f(t + h, x4)
    stages = ((t, x), (t + 0.5 * h, x2), (t + 0.5 * h, x3), (t + h, x4))
    return stages, guard(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def flow(field: VectorField, x, t: float, step: float) -> Tuple[np.ndarray, np.ndarray]:
    """Follow the flow of a field for a signed time.

    :returns: The elapsed times ``0 ... |t|`` and the visited points
    :raises Blowup: If the trajectory leaves the domain guard box
    """
    x = guard(np.asarray(x, dtype=float))
    n = steps_for(abs(t), step)
    points = [x]
    if n:
        h = t / n
        for i in range(n):
            _, x = rk4_stages(lambda _t, y: field(y), i * h, x, h)
            points.append(x)
    return np.linspace(0.0, abs(t), n + 1), np.stack(points)


def concatenation(spec: CompositeFlowSpec, x, step: Optional[float] = None) -> Concatenation:
    """Build the concatenation of integral curves realizing a composite flow.

    Segment ``i`` runs over ``[a_{i-1}, a_i]`` with ``a_i - a_{i-1} = |t_i|`` and is an integral
    curve of ``sgn(t_i) X_i``.

    :raises Blowup: If a segment leaves the domain guard box
    """
    step = step or get_default_step()
    x = np.asarray(x, dtype=float)
    times, points, breakpoints = [np.zeros(1)], [x[np.newaxis]], [0.0]
    for section, t in zip(reversed(spec.fields), reversed(spec.times)):
        elapsed, segment = flow(induced_field(section.bundle, section), points[-1][-1], t, step)
        times.append(breakpoints[-1] + elapsed[1:])
        points.append(segment[1:])
        breakpoints.append(breakpoints[-1] + abs(t))
    return Concatenation(np.concatenate(times), np.concatenate(points), tuple(breakpoints))


def composite_flow(spec: CompositeFlowSpec, x, step: Optional[float] = None) -> np.ndarray:
    """Apply the composite flow ``phi^l_{t_l} o ... o phi^1_{t_1}`` to ``x``.

    :raises Blowup: If an intermediate point leaves the domain guard box
    """
    return concatenation(spec, x, step=step).endpoint


def _nesting(field: VectorField) -> int:
    return field.nesting if isinstance(field, BracketField) else 0


def _differencing_step(q: np.ndarray, nesting: int) -> float:
    scale = float(np.linalg.norm(q))
    rv = max(BRACKET_STEP, BRACKET_STEP * scale) * BRACKET_NESTING_FACTOR**nesting
    return min(rv, BRACKET_MAX_STEP * max(1.0, scale))


def _directional_derivative(field: VectorField, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.zeros_like(q)
    eps = _differencing_step(q, _nesting(field)) / norm
    return (field(q + eps * v) - field(q - eps * v)) / (2 * eps)


@dataclass(frozen=True)
class BracketField:
    """The Lie bracket ``[X, Y] = DY X - DX Y`` of two vector fields by central differences.

    Nested brackets difference with a step widened by
    :data:`anchorlift.constants.BRACKET_NESTING_FACTOR` per level, so roundoff in the inner
    quotient is not amplified into spurious directions.
    """

    left: VectorField
    right: VectorField

    @property
    def nesting(self) -> int:
        """The bracket depth of this field."""
        return 1 + max(_nesting(self.left), _nesting(self.right))

    def __call__(self, q) -> np.ndarray:  # noqa:D102
        q = np.asarray(q, dtype=float)
        return _directional_derivative(self.right, q, self.left(q)) - _directional_derivative(
            self.left, q, self.right(q)
        )


def lie_bracket(x_field: VectorField, y_field: VectorField) -> VectorField:
    """Get the Lie bracket of two vector fields."""
    return BracketField(x_field, y_field)


def _iterated_brackets(fields: Sequence[VectorField], depth: int) -> List[VectorField]:
    rv = list(fields)
    previous = list(fields)
    for level in range(1, depth + 1):
        if level == 1:
            current = [
                lie_bracket(a, b) for i, a in enumerate(fields) for b in fields[i + 1 :]
            ]
        else:
            current = [lie_bracket(a, b) for a in fields for b in previous]
        rv.extend(current)
        previous = current
    return rv


def bracket_rank(
    fields: Sequence[VectorField],
    x,
    depth: int,
) -> Tuple[int, List[np.ndarray]]:
    """Get the numerical rank of the fields and their iterated brackets at a point.

    :param fields: The generating vector fields
    :param x: The point
    :param depth: The largest bracket depth; zero uses the fields only
    :returns: The rank and an orthonormal basis of the spanned subspace of ``R^n``
    """
    x = np.asarray(x, dtype=float)
    vectors = np.stack([field(x) for field in _iterated_brackets(fields, depth)])
    _, singular_values, vt = np.linalg.svd(vectors)
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0, []
    rank = int(np.sum(singular_values > RANK_THRESHOLD * singular_values[0]))
    return rank, list(vt[:rank])


def sample_orbit(
    bundle: AnchoredBundle,
    sections: Sequence[Section],
    x,
    count: int,
    max_time: float,
    seed: int,
    step: Optional[float] = None,
    use_tqdm: bool = False,
) -> OrbitSample:
    """Sample endpoints of random composite flows of the induced fields and their negatives.

    Each composite flow has between one and six segments with uniformly drawn sections,
    signs, and durations in ``[0, max_time]``. All draws happen before any flow is
    integrated, so the sample only depends on the seed.

    :raises ValueError: If ``count`` is not positive
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    plans = []
    for _ in range(count):
        length = int(rng.integers(1, 7))
        indices = rng.integers(0, len(sections), length)
        signs = rng.choice([-1.0, 1.0], length)
        times = signs * rng.uniform(0.0, max_time, length)
        plans.append(
            CompositeFlowSpec(tuple(sections[i] for i in indices), tuple(times.tolist()))
        )

    x = np.asarray(x, dtype=float)
    points, dropped = [], 0
    it = tqdm(plans, desc=f"Sampling orbit of {bundle.name}", unit="flow", disable=not use_tqdm)
    for plan in it:
        try:
            points.append(composite_flow(plan, x, step=step))
        except Blowup as e:
            dropped += 1
            logger.warning("dropped orbit sample: %s", e)
    points = np.stack(points) if points else np.empty((0, bundle.base_dim))
    return OrbitSample(start=x, points=points, dropped=dropped)


def montgomery_profile(r):
    """Get the profile ``p(r) = r^2 / 2 - r^4 / 4`` with a non-degenerate maximum at 1."""
    return 0.5 * r**2 - 0.25 * r**4


def _montgomery_anchor(q: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.array([u[0], u[1], -u[1] * montgomery_profile(q[0])])


def _two_leaf_anchor(q: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.array([u[0], u[1] * q[1]])


def _two_leaf_residual(x0: np.ndarray, x: np.ndarray) -> float:
    if x0[1] != 0 and np.sign(x[1]) == np.sign(x0[1]):
        return 0.0
    return abs(float(x[1]))


def _single_leaf(_x0: np.ndarray, _x: np.ndarray) -> float:
    return 0.0


BUNDLE_NAMES = ("montgomery", "twoleaf", "twoleaf-axis", "planar-identity")


def get_bundle(name: str) -> AnchoredBundle:
    """Get a built-in anchored bundle.

    - ``montgomery``: ``R^3 x R^2`` with ``X1 = d/dr`` and ``X2 = d/dtheta - p(r) d/dz``
    - ``twoleaf``: ``R^2 x R^2`` with ``X = d/dx`` and ``Y = y d/dy``
    - ``twoleaf-axis``: the pull-back of ``twoleaf`` onto its leaf ``{y = 0}``
    - ``planar-identity``: ``R^2 x R^2`` with the identity anchor

    :raises KeyError: If the name is unknown
    """
    if name == "montgomery":
        return AnchoredBundle(3, 2, _montgomery_anchor, True, name, _single_leaf)
    if name == "twoleaf":
        return AnchoredBundle(2, 2, _two_leaf_anchor, True, name, _two_leaf_residual)
    if name == "twoleaf-axis":
        return AnchoredBundle(1, 2, lambda q, u: u[:1].copy(), True, name, _single_leaf)
    if name == "planar-identity":
        return AnchoredBundle(2, 2, lambda q, u: np.array(u, dtype=float), True, name, _single_leaf)
    raise KeyError(f"unknown bundle {name}. Use one of {', '.join(BUNDLE_NAMES)}")
