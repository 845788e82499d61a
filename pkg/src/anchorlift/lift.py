# -*- coding: utf-8 -*-

"""Principal lifts on trivialized bundles ``P = M x G`` and the transport they define.

A :class:`TrivializedLift` is given by its coefficient ``B(x, s)`` in the Lie algebra. The lift
of a fiber element ``s`` over ``x`` at ``(x, g)`` is ``(gamma(x, s), B(x, s) g)``, which is
right invariant by construction. Transporting a control solves ``dg/dt g^-1 = sign B(x, u)``
along the realized base with the commutator-free stepper of :mod:`anchorlift.liegroup`.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .anchored import AnchoredBundle, Section, evaluate_anchor
from .constants import LOOP_CLOSURE_TOL, get_default_step
from .curves import Control, ControlSegment, PiecewiseControl, RealizedCurve, integrate_admissible
from .exceptions import NonFiniteOutput, NotALoop, NotInvertible, SpecMismatch
from .liegroup import GroupElement, GroupPath, GroupSpec, cf4_step, get_group

__all__ = [
    "LiftSplit",
    "TrivializedLift",
    "LiftedCurve",
    "LiftedField",
    "BundleMorphismSpec",
    "PushedControl",
    "lift_value",
    "lifted_section_field",
    "transport",
    "displacement",
    "transfer_lift",
    "push_control",
    "check_split",
    "check_morphism",
    "LIFT_NAMES",
    "get_lift",
]

logger = logging.getLogger(__name__)

#: Maps a base point and a vector (fiber element or velocity) to algebra coordinates
CoefficientMap = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LiftSplit:
    """A decomposition ``B(x, s) = chi0(x, s) - A(x, gamma(x, s))``.

    ``A`` plays the role of a connection form and ``chi0`` of the remaining vertical part.
    """

    connection: CoefficientMap
    vertical: CoefficientMap


@dataclass(frozen=True)
class TrivializedLift:
    """A principal lift on ``M x G`` given by its coefficient on the identity section."""

    group: GroupSpec
    bundle: AnchoredBundle
    coefficient: CoefficientMap
    split: Optional[LiftSplit] = None
    #: Whether the coefficient is declared linear in the fiber
    is_connection: bool = False
    name: str = "anonymous"

    def coefficient_at(self, x, s) -> np.ndarray:
        """Evaluate the algebra coordinates of ``B(x, s)``.

        :raises NonFiniteOutput: If the coefficient is not finite
        """
        rv = np.asarray(
            self.coefficient(np.asarray(x, dtype=float), np.asarray(s, dtype=float)), dtype=float
        )
        if not np.all(np.isfinite(rv)):
            raise NonFiniteOutput(f"coefficient of {self.name} is not finite at x={x}, s={s}")
        return rv


def lift_value(lift: TrivializedLift, x, g: GroupElement, s) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate the lift of ``s`` at ``(x, g)``.

    :returns: The base velocity ``gamma(x, s)`` and the group velocity ``B(x, s) g``
    """
    base_velocity = evaluate_anchor(lift.bundle, x, s)
    return base_velocity, lift.group.hat(lift.coefficient_at(x, s)) @ g.matrix


@dataclass(frozen=True)
class LiftedField:
    """The vector field ``s^h`` induced by a section on ``M x G``.

    Points of ``M x G`` are flattened to ``(x, g_11, g_12, ...)`` so the field can be handed
    to :func:`anchorlift.anchored.bracket_rank`. The field extends linearly off the group.
    """

    lift: TrivializedLift
    section: Section

    def point(self, x, g: GroupElement) -> np.ndarray:
        """Flatten a point of ``M x G``."""
        return np.concatenate([np.asarray(x, dtype=float), g.matrix.ravel()])

    def __call__(self, z) -> np.ndarray:  # noqa:D102
        n, size = self.lift.bundle.base_dim, self.lift.group.matrix_size
        z = np.asarray(z, dtype=float)
        x, g = z[:n], z[n:].reshape(size, size)
        s = self.section.value(x)
        base_velocity = evaluate_anchor(self.lift.bundle, x, s)
        group_velocity = self.lift.group.hat(self.lift.coefficient_at(x, s)) @ g
        return np.concatenate([base_velocity, group_velocity.ravel()])


def lifted_section_field(lift: TrivializedLift, section: Section) -> LiftedField:
    """Get the vector field ``(x, g) -> h((x, g), s(x))`` on ``M x G``."""
    return LiftedField(lift, section)


@dataclass(frozen=True)
class LiftedCurve:
    """A realized base curve with the group path lifting it."""

    base: RealizedCurve
    path: GroupPath

    @property
    def end(self) -> Tuple[np.ndarray, GroupElement]:
        """The final point of the lifted curve."""
        return self.base.endpoint, self.path.end


def transport(
    lift: TrivializedLift,
    control: PiecewiseControl,
    x0,
    g0: GroupElement,
    step: Optional[float] = None,
) -> LiftedCurve:
    """Lift a control starting from ``(x0, g0)``.

    The base is integrated exactly as by :func:`anchorlift.curves.integrate_admissible`; the
    group is advanced on the same grid, with the coefficient sampled at the Runge-Kutta stage
    points. The group path stays continuous across breakpoints.

    :raises SpecMismatch: If ``g0`` is not an element of the lift's group
    :raises Blowup: If the base leaves the domain guard box
    """
    if g0.spec is not lift.group:
        raise SpecMismatch(f"initial element is in {g0.spec.name}, lift is in {lift.group.name}")
    step = step or get_default_step()
    spec = lift.group
    times: List[float] = [control.start]
    matrices: List[np.ndarray] = [np.array(g0.matrix)]
    segment: Optional[ControlSegment] = None

    def _advance(h: float, stages) -> None:
        coords = [
            segment.sign * lift.coefficient_at(x, segment.control(t)) for t, x in stages
        ]
        matrices.append(cf4_step(spec, coords, h, matrices[-1]))

    x = np.asarray(x0, dtype=float)
    pieces = []
    for segment in control:
        realized = integrate_admissible(
            lift.bundle, PiecewiseControl((segment,)), x, step, on_step=_advance
        )
        pieces.extend(realized.pieces)
        times.extend(realized.pieces[0].times[1:].tolist())
        x = realized.endpoint
    base = RealizedCurve(control, np.asarray(x0, dtype=float), tuple(pieces))
    logger.debug("transported %d segments with %s", len(control), lift.name)
    return LiftedCurve(base, GroupPath(spec, np.array(times), np.stack(matrices)))


def displacement(
    lift: TrivializedLift,
    loop: PiecewiseControl,
    x0,
    step: Optional[float] = None,
) -> GroupElement:
    """Get the displacement ``a`` with transport from ``(x0, e)`` ending at ``(x0, a)``.

    :raises NotALoop: If the realized base does not return to ``x0``
    """
    lifted = transport(lift, loop, x0, lift.group.identity(), step=step)
    gap = float(np.linalg.norm(lifted.base.endpoint - np.asarray(x0, dtype=float)))
    if gap > LOOP_CLOSURE_TOL:
        raise NotALoop(gap)
    return lifted.path.end


@dataclass(frozen=True)
class BundleMorphismSpec:
    """A morphism ``F(x', g') = (f_bar(x'), F_bar(g'))`` covering an anchored bundle morphism.

    The base map only needs a left inverse, so immersions onto leaves are allowed.
    """

    source: AnchoredBundle
    target: AnchoredBundle
    #: The base map ``f_bar``
    base_map: Callable[[np.ndarray], np.ndarray]
    #: A left inverse of ``f_bar``
    base_inverse: Callable[[np.ndarray], np.ndarray]
    #: The fiber map ``f(x', s')``
    fiber_map: CoefficientMap
    source_group: GroupSpec
    target_group: GroupSpec
    #: The algebra map ``L`` as a matrix acting on basis coordinates
    algebra_map: np.ndarray
    #: The inverse of the fiber map ``f^-1(x', s)``, when it exists
    fiber_inverse: Optional[CoefficientMap] = None
    #: The group morphism ``F_bar`` on matrices, when known, used to check ``F_bar exp = exp L``
    group_map: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def map_group(self, g: GroupElement) -> GroupElement:
        """Apply ``F_bar`` through the algebra map when no group map is given."""
        if self.group_map is not None:
            return self.target_group.element(self.group_map(g.matrix))
        coords = self.algebra_map @ self.source_group.log_coords(g.matrix)
        return self.target_group.element(self.target_group.exp_matrix(coords))


def transfer_lift(morphism: BundleMorphismSpec, lift_prime: TrivializedLift) -> TrivializedLift:
    """Transfer a lift along a bundle morphism.

    The coefficient of the result is ``B(x, s) = L B'(f_bar^-1(x), f^-1(f_bar^-1(x), s))``.

    :raises NotInvertible: If the morphism has no fiber inverse
    :raises SpecMismatch: If the lift does not live on the morphism's source
    """
    if morphism.fiber_inverse is None:
        raise NotInvertible("transfer needs a fiber map with an inverse")
    if lift_prime.group is not morphism.source_group:
        raise SpecMismatch(
            f"lift is in {lift_prime.group.name}, morphism starts in {morphism.source_group.name}"
        )
    algebra_map = np.asarray(morphism.algebra_map, dtype=float)
    fiber_inverse = morphism.fiber_inverse

    def _coefficient(x: np.ndarray, s: np.ndarray) -> np.ndarray:
        x_prime = morphism.base_inverse(x)
        return algebra_map @ lift_prime.coefficient_at(x_prime, fiber_inverse(x_prime, s))

    return TrivializedLift(
        group=morphism.target_group,
        bundle=morphism.target,
        coefficient=_coefficient,
        is_connection=lift_prime.is_connection,
        name=f"{lift_prime.name}->{morphism.target.name}",
    )


@dataclass(frozen=True, eq=False)
class PushedControl(Control):
    """The image ``f(c'(t), u'(t))`` of a control along its realized base."""

    curve: RealizedCurve
    fiber_map: CoefficientMap
    control: Control

    def __call__(self, t: float) -> np.ndarray:  # noqa:D102
        return np.asarray(self.fiber_map(self.curve.at(t), self.control(t)), dtype=float)


def push_control(
    morphism: BundleMorphismSpec,
    control: PiecewiseControl,
    x0_prime,
    step: Optional[float] = None,
) -> Tuple[PiecewiseControl, np.ndarray]:
    """Push a source control through the morphism.

    :returns: The image control, with the same breakpoints and signs, and its start ``f_bar(x0')``
    """
    curve = integrate_admissible(morphism.source, control, x0_prime, step=step)
    pushed = PiecewiseControl(
        tuple(
            ControlSegment(
                segment.t0,
                segment.t1,
                PushedControl(curve, morphism.fiber_map, segment.control),
                segment.sign,
            )
            for segment in control
        )
    )
    return pushed, np.asarray(morphism.base_map(np.asarray(x0_prime, dtype=float)), dtype=float)


def _probes(dim: int, probes: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-2.0, 2.0, (probes, dim))


def check_split(lift: TrivializedLift, probes: int = 100, seed: int = 0) -> Dict[str, float]:
    """Probe the declared structure of a lift.

    :returns: The worst defect of ``B = chi0 - A gamma`` under ``"split"`` (zero without a
        split), and of linearity in the fiber under ``"linearity"`` (zero unless the lift is
        declared a connection)
    """
    bundle = lift.bundle
    xs = _probes(bundle.base_dim, probes, seed)
    ss = _probes(bundle.fiber_dim, 2 * probes, seed + 1)
    split_defect, linearity_defect = 0.0, 0.0
    for x, s, r in zip(xs, ss[:probes], ss[probes:]):
        b = lift.coefficient_at(x, s)
        if lift.split is not None:
            expected = np.asarray(lift.split.vertical(x, s)) - np.asarray(
                lift.split.connection(x, evaluate_anchor(bundle, x, s))
            )
            split_defect = max(split_defect, float(np.linalg.norm(b - expected)))
        if lift.is_connection:
            defect = lift.coefficient_at(x, s + 2.0 * r) - b - 2.0 * lift.coefficient_at(x, r)
            linearity_defect = max(linearity_defect, float(np.linalg.norm(defect)))
    return {"split": split_defect, "linearity": linearity_defect}


def check_morphism(
    morphism: BundleMorphismSpec,
    probes: int = 50,
    seed: int = 0,
) -> Dict[str, float]:
    """Probe the conditions a bundle morphism must satisfy.

    :returns: The worst defects of the base left inverse (``"base_inverse"``), the fiber
        inverse (``"fiber_inverse"``), the anchored morphism condition
        ``D f_bar gamma' = gamma f`` by central differences (``"anchor"``), and of
        ``F_bar exp = exp L`` when a group map is given (``"exp"``)
    """
    source = morphism.source
    xs = _probes(source.base_dim, probes, seed)
    ss = _probes(source.fiber_dim, probes, seed + 1)
    rv = {"base_inverse": 0.0, "fiber_inverse": 0.0, "anchor": 0.0, "exp": 0.0}
    h = 1e-6
    for x, s in zip(xs, ss):
        image = np.asarray(morphism.base_map(x), dtype=float)
        rv["base_inverse"] = max(
            rv["base_inverse"], float(np.linalg.norm(morphism.base_inverse(image) - x))
        )
        fiber_image = np.asarray(morphism.fiber_map(x, s), dtype=float)
        if morphism.fiber_inverse is not None:
            back = np.asarray(morphism.fiber_inverse(x, fiber_image), dtype=float)
            rv["fiber_inverse"] = max(rv["fiber_inverse"], float(np.linalg.norm(back - s)))
        v = evaluate_anchor(source, x, s)
        pushed = (morphism.base_map(x + h * v) - morphism.base_map(x - h * v)) / (2 * h)
        expected = evaluate_anchor(morphism.target, image, fiber_image)
        rv["anchor"] = max(rv["anchor"], float(np.linalg.norm(pushed - expected)))

    if morphism.group_map is not None:
        rng = np.random.default_rng(seed + 2)
        for coords in rng.uniform(-1.0, 1.0, (probes, morphism.source_group.algebra_dim)):
            left = morphism.group_map(morphism.source_group.exp_matrix(coords))
            right = morphism.target_group.exp_matrix(morphism.algebra_map @ coords)
            rv["exp"] = max(rv["exp"], float(np.linalg.norm(left - right)))
    return rv


def _area(x: np.ndarray, v: np.ndarray) -> float:
    return 0.5 * (x[0] * v[1] - x[1] * v[0])


def _area_lift(
    bundle: AnchoredBundle, group: GroupSpec, kappa: float, index: int, name: str
) -> TrivializedLift:
    def _connection(x: np.ndarray, v: np.ndarray) -> np.ndarray:
        rv = np.zeros(group.algebra_dim)
        rv[index] = -kappa * _area(x, v)
        return rv

    def _coefficient(x: np.ndarray, s: np.ndarray) -> np.ndarray:
        return -_connection(x, evaluate_anchor(bundle, x, s))

    return TrivializedLift(
        group=group,
        bundle=bundle,
        coefficient=_coefficient,
        split=LiftSplit(_connection, lambda _x, _s: np.zeros(group.algebra_dim)),
        is_connection=bundle.linear,
        name=name,
    )


def _planar_lift(bundle: AnchoredBundle, group: GroupSpec, name: str) -> TrivializedLift:
    def _coefficient(_x: np.ndarray, s: np.ndarray) -> np.ndarray:
        rv = np.zeros(group.algebra_dim)
        rv[:2] = s[:2]
        return rv

    return TrivializedLift(group, bundle, _coefficient, is_connection=True, name=name)


def _exact_lift(bundle: AnchoredBundle, kappa: float) -> TrivializedLift:
    group = get_group("SO2")

    def _coefficient(x: np.ndarray, s: np.ndarray) -> np.ndarray:
        v = evaluate_anchor(bundle, x, s)
        return np.array([kappa * (x[1] * v[0] + x[0] * v[1])])

    return TrivializedLift(
        group, bundle, _coefficient, is_connection=bundle.linear, name="so2-exact"
    )


def _polynomial_lift(
    bundle: AnchoredBundle, group: GroupSpec, terms: Sequence[Sequence[Any]]
) -> TrivializedLift:
    parsed = []
    for index, coefficient, x_powers, s_powers in terms:
        if not 0 <= int(index) < group.algebra_dim:
            raise ValueError(f"basis index {index} out of range for {group.name}")
        if len(x_powers) != bundle.base_dim or len(s_powers) != bundle.fiber_dim:
            raise ValueError(f"term powers do not match the dimensions of {bundle.name}")
        parsed.append((int(index), float(coefficient), np.asarray(x_powers), np.asarray(s_powers)))

    def _coefficient(x: np.ndarray, s: np.ndarray) -> np.ndarray:
        rv = np.zeros(group.algebra_dim)
        for index, coefficient, x_powers, s_powers in parsed:
            rv[index] += coefficient * np.prod(x**x_powers) * np.prod(s**s_powers)
        return rv

    linear = all(int(np.sum(s_powers)) == 1 for *_, s_powers in parsed)
    return TrivializedLift(
        group, bundle, _coefficient, is_connection=linear, name="custom-polynomial"
    )


LIFT_NAMES = (
    "zero",
    "so2-area",
    "so2-exact",
    "so3-flat2",
    "so3-area-axis",
    "heisenberg-area",
    "custom-polynomial",
)


def get_lift(
    name: str,
    bundle: AnchoredBundle,
    params: Optional[Mapping[str, Any]] = None,
) -> TrivializedLift:
    """Get a built-in lift on a bundle.

    - ``zero``: ``B = 0`` in the group given by ``params["group"]`` (default ``SO2``)
    - ``so2-area``: ``B = kappa (x1 v2 - x2 v1) / 2 J`` with ``v = gamma(x, s)``
    - ``so2-exact``: ``B = kappa d(x1 x2)(v) J``, whose loop displacements are trivial
    - ``so3-flat2``: ``B = s1 E1 + s2 E2``
    - ``so3-area-axis``: ``B = kappa (x1 v2 - x2 v1) / 2 E3``
    - ``heisenberg-area``: ``B = s1 X + s2 Y``
    - ``custom-polynomial``: ``params["terms"]`` lists ``[basis index, coefficient, x powers,
      s powers]`` monomials in the group ``params["group"]``

    :raises KeyError: If the name is unknown
    :raises ValueError: If the parameters don't fit the bundle
    """
    params = dict(params or {})
    kappa = float(params.get("kappa", 1.0))
    if name in {"so2-area", "so2-exact", "so3-area-axis"} and bundle.base_dim < 2:
        raise ValueError(f"{name} needs a base of dimension at least 2")
    if name in {"so3-flat2", "heisenberg-area"} and bundle.fiber_dim < 2:
        raise ValueError(f"{name} needs fibers of dimension at least 2")
    if name == "zero":
        group = get_group(params.get("group", "SO2"))
        return TrivializedLift(
            group, bundle, lambda _x, _s: np.zeros(group.algebra_dim), is_connection=True, name=name
        )
    if name == "so2-area":
        return _area_lift(bundle, get_group("SO2"), kappa, 0, name)
    if name == "so2-exact":
        return _exact_lift(bundle, kappa)
    if name == "so3-flat2":
        return _planar_lift(bundle, get_group("SO3"), name)
    if name == "so3-area-axis":
        return _area_lift(bundle, get_group("SO3"), kappa, 2, name)
    if name == "heisenberg-area":
        return _planar_lift(bundle, get_group("Heisenberg3"), name)
    if name == "custom-polynomial":
        group = get_group(params.get("group", "SO2"))
        return _polynomial_lift(bundle, group, params.get("terms", []))
    raise KeyError(f"unknown lift {name}. Use one of {', '.join(LIFT_NAMES)}")
