# -*- coding: utf-8 -*-

"""Holonomy samples over loop families and estimates of the holonomy Lie algebra.

Loops are built from constant fiber directions at a base point. Their displacements sample
the holonomy group at a reference element of the fiber, and the logarithms of the sampled
elements, closed under brackets, estimate the Lie algebra of the restricted holonomy group.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import subspace_angles
from tqdm import tqdm

from .anchored import AnchoredBundle, Section, bracket_rank, induced_field
from .constants import CLOSURE_TOL, LOOP_CLOSURE_TOL, RANK_THRESHOLD, get_default_step
from .curves import PiecewiseControl, compose_curves, reverse
from .exceptions import (
    DimensionMismatch,
    NoLogsAvailable,
    NotALoop,
    OutOfInjectivityRadius,
    SpecMismatch,
)
from .liegroup import AlgebraElement, GroupElement, GroupSpec, ad_action, log
from .lift import TrivializedLift, lifted_section_field, transport

__all__ = [
    "LOOP_KINDS",
    "LoopFamily",
    "HolonomySample",
    "AlgebraEstimate",
    "generate_loops",
    "rectangle",
    "sample_loops",
    "sample_holonomy",
    "sample_along",
    "conjugate_sample",
    "holonomy_algebra",
    "principal_angle",
    "small_loop_log",
    "vertical_rank",
    "sample_to_frame",
    "estimate_to_frame",
]

logger = logging.getLogger(__name__)

LOOP_KINDS = ("rectangles", "polygon", "lasso")


@dataclass(frozen=True, eq=False)
class LoopFamily:
    """Loops at a base point, built from the fiber directions of a plane.

    - ``rectangles``: one rectangle with sides ``(a, b)`` per scale
    - ``polygon``: one regular polygon with ``sides`` edges and circumradius ``a`` per scale
    - ``lasso``: each rectangle conjugated by the out-and-back path following ``tail``
    """

    kind: str
    base_point: np.ndarray
    scales: Tuple[Tuple[float, float], ...]
    #: The indices ``(i, j)`` of the fiber directions spanning the loops
    plane: Tuple[int, int] = (0, 1)
    #: 1 for ``+e_i`` first, -1 for ``+e_j`` first
    orientation: int = 1
    #: The constant fiber vector of the lasso tail, run for one unit of time
    tail: Optional[np.ndarray] = None
    sides: int = 6

    def __post_init__(self):  # noqa:D105
        if self.kind not in LOOP_KINDS:
            raise ValueError(f"unknown loop kind {self.kind}. Use one of {', '.join(LOOP_KINDS)}")
        if self.orientation not in (1, -1):
            raise ValueError(f"orientation must be 1 or -1, got {self.orientation}")
        scales = tuple(
            (float(s), float(s)) if np.ndim(s) == 0 else (float(s[0]), float(s[-1]))
            for s in self.scales
        )
        if any(a < 0 or b < 0 for a, b in scales):
            raise ValueError(f"scales must be non-negative, got {scales}")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))
        object.__setattr__(self, "plane", tuple(int(i) for i in self.plane))
        if self.tail is not None:
            object.__setattr__(self, "tail", np.asarray(self.tail, dtype=float))


def _unit(dim: int, index: int) -> np.ndarray:
    rv = np.zeros(dim)
    rv[index] = 1.0
    return rv


def rectangle(
    fiber_dim: int,
    a: float,
    b: float,
    plane: Tuple[int, int] = (0, 1),
    orientation: int = 1,
) -> PiecewiseControl:
    """Build the rectangle ``+a e_i, +b e_j, -a e_i, -b e_j`` as a control.

    Sides of length zero are skipped. The backward sides use the inverse bundle, so the
    rectangle closes on any bundle whose fields for ``e_i`` and ``e_j`` commute.
    """
    i, j = plane if orientation == 1 else plane[::-1]
    if orientation != 1:
        a, b = b, a
    parts = [
        PiecewiseControl.constant(_unit(fiber_dim, i), a, sign=1),
        PiecewiseControl.constant(_unit(fiber_dim, j), b, sign=1),
        PiecewiseControl.constant(_unit(fiber_dim, i), a, sign=-1),
        PiecewiseControl.constant(_unit(fiber_dim, j), b, sign=-1),
    ]
    return compose_curves(parts)


def _polygon(fiber_dim: int, radius: float, family: LoopFamily) -> PiecewiseControl:
    if radius == 0:
        return PiecewiseControl()
    i, j = family.plane
    angles = 2 * math.pi * np.arange(family.sides + 1) / family.sides * family.orientation
    vertices = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    parts = []
    for start, end in zip(vertices[:-1], vertices[1:]):
        edge = end - start
        length = float(np.linalg.norm(edge))
        direction = np.zeros(fiber_dim)
        direction[i], direction[j] = edge / length
        parts.append(PiecewiseControl.constant(direction, length))
    return compose_curves(parts)


def generate_loops(family: LoopFamily, bundle: AnchoredBundle) -> List[PiecewiseControl]:
    """Build the loops of a family, one per scale.

    :raises DimensionMismatch: If the family does not fit the bundle's dimensions
    """
    if family.base_point.shape != (bundle.base_dim,):
        raise DimensionMismatch(
            f"base point has shape {family.base_point.shape}, {bundle.name} has base dimension "
            f"{bundle.base_dim}"
        )
    if len(family.plane) != 2 or not all(0 <= i < bundle.fiber_dim for i in family.plane):
        raise DimensionMismatch(
            f"plane {family.plane} is not a pair of fiber directions of {bundle.name}"
        )
    if family.tail is not None and family.tail.shape != (bundle.fiber_dim,):
        raise DimensionMismatch(
            f"tail has shape {family.tail.shape}, fibers have dimension {bundle.fiber_dim}"
        )

    rv = []
    for a, b in family.scales:
        if family.kind == "polygon":
            rv.append(_polygon(bundle.fiber_dim, a, family))
            continue
        loop = rectangle(bundle.fiber_dim, a, b, family.plane, family.orientation)
        if family.kind == "lasso" and family.tail is not None and np.any(family.tail):
            out = PiecewiseControl.constant(family.tail, 1.0)
            loop = compose_curves([out, loop, reverse(out)])
        rv.append(loop)
    return rv


@dataclass(frozen=True, eq=False)
class HolonomySample:
    """Displacements of loops seen from a reference element of the fiber."""

    spec: GroupSpec
    base_point: np.ndarray
    elements: Tuple[GroupElement, ...]
    #: The principal logarithms, ``None`` where an element is outside the injectivity radius
    logs: Tuple[Optional[AlgebraElement], ...]
    loop_ids: Tuple[str, ...]
    reference: GroupElement

    @property
    def skipped(self) -> int:
        """The number of elements without a logarithm."""
        return sum(a is None for a in self.logs)

    @property
    def available_logs(self) -> List[AlgebraElement]:
        """The logarithms that exist."""
        return [a for a in self.logs if a is not None]


def _safe_log(g: GroupElement) -> Optional[AlgebraElement]:
    try:
        return log(g)
    except OutOfInjectivityRadius:
        return None


def sample_loops(
    lift: TrivializedLift,
    loops: Sequence[PiecewiseControl],
    x0,
    step: Optional[float] = None,
    reference: Optional[GroupElement] = None,
    loop_ids: Optional[Sequence[str]] = None,
    use_tqdm: bool = False,
) -> HolonomySample:
    """Sample the displacements of explicit loops at ``(x0, reference)``.

    Each element is ``reference^-1 g(T)`` where ``g`` is the transport from ``reference``.

    :raises NotALoop: If a loop does not return to ``x0``
    """
    x0 = np.asarray(x0, dtype=float)
    reference = reference if reference is not None else lift.group.identity()
    inverse_reference = reference.inverse()
    loop_ids = tuple(loop_ids) if loop_ids is not None else tuple(str(i) for i in range(len(loops)))
    elements = []
    it = tqdm(loops, desc=f"Transporting loops with {lift.name}", unit="loop", disable=not use_tqdm)
    for loop_id, loop in zip(loop_ids, it):
        lifted = transport(lift, loop, x0, reference, step=step)
        gap = float(np.linalg.norm(lifted.base.endpoint - x0))
        if gap > LOOP_CLOSURE_TOL:
            logger.warning("loop %s does not close", loop_id)
            raise NotALoop(gap)
        elements.append(inverse_reference @ lifted.path.end)
    logs = tuple(_safe_log(g) for g in elements)
    skipped = sum(a is None for a in logs)
    if skipped:
        logger.warning("skipped %d logarithms outside the injectivity radius", skipped)
    return HolonomySample(
        spec=lift.group,
        base_point=x0,
        elements=tuple(elements),
        logs=logs,
        loop_ids=loop_ids,
        reference=reference,
    )


def _with_closure(loops: Sequence[PiecewiseControl]) -> Tuple[List[PiecewiseControl], List[str]]:
    rv = list(loops)
    ids = [str(i) for i in range(len(loops))]
    for i, loop in enumerate(loops):
        rv.append(reverse(loop))
        ids.append(f"{i}*")
    for i, first in enumerate(loops):
        for j in range(i + 1, len(loops)):
            rv.append(compose_curves([first, loops[j]]))
            ids.append(f"{j}.{i}")
    return rv, ids


def sample_holonomy(
    lift: TrivializedLift,
    family: LoopFamily,
    step: Optional[float] = None,
    reference: Optional[GroupElement] = None,
    closure: bool = True,
    use_tqdm: bool = False,
) -> HolonomySample:
    """Sample the holonomy group at ``(family.base_point, reference)``.

    :param closure: Also transport the reversed loops (ids ``"i*"``) and the compositions of
        pairs of loops (id ``"j.i"`` for loop ``i`` followed by loop ``j``)
    :raises NotALoop: If a loop does not return to the base point
    """
    start = time.time()
    loops = generate_loops(family, lift.bundle)
    if closure:
        loops, ids = _with_closure(loops)
    else:
        ids = [str(i) for i in range(len(loops))]
    rv = sample_loops(
        lift,
        loops,
        family.base_point,
        step=step,
        reference=reference,
        loop_ids=ids,
        use_tqdm=use_tqdm,
    )
    logger.info("sampled %d holonomy elements in %.2fs", len(rv.elements), time.time() - start)
    return rv


def sample_along(
    lift: TrivializedLift,
    family: LoopFamily,
    connector: PiecewiseControl,
    step: Optional[float] = None,
) -> HolonomySample:
    """Sample the holonomy group at the end of a connecting curve.

    With ``d`` the connector from ``(x0, e)`` to ``(y, k)``, each loop ``c`` of the family at
    ``x0`` is carried to the loop ``d c d*`` at ``y`` and sampled with reference ``k``.
    """
    connected = transport(lift, connector, family.base_point, lift.group.identity(), step=step)
    y, k = connected.end
    backwards = reverse(connector)
    loops = [
        compose_curves([backwards, loop, connector])
        for loop in generate_loops(family, lift.bundle)
    ]
    return sample_loops(lift, loops, y, step=step, reference=k)


def conjugate_sample(sample: HolonomySample, g: GroupElement) -> HolonomySample:
    """Get the sample seen from ``reference g``, with each element replaced by ``g^-1 a g``.

    :raises SpecMismatch: If ``g`` is not in the sample's group
    """
    if g.spec is not sample.spec:
        raise SpecMismatch(f"element is in {g.spec.name}, sample is in {sample.spec.name}")
    inverse = g.inverse()
    return HolonomySample(
        spec=sample.spec,
        base_point=sample.base_point,
        elements=tuple(inverse @ a @ g for a in sample.elements),
        logs=tuple(None if a is None else ad_action(inverse, a) for a in sample.logs),
        loop_ids=sample.loop_ids,
        reference=sample.reference @ g,
    )


@dataclass(frozen=True, eq=False)
class AlgebraEstimate:
    """An orthonormal basis of the estimated holonomy algebra."""

    spec: GroupSpec
    basis: Tuple[AlgebraElement, ...]
    closure_residual: float
    #: The singular values of the stacked logarithms
    singular_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def rank(self) -> int:
        """The dimension of the estimate."""
        return len(self.basis)

    def flattened(self) -> np.ndarray:
        """Get the basis matrices as the columns of an array."""
        if not self.basis:
            return np.empty((self.spec.matrix_size**2, 0))
        return np.stack([b.matrix.ravel() for b in self.basis], axis=1)

    def transported(self, g: GroupElement) -> "AlgebraEstimate":
        """Apply ``Ad_{g^-1}``, which carries the algebra at ``u`` to the one at ``u g``."""
        inverse = g.inverse()
        return AlgebraEstimate(
            self.spec,
            _orthonormal([ad_action(inverse, b).matrix for b in self.basis], self.spec),
            self.closure_residual,
            self.singular_values,
        )


def _orthonormal(matrices: Sequence[np.ndarray], spec: GroupSpec) -> Tuple[AlgebraElement, ...]:
    if not matrices:
        return ()
    q, _ = np.linalg.qr(np.stack([m.ravel() for m in matrices], axis=1))
    size = spec.matrix_size
    return tuple(AlgebraElement.from_matrix(spec, column.reshape(size, size)) for column in q.T)


def _residual(matrix: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    rv = matrix.copy()
    for b in basis:
        rv -= np.sum(rv * b) * b
    return rv


def _closure_residual(basis: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for i, a in enumerate(basis):
        for b in basis[i + 1 :]:
            worst = max(worst, float(np.linalg.norm(_residual(a @ b - b @ a, basis))))
    return worst


def holonomy_algebra(
    sample: HolonomySample,
    extra_bracket_depth: int = 1,
    tol: float = CLOSURE_TOL,
) -> AlgebraEstimate:
    """Estimate the holonomy algebra from the logarithms of a sample.

    The logarithms are orthonormalized by a singular value decomposition, keeping directions
    above ``tol`` and the relative rank threshold. Up to ``extra_bracket_depth`` closure passes
    then append the normalized residuals of brackets of basis pairs that exceed ``tol``.

    :raises NoLogsAvailable: If no element of the sample has a logarithm
    """
    logs = sample.available_logs
    if not logs:
        raise NoLogsAvailable(f"none of the {len(sample.elements)} elements has a logarithm")
    spec = sample.spec
    size = spec.matrix_size
    stacked = np.stack([a.matrix.ravel() for a in logs])
    _, singular_values, vt = np.linalg.svd(stacked, full_matrices=False)
    threshold = max(tol, RANK_THRESHOLD * (singular_values[0] if singular_values.size else 0.0))
    basis = [row.reshape(size, size) for row, s in zip(vt, singular_values) if s > threshold]

    for depth in range(extra_bracket_depth):
        added = 0
        for i in range(len(basis)):
            for j in range(i + 1, len(basis)):
                if len(basis) >= spec.algebra_dim:
                    break
                a, b = basis[i], basis[j]
                residual = _residual(a @ b - b @ a, basis)
                norm = float(np.linalg.norm(residual))
                if norm > tol:
                    basis.append(residual / norm)
                    added += 1
        logger.debug("closure pass %d added %d directions", depth + 1, added)
        if not added:
            break

    closure_residual = _closure_residual(basis)
    return AlgebraEstimate(
        spec=spec,
        basis=tuple(AlgebraElement.from_matrix(spec, b) for b in basis),
        closure_residual=closure_residual,
        singular_values=singular_values,
    )


def principal_angle(left: AlgebraEstimate, right: AlgebraEstimate) -> float:
    """Get the largest principal angle between two estimates of the same rank.

    :raises DimensionMismatch: If the ranks differ
    """
    if left.rank != right.rank:
        raise DimensionMismatch(f"ranks {left.rank} and {right.rank} differ")
    if left.rank == 0:
        return 0.0
    return float(np.max(subspace_angles(left.flattened(), right.flattened())))


def small_loop_log(
    lift: TrivializedLift,
    x0,
    dirs: Tuple[int, int] = (0, 1),
    eps: float = 1e-2,
    step: Optional[float] = None,
    extrapolate: bool = False,
) -> AlgebraElement:
    """Get ``log(a) / eps^2`` for the displacement ``a`` of the ``eps`` square in a fiber plane.

    The integrator step is capped at ``eps / 4``.

    :param extrapolate: Return ``2 L(eps / 2) - L(eps)``, cancelling the first order term
    :raises ValueError: If ``eps`` is not positive
    :raises OutOfInjectivityRadius: If the displacement has no logarithm
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if extrapolate:
        coarse = small_loop_log(lift, x0, dirs, eps, step)
        fine = small_loop_log(lift, x0, dirs, eps / 2, step)
        return fine * 2.0 - coarse
    step = min(step or get_default_step(), eps / 4)
    loop = rectangle(lift.bundle.fiber_dim, eps, eps, dirs)
    lifted = transport(lift, loop, x0, lift.group.identity(), step=step)
    return log(lifted.path.end) * (1.0 / eps**2)


def vertical_rank(
    lift: TrivializedLift,
    sections: Sequence[Section],
    x,
    g: GroupElement,
    depth: int,
) -> int:
    """Get the rank of the brackets of lifted fields at ``(x, g)`` beyond the base rank."""
    lifted = [lifted_section_field(lift, section) for section in sections]
    total, _ = bracket_rank(lifted, lifted[0].point(x, g), depth)
    base, _ = bracket_rank([induced_field(lift.bundle, s) for s in sections], x, depth)
    return total - base


def sample_to_frame(sample: HolonomySample) -> pd.DataFrame:
    """Get one row per loop with the element entries and logarithm coordinates."""
    size, dim = sample.spec.matrix_size, sample.spec.algebra_dim
    rows = []
    for loop_id, g, a in zip(sample.loop_ids, sample.elements, sample.logs):
        row = {"loop": loop_id, "has_log": a is not None}
        row.update(
            {f"g{i + 1}{j + 1}": g.matrix[i, j] for i in range(size) for j in range(size)}
        )
        row.update({f"log{k + 1}": np.nan if a is None else a.coords[k] for k in range(dim)})
        row["residual"] = g.residual()
        rows.append(row)
    return pd.DataFrame(rows)


def estimate_to_frame(estimate: AlgebraEstimate) -> pd.DataFrame:
    """Get one row of algebra coordinates per basis element."""
    return pd.DataFrame(
        [
            {"basis": i, **{f"c{k + 1}": c for k, c in enumerate(b.coords)}}
            for i, b in enumerate(estimate.basis)
        ],
        columns=["basis", *(f"c{k + 1}" for k in range(estimate.spec.algebra_dim))],
    )
