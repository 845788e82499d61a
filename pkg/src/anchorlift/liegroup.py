# -*- coding: utf-8 -*-

"""Matrix Lie groups, their algebras, and the right-logarithmic-derivative solver.

Five groups are available by name, each realized by real matrices with a fixed basis of
its Lie algebra that is orthogonal for the Frobenius inner product:

- ``SO2``: rotations of the plane, basis ``J``
- ``SO3``: rotations of space, basis ``E1, E2, E3`` with ``[E1, E2] = E3``
- ``SE2``: rigid motions of the plane as 3x3 homogeneous matrices, basis ``R, Tx, Ty``
- ``Heisenberg3``: 3x3 upper unitriangular matrices, basis ``X, Y, Z`` with ``[X, Y] = Z``
- ``TransR1``: translations of the line as 2x2 upper unitriangular matrices

All transport in the package goes through :func:`solve_right_log_ode` or the same
fourth order commutator-free stepper, which only ever multiplies exponentials of algebra
elements and therefore keeps every sample on the group.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from .constants import CONSTRAINT_TOL, INJECTIVITY_MARGIN
from .exceptions import NonFiniteRHS, OutOfInjectivityRadius, SpecMismatch

__all__ = [
    "GROUP_NAMES",
    "GroupSpec",
    "GroupElement",
    "AlgebraElement",
    "GroupPath",
    "get_group",
    "exp",
    "log",
    "ad_action",
    "ad_matrix",
    "bracket",
    "solve_right_log_ode",
    "cf4_step",
    "steps_for",
]

logger = logging.getLogger(__name__)

GROUP_NAMES = ("SO2", "SO3", "SE2", "Heisenberg3", "TransR1")


def _frozen(array) -> np.ndarray:
    rv = np.array(array, dtype=float)
    rv.setflags(write=False)
    return rv


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """A matrix Lie group together with a fixed basis of its Lie algebra."""

    #: One of :data:`GROUP_NAMES`
    name: str
    #: The size of the realizing matrices
    matrix_size: int
    #: The basis of the algebra, pairwise orthogonal under the Frobenius inner product
    basis: Tuple[np.ndarray, ...]
    _exp: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _log: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _residual: Callable[[np.ndarray], float] = field(repr=False)

    @property
    def algebra_dim(self) -> int:
        """The dimension of the Lie algebra."""
        return len(self.basis)

    @property
    def is_abelian(self) -> bool:
        """Whether all basis elements commute."""
        return all(
            np.allclose(a @ b, b @ a) for i, a in enumerate(self.basis) for b in self.basis[i:]
        )

    def identity(self) -> "GroupElement":
        """Get the identity element."""
        return GroupElement(self, np.eye(self.matrix_size))

    def zero(self) -> "AlgebraElement":
        """Get the zero of the Lie algebra."""
        return AlgebraElement(self, np.zeros(self.algebra_dim))

    def hat(self, coords) -> np.ndarray:
        """Turn algebra coordinates into a matrix."""
        return np.tensordot(np.asarray(coords, dtype=float), self._stack, axes=1)

    def vee(self, matrix: np.ndarray) -> np.ndarray:
        """Project a matrix onto the algebra and return its coordinates."""
        return np.tensordot(self._stack, matrix, axes=([1, 2], [0, 1])) / self._norms

    def element(self, matrix) -> "GroupElement":
        """Wrap a matrix as an element of this group."""
        return GroupElement(self, np.asarray(matrix, dtype=float))

    def vector(self, coords) -> "AlgebraElement":
        """Wrap coordinates as an element of the algebra of this group."""
        return AlgebraElement(self, np.asarray(coords, dtype=float))

    def constraint_residual(self, matrix: np.ndarray) -> float:
        """Measure how far a matrix is from satisfying the group constraints."""
        return self._residual(np.asarray(matrix, dtype=float))

    def exp_matrix(self, coords: np.ndarray) -> np.ndarray:
        """Compute the exponential of algebra coordinates as a matrix."""
        return self._exp(coords)

    def log_coords(self, matrix: np.ndarray) -> np.ndarray:
        """Compute the principal logarithm of a matrix as algebra coordinates."""
        return self._log(matrix)

    @cached_property
    def _stack(self) -> np.ndarray:
        return np.stack(self.basis)

    @cached_property
    def _norms(self) -> np.ndarray:
        return np.array([np.sum(b * b) for b in self.basis])


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of a matrix Lie group."""

    spec: GroupSpec
    matrix: np.ndarray

    def __post_init__(self):  # noqa:D105
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        """Multiply two group elements."""
        _check_same(self.spec, other.spec)
        return GroupElement(self.spec, self.matrix @ other.matrix)

    def inverse(self) -> "GroupElement":
        """Get the inverse element."""
        return GroupElement(self.spec, np.linalg.inv(self.matrix))

    def residual(self) -> float:
        """Get the group-constraint residual of the underlying matrix."""
        return self.spec.constraint_residual(self.matrix)

    def is_valid(self, tol: float = CONSTRAINT_TOL) -> bool:
        """Check the group constraints up to a tolerance."""
        return self.residual() <= tol

    def distance(self, other: "GroupElement") -> float:
        """Get the largest entrywise difference to another element."""
        _check_same(self.spec, other.spec)
        return float(np.max(np.abs(self.matrix - other.matrix)))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """A vector of a Lie algebra, stored by its coordinates in the group's basis."""

    spec: GroupSpec
    coords: np.ndarray

    def __post_init__(self):  # noqa:D105
        object.__setattr__(self, "coords", _frozen(self.coords))

    @property
    def matrix(self) -> np.ndarray:
        """The matrix realizing this vector."""
        return self.spec.hat(self.coords)

    @classmethod
    def from_matrix(cls, spec: GroupSpec, matrix: np.ndarray) -> "AlgebraElement":
        """Project a matrix onto the algebra of the given group."""
        return cls(spec, spec.vee(np.asarray(matrix, dtype=float)))

    def norm(self) -> float:
        """Get the Frobenius norm of the realizing matrix."""
        return float(np.linalg.norm(self.matrix))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":  # noqa:D105
        _check_same(self.spec, other.spec)
        return AlgebraElement(self.spec, self.coords + other.coords)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":  # noqa:D105
        _check_same(self.spec, other.spec)
        return AlgebraElement(self.spec, self.coords - other.coords)

    def __neg__(self) -> "AlgebraElement":  # noqa:D105
        return AlgebraElement(self.spec, -self.coords)

    def __mul__(self, scalar: float) -> "AlgebraElement":  # noqa:D105
        return AlgebraElement(self.spec, float(scalar) * self.coords)

    __rmul__ = __mul__


def _check_same(a: GroupSpec, b: GroupSpec) -> None:
    if a.name != b.name:
        raise SpecMismatch(f"can not combine elements of {a.name} and {b.name}")


def _unit(n: int, i: int, j: int) -> np.ndarray:
    rv = np.zeros((n, n))
    rv[i, j] = 1.0
    return rv


def _half_sinc_squared(theta: float) -> float:
    """Compute (1 - cos t) / t**2 without cancellation."""
    return 0.5 * np.sinc(theta / (2 * np.pi)) ** 2


def _orthogonality(rotation: np.ndarray) -> float:
    n = rotation.shape[0]
    residual = float(np.max(np.abs(rotation.T @ rotation - np.eye(n))))
    if np.linalg.det(rotation) <= 0:
        return max(residual, 1.0)
    return residual


def _check_angle(theta: float) -> None:
    if abs(theta) > np.pi - INJECTIVITY_MARGIN:
        raise OutOfInjectivityRadius(f"rotation angle {theta:.9f} too close to pi")


def _so2_exp(coords: np.ndarray) -> np.ndarray:
    c, s = math.cos(coords[0]), math.sin(coords[0])
    return np.array([[c, -s], [s, c]])


def _so2_log(matrix: np.ndarray) -> np.ndarray:
    theta = math.atan2(matrix[1, 0], matrix[0, 0])
    _check_angle(theta)
    return np.array([theta])


def _skew(w) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def _so3_exp(coords: np.ndarray) -> np.ndarray:
    theta = float(np.linalg.norm(coords))
    w = _skew(coords)
    return np.eye(3) + np.sinc(theta / np.pi) * w + _half_sinc_squared(theta) * (w @ w)


def _so3_log(matrix: np.ndarray) -> np.ndarray:
    axial = 0.5 * np.array(
        [matrix[2, 1] - matrix[1, 2], matrix[0, 2] - matrix[2, 0], matrix[1, 0] - matrix[0, 1]]
    )
    cos_theta = 0.5 * (np.trace(matrix) - 1.0)
    sin_theta = float(np.linalg.norm(axial))
    theta = math.atan2(sin_theta, cos_theta)
    _check_angle(theta)
    if theta < 2.5:
        return axial / np.sinc(theta / np.pi)
    # near pi the antisymmetric part is small, so read the axis off the symmetric part
    outer = 0.5 * (matrix + matrix.T) - cos_theta * np.eye(3)
    column = int(np.argmax(np.diag(outer)))
    axis = outer[:, column] / np.linalg.norm(outer[:, column])
    if axis @ axial < 0:
        axis = -axis
    return theta * axis


def _se2_exp(coords: np.ndarray) -> np.ndarray:
    theta, vx, vy = coords
    a = np.sinc(theta / np.pi)
    b = theta * _half_sinc_squared(theta)
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [c, -s, a * vx - b * vy],
            [s, c, b * vx + a * vy],
            [0.0, 0.0, 1.0],
        ]
    )


def _se2_log(matrix: np.ndarray) -> np.ndarray:
    theta = math.atan2(matrix[1, 0], matrix[0, 0])
    _check_angle(theta)
    a = np.sinc(theta / np.pi)
    b = theta * _half_sinc_squared(theta)
    tx, ty = matrix[0, 2], matrix[1, 2]
    det = a * a + b * b
    return np.array([theta, (a * tx + b * ty) / det, (-b * tx + a * ty) / det])


def _se2_residual(matrix: np.ndarray) -> float:
    bottom = float(np.max(np.abs(matrix[2] - np.array([0.0, 0.0, 1.0]))))
    return max(_orthogonality(matrix[:2, :2]), bottom)


def _unitriangular_residual(matrix: np.ndarray) -> float:
    lower = np.tril(matrix, -1)
    diagonal = np.diag(matrix) - 1.0
    return float(max(np.max(np.abs(lower)), np.max(np.abs(diagonal))))


def _heisenberg_exp(coords: np.ndarray) -> np.ndarray:
    x, y, z = coords
    return np.array([[1.0, x, z + 0.5 * x * y], [0.0, 1.0, y], [0.0, 0.0, 1.0]])


def _heisenberg_log(matrix: np.ndarray) -> np.ndarray:
    x, y = matrix[0, 1], matrix[1, 2]
    return np.array([x, y, matrix[0, 2] - 0.5 * x * y])


def _translation_exp(coords: np.ndarray) -> np.ndarray:
    return np.array([[1.0, coords[0]], [0.0, 1.0]])


def _translation_log(matrix: np.ndarray) -> np.ndarray:
    return np.array([matrix[0, 1]])


@lru_cache(maxsize=None)
def get_group(name: str) -> GroupSpec:
    """Get one of the built-in matrix groups by name.

    :param name: One of :data:`GROUP_NAMES`
    :returns: The group
    :raises KeyError: If the name is unknown
    """
    if name == "SO2":
        return GroupSpec(
            name,
            2,
            (_frozen([[0.0, -1.0], [1.0, 0.0]]),),
            _so2_exp,
            _so2_log,
            _orthogonality,
        )
    if name == "SO3":
        return GroupSpec(
            name,
            3,
            tuple(_frozen(_skew(e)) for e in np.eye(3)),
            _so3_exp,
            _so3_log,
            _orthogonality,
        )
    if name == "SE2":
        rotation = np.zeros((3, 3))
        rotation[:2, :2] = [[0.0, -1.0], [1.0, 0.0]]
        return GroupSpec(
            name,
            3,
            (_frozen(rotation), _frozen(_unit(3, 0, 2)), _frozen(_unit(3, 1, 2))),
            _se2_exp,
            _se2_log,
            _se2_residual,
        )
    if name == "Heisenberg3":
        return GroupSpec(
            name,
            3,
            (_frozen(_unit(3, 0, 1)), _frozen(_unit(3, 1, 2)), _frozen(_unit(3, 0, 2))),
            _heisenberg_exp,
            _heisenberg_log,
            _unitriangular_residual,
        )
    if name == "TransR1":
        return GroupSpec(
            name,
            2,
            (_frozen(_unit(2, 0, 1)),),
            _translation_exp,
            _translation_log,
            _unitriangular_residual,
        )
    raise KeyError(f"unknown group {name}. Use one of {', '.join(GROUP_NAMES)}")


def exp(a: AlgebraElement) -> GroupElement:
    """Compute the exponential of an algebra element."""
    return GroupElement(a.spec, a.spec.exp_matrix(a.coords))


def log(g: GroupElement) -> AlgebraElement:
    """Compute the principal logarithm of a group element.

    :raises OutOfInjectivityRadius: If a rotation angle is within the injectivity margin of pi
    """
    return AlgebraElement(g.spec, g.spec.log_coords(g.matrix))


def ad_action(g: GroupElement, a: AlgebraElement) -> AlgebraElement:
    """Apply the adjoint action ``g a g^-1``."""
    _check_same(g.spec, a.spec)
    return AlgebraElement.from_matrix(g.spec, g.matrix @ a.matrix @ np.linalg.inv(g.matrix))


def ad_matrix(g: GroupElement) -> np.ndarray:
    """Get the matrix of the adjoint action of ``g`` in algebra coordinates."""
    spec = g.spec
    inverse = np.linalg.inv(g.matrix)
    return np.stack([spec.vee(g.matrix @ b @ inverse) for b in spec.basis], axis=1)


def bracket(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Compute the matrix commutator ``[a, b] = ab - ba``."""
    _check_same(a.spec, b.spec)
    left, right = a.matrix, b.matrix
    return AlgebraElement.from_matrix(a.spec, left @ right - right @ left)


@dataclass(frozen=True, eq=False)
class GroupPath:
    """Samples of a curve in a matrix group."""

    spec: GroupSpec
    #: The sampling times, increasing
    times: np.ndarray
    #: The sampled matrices, one per time
    matrices: np.ndarray

    def __post_init__(self):  # noqa:D105
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "matrices", _frozen(self.matrices))

    def __len__(self) -> int:  # noqa:D105
        return len(self.times)

    def __getitem__(self, index: int) -> GroupElement:  # noqa:D105
        return GroupElement(self.spec, self.matrices[index])

    @property
    def end(self) -> GroupElement:
        """The last sample."""
        return self[-1]

    def max_residual(self) -> float:
        """Get the worst group-constraint residual along the path."""
        return max(self.spec.constraint_residual(m) for m in self.matrices)


def cf4_step(
    spec: GroupSpec,
    stages: Sequence[np.ndarray],
    h: float,
    g: np.ndarray,
) -> np.ndarray:
    """Advance ``g`` by one step of the fourth order commutator-free method.

    :param spec: The group
    :param stages: Algebra coordinates of the right-hand side at the four classical
        Runge-Kutta stages (start, two midpoints, end)
    :param h: The step, possibly negative
    :param g: The current matrix
    :returns: ``exp(h Q) exp(h P) g`` where ``P`` weights early stages and ``Q`` late ones
    """
    f1, f2, f3, f4 = stages
    early = h * (f1 / 4.0 + f2 / 6.0 + f3 / 6.0 - f4 / 12.0)
    late = h * (-f1 / 12.0 + f2 / 6.0 + f3 / 6.0 + f4 / 4.0)
    return spec.exp_matrix(late) @ (spec.exp_matrix(early) @ g)


def steps_for(duration: float, step: float) -> int:
    """Get the number of steps of at most ``step`` covering a duration."""
    if duration <= 0:
        return 0
    # the slack keeps mirrored intervals on identical grids
    return max(1, int(math.ceil(duration / step - 1e-9)))


RightHandSide = Callable[[float], Union[AlgebraElement, np.ndarray]]


def _coords_of(value) -> np.ndarray:
    rv = value.coords if isinstance(value, AlgebraElement) else np.asarray(value, dtype=float)
    if not np.all(np.isfinite(rv)):
        raise NonFiniteRHS(f"right-hand side returned {rv}")
    return rv


def solve_right_log_ode(
    y: RightHandSide,
    g0: GroupElement,
    interval: Tuple[float, float],
    step: float,
) -> GroupPath:
    """Solve ``dg/dt g^-1 = Y(t)`` with ``g(a) = g0`` on ``[a, b]``.

    :param y: The right logarithmic derivative, returning an algebra element or coordinates
    :param g0: The initial value
    :param interval: The interval ``(a, b)``
    :param step: The largest step size
    :returns: The sampled solution on a uniform grid
    :raises ValueError: If the step is not positive
    :raises NonFiniteRHS: If ``y`` returns non-finite values
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    a, b = interval
    spec = g0.spec
    n = steps_for(b - a, step)
    times = np.linspace(a, b, n + 1)
    matrices: List[np.ndarray] = [np.array(g0.matrix)]
    g = matrices[0]
    for t0, t1 in zip(times[:-1], times[1:]):
        h = t1 - t0
        start, middle, end = _coords_of(y(t0)), _coords_of(y(t0 + h / 2)), _coords_of(y(t1))
        g = cf4_step(spec, (start, middle, middle, end), h, g)
        matrices.append(g)
    logger.debug("solved right-log ODE on [%s, %s] with %d steps in %s", a, b, n, spec.name)
    return GroupPath(spec, times, np.stack(matrices))
