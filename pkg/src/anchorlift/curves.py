# -*- coding: utf-8 -*-

"""Controls and the admissible curves they realize.

A :class:`PiecewiseControl` is a list of abutting :class:`ControlSegment` objects, each
carrying a control ``u(t)`` in the fibers and a sign. Integrating it against an anchored
bundle with :func:`integrate_admissible` produces a :class:`RealizedCurve` whose base solves
``dx/dt = sign * gamma(x, u(t))`` on every segment. The fiber component may jump at
breakpoints while the base stays continuous.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    Any,
    Callable,
    ClassVar,
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Type,
)

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .anchored import AnchoredBundle, evaluate_anchor, rk4_stages
from .constants import JUNCTION_TOL, MONOTONE_SUBINTERVALS, MONOTONE_THRESHOLD, get_default_step
from .exceptions import EndpointMismatch, NotLinear, NotMonotone
from .liegroup import steps_for

__all__ = [
    "Control",
    "ConstantControl",
    "PolynomialControl",
    "SineControl",
    "WarpedControl",
    "CONTROL_KINDS",
    "control_from_dict",
    "ControlSegment",
    "PiecewiseControl",
    "CurvePiece",
    "RealizedCurve",
    "Reparameterization",
    "integrate_admissible",
    "realize_segment",
    "compose_curves",
    "reverse",
    "inverse",
    "reparameterize",
    "exponential_reparameterization",
]

logger = logging.getLogger(__name__)

TimeMap = Callable[[float], float]


class Control:
    """A fiber-valued function of time."""

    #: The name used in JSON documents, if the control is serializable
    kind: ClassVar[Optional[str]] = None

    def __call__(self, t: float) -> np.ndarray:
        """Evaluate the control at a time."""
        raise NotImplementedError

    def reflected(self, center: float) -> "Control":
        """Get the control ``t -> u(center - t)``."""
        return WarpedControl(self, lambda t: center - t)

    def shifted(self, delta: float) -> "Control":
        """Get the control ``t -> u(t - delta)``."""
        return WarpedControl(self, lambda t: t - delta)

    def negated(self) -> "Control":
        """Get the control ``t -> -u(t)``."""
        return WarpedControl(self, lambda t: t, lambda _t: -1.0)

    def to_params(self) -> Dict[str, Any]:
        """Get the JSON parameters of the control."""
        raise ValueError(f"{self.__class__.__name__} can not be serialized")


@dataclass(frozen=True, eq=False)
class ConstantControl(Control):
    """A control that does not depend on time."""

    kind: ClassVar[str] = "constant"

    value: np.ndarray

    def __post_init__(self):  # noqa:D105
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))

    def __call__(self, t: float) -> np.ndarray:  # noqa:D102
        return self.value

    def reflected(self, center: float) -> "ConstantControl":  # noqa:D102
        return self

    def shifted(self, delta: float) -> "ConstantControl":  # noqa:D102
        return self

    def negated(self) -> "ConstantControl":  # noqa:D102
        return ConstantControl(-self.value)

    def to_params(self) -> Dict[str, Any]:  # noqa:D102
        return {"value": self.value.tolist()}


@dataclass(frozen=True, eq=False)
class PolynomialControl(Control):
    """A control whose components are polynomials in time.

    ``coefficients[j]`` holds the fiber vector multiplying ``t^j``.
    """

    kind: ClassVar[str] = "polynomial"

    coefficients: np.ndarray

    def __post_init__(self):  # noqa:D105
        coefficients = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        object.__setattr__(self, "coefficients", coefficients)

    def __call__(self, t: float) -> np.ndarray:  # noqa:D102
        return np.polynomial.polynomial.polyval(t, self.coefficients)

    def _composed(self, inner: Polynomial) -> "PolynomialControl":
        columns = [Polynomial(column)(inner).coef for column in self.coefficients.T]
        degree = self.coefficients.shape[0]
        return PolynomialControl(
            np.stack([np.pad(c, (0, degree - c.size)) for c in columns], axis=1)
        )

    def reflected(self, center: float) -> "PolynomialControl":  # noqa:D102
        return self._composed(Polynomial([center, -1.0]))

    def shifted(self, delta: float) -> "PolynomialControl":  # noqa:D102
        return self._composed(Polynomial([-delta, 1.0]))

    def negated(self) -> "PolynomialControl":  # noqa:D102
        return PolynomialControl(-self.coefficients)

    def to_params(self) -> Dict[str, Any]:  # noqa:D102
        return {"coefficients": self.coefficients.tolist()}


@dataclass(frozen=True, eq=False)
class SineControl(Control):
    """A control ``offset + amplitude * sin(frequency * t + phase)`` taken componentwise."""

    kind: ClassVar[str] = "sine"

    amplitude: np.ndarray
    frequency: np.ndarray
    phase: np.ndarray
    offset: np.ndarray

    def __post_init__(self):  # noqa:D105
        arrays = np.broadcast_arrays(
            *(
                np.asarray(v, dtype=float)
                for v in (self.amplitude, self.frequency, self.phase, self.offset)
            )
        )
        for name, array in zip(("amplitude", "frequency", "phase", "offset"), arrays):
            object.__setattr__(self, name, np.array(array))

    def __call__(self, t: float) -> np.ndarray:  # noqa:D102
        return self.offset + self.amplitude * np.sin(self.frequency * t + self.phase)

    def reflected(self, center: float) -> "SineControl":  # noqa:D102
        phase = self.frequency * center + self.phase
        return SineControl(self.amplitude, -self.frequency, phase, self.offset)

    def shifted(self, delta: float) -> "SineControl":  # noqa:D102
        phase = self.phase - self.frequency * delta
        return SineControl(self.amplitude, self.frequency, phase, self.offset)

    def negated(self) -> "SineControl":  # noqa:D102
        return SineControl(-self.amplitude, self.frequency, self.phase, -self.offset)

    def to_params(self) -> Dict[str, Any]:  # noqa:D102
        return {
            "amplitude": self.amplitude.tolist(),
            "frequency": self.frequency.tolist(),
            "phase": self.phase.tolist(),
            "offset": self.offset.tolist(),
        }


@dataclass(frozen=True)
class WarpedControl(Control):
    """A control ``t -> factor(t) * base(time_map(t))``."""

    base: Control
    time_map: TimeMap
    factor: Optional[TimeMap] = None

    def __call__(self, t: float) -> np.ndarray:  # noqa:D102
        rv = np.asarray(self.base(self.time_map(t)), dtype=float)
        return rv if self.factor is None else self.factor(t) * rv


CONTROL_KINDS: Mapping[str, Type[Control]] = {
    cls.kind: cls for cls in (ConstantControl, PolynomialControl, SineControl)
}


def control_from_dict(kind: str, params: Mapping[str, Any]) -> Control:
    """Build a control from its JSON kind and parameters.

    :raises ValueError: If the kind is unknown or the parameters don't match it
    """
    cls = CONTROL_KINDS.get(kind)
    if cls is None:
        choices = ", ".join(sorted(CONTROL_KINDS))
        raise ValueError(f"unknown control kind {kind}. Use one of {choices}")
    try:
        return cls(**params)
    except TypeError as e:
        raise ValueError(f"invalid parameters for {kind} control: {e}") from e


@dataclass(frozen=True)
class ControlSegment:
    """A control on ``[t0, t1]`` with a sign selecting the bundle or its inverse."""

    t0: float
    t1: float
    control: Control
    sign: int = 1

    def __post_init__(self):  # noqa:D105
        if not self.t0 < self.t1:
            raise ValueError(f"empty segment [{self.t0}, {self.t1}]")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be 1 or -1, got {self.sign}")

    @property
    def duration(self) -> float:
        """The length of the segment."""
        return self.t1 - self.t0

    def shifted(self, delta: float) -> "ControlSegment":
        """Get the segment translated in time by ``delta``."""
        return ControlSegment(
            self.t0 + delta, self.t1 + delta, self.control.shifted(delta), self.sign
        )

    def to_dict(self) -> Dict[str, Any]:
        """Get the JSON form of the segment."""
        if self.control.kind is None:
            raise ValueError(f"{self.control.__class__.__name__} can not be serialized")
        return {
            "t0": self.t0,
            "t1": self.t1,
            "sign": self.sign,
            "kind": self.control.kind,
            "params": self.control.to_params(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ControlSegment":
        """Build a segment from its JSON form."""
        return cls(
            t0=float(data["t0"]),
            t1=float(data["t1"]),
            control=control_from_dict(data["kind"], data.get("params", {})),
            sign=int(data.get("sign", 1)),
        )


@dataclass(frozen=True)
class PiecewiseControl:
    """An ordered list of abutting control segments, possibly empty."""

    segments: Tuple[ControlSegment, ...] = ()

    def __post_init__(self):  # noqa:D105
        object.__setattr__(self, "segments", tuple(self.segments))
        for left, right in zip(self.segments, self.segments[1:]):
            if left.t1 != right.t0:
                raise ValueError(f"segments do not abut: {left.t1} != {right.t0}")

    def __len__(self) -> int:  # noqa:D105
        return len(self.segments)

    def __iter__(self) -> Iterator[ControlSegment]:  # noqa:D105
        return iter(self.segments)

    @property
    def start(self) -> float:
        """The first time of the control."""
        return self.segments[0].t0 if self.segments else 0.0

    @property
    def end(self) -> float:
        """The last time of the control."""
        return self.segments[-1].t1 if self.segments else 0.0

    @property
    def duration(self) -> float:
        """The total length of the time domain."""
        return self.end - self.start

    @property
    def breakpoints(self) -> List[float]:
        """The times ``a_0 < ... < a_l`` bounding the segments."""
        if not self.segments:
            return []
        return [self.segments[0].t0] + [segment.t1 for segment in self.segments]

    def shifted(self, delta: float) -> "PiecewiseControl":
        """Get the control translated in time by ``delta``."""
        if delta == 0:
            return self
        return PiecewiseControl(tuple(segment.shifted(delta) for segment in self.segments))

    def starting_at(self, t: float) -> "PiecewiseControl":
        """Get the control translated so that it starts at ``t``."""
        return self.shifted(t - self.start)

    def to_dict(self) -> Dict[str, Any]:
        """Get the JSON form of the control."""
        return {"segments": [segment.to_dict() for segment in self.segments]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PiecewiseControl":
        """Build a control from its JSON form."""
        return cls(tuple(ControlSegment.from_dict(segment) for segment in data["segments"]))

    @classmethod
    def constant(
        cls,
        value: Sequence[float],
        duration: float,
        sign: int = 1,
        start: float = 0.0,
    ) -> "PiecewiseControl":
        """Build a single constant segment on ``[start, start + duration]``."""
        if duration == 0:
            return cls()
        return cls((ControlSegment(start, start + duration, ConstantControl(value), sign),))


@dataclass(frozen=True, eq=False)
class CurvePiece:
    """The samples of a realized curve over one segment."""

    times: np.ndarray
    points: np.ndarray
    #: The exact velocities ``sign * gamma(x, u(t))`` at the samples
    velocities: np.ndarray

    @cached_property
    def spline(self) -> CubicHermiteSpline:
        """The dense output of the piece."""
        return CubicHermiteSpline(self.times, self.points, self.velocities, axis=0)


@dataclass(frozen=True, eq=False)
class RealizedCurve:
    """A control together with the base trajectory it realizes."""

    control: PiecewiseControl
    start: np.ndarray
    pieces: Tuple[CurvePiece, ...] = field(default=())

    @property
    def breakpoints(self) -> List[float]:
        """The junction times of the segments."""
        return self.control.breakpoints

    @property
    def endpoint(self) -> np.ndarray:
        """The last point of the base trajectory."""
        return self.pieces[-1].points[-1] if self.pieces else self.start

    @property
    def times(self) -> np.ndarray:
        """All sample times, with junction times listed once."""
        if not self.pieces:
            return np.array([self.control.start])
        return np.concatenate([self.pieces[0].times] + [p.times[1:] for p in self.pieces[1:]])

    @property
    def base(self) -> np.ndarray:
        """All sampled base points, with junction points listed once."""
        if not self.pieces:
            return self.start[np.newaxis]
        return np.concatenate([self.pieces[0].points] + [p.points[1:] for p in self.pieces[1:]])

    def _piece_index(self, t: float) -> int:
        index = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return min(max(index, 0), len(self.pieces) - 1)

    def at(self, t: float) -> np.ndarray:
        """Evaluate the base at any time of the domain by cubic Hermite interpolation."""
        if not self.pieces:
            return self.start
        return self.pieces[self._piece_index(t)].spline(t)

    def velocity(self, t: float) -> np.ndarray:
        """Evaluate the derivative of the dense output."""
        if not self.pieces:
            return np.zeros_like(self.start)
        return self.pieces[self._piece_index(t)].spline(t, 1)

    def admissibility_residual(self, bundle: AnchoredBundle, samples: int = 200) -> float:
        """Get the worst gap between the base velocity and ``sign * gamma`` at interior times."""
        worst = 0.0
        for piece, segment in zip(self.pieces, self.control.segments):
            grid = np.linspace(segment.t0, segment.t1, samples + 1)
            for t in 0.5 * (grid[1:] + grid[:-1]):
                x = piece.spline(t)
                expected = segment.sign * evaluate_anchor(bundle, x, segment.control(t))
                worst = max(worst, float(np.linalg.norm(piece.spline(t, 1) - expected)))
        return worst


StepCallback = Callable[[float, Tuple[Tuple[float, np.ndarray], ...]], None]


def realize_segment(
    bundle: AnchoredBundle,
    segment: ControlSegment,
    x: np.ndarray,
    step: float,
    on_step: Optional[StepCallback] = None,
) -> CurvePiece:
    """Integrate one segment with the classical Runge-Kutta method.

    :param on_step: Called with the step size and the stage ``(time, point)`` pairs of
        every step, in order
    """
    sign = segment.sign
    control = segment.control

    def _velocity(t: float, y: np.ndarray) -> np.ndarray:
        return sign * evaluate_anchor(bundle, y, control(t))

    n = steps_for(segment.duration, step)
    h = segment.duration / n
    times = segment.t0 + h * np.arange(n + 1)
    # pin the last sample to the breakpoint
    times[-1] = segment.t1
    points = [x]
    for t in times[:-1]:
        stages, x = rk4_stages(_velocity, t, x, h)
        if on_step is not None:
            on_step(h, stages)
        points.append(x)
    velocities = [_velocity(t, p) for t, p in zip(times, points)]
    return CurvePiece(times, np.stack(points), np.stack(velocities))


def integrate_admissible(
    bundle: AnchoredBundle,
    control: PiecewiseControl,
    x0,
    step: Optional[float] = None,
    on_step: Optional[StepCallback] = None,
) -> RealizedCurve:
    """Integrate a control into the base trajectory it drives.

    :param on_step: Passed on to :func:`realize_segment` for every segment
    :raises Blowup: If the trajectory leaves the domain guard box
    """
    step = step or get_default_step()
    start = np.asarray(x0, dtype=float)
    pieces: List[CurvePiece] = []
    for segment in control:
        x = pieces[-1].points[-1] if pieces else start
        pieces.append(realize_segment(bundle, segment, x, step, on_step=on_step))
    logger.debug("integrated %d segments on %s", len(control), bundle.name)
    return RealizedCurve(control, start, tuple(pieces))


def compose_curves(
    parts: Sequence[PiecewiseControl],
    realized: Optional[Sequence[RealizedCurve]] = None,
) -> PiecewiseControl:
    """Compose controls, the first part running first.

    Later parts are translated in time to abut the earlier ones.

    :param parts: The controls in the order they are run
    :param realized: The realized bases of the parts, whose successive endpoints must meet
    :raises EndpointMismatch: If a realized base does not start where the previous one ended
    """
    if realized is not None:
        for index, (left, right) in enumerate(zip(realized, realized[1:])):
            gap = float(np.linalg.norm(left.endpoint - right.start))
            if gap > JUNCTION_TOL:
                raise EndpointMismatch(index, gap)

    segments: List[ControlSegment] = []
    for part in parts:
        if not part.segments:
            continue
        offset = segments[-1].t1 - part.start if segments else 0.0
        segments.extend(part.shifted(offset).segments)
    return PiecewiseControl(tuple(segments))


def reverse(control: PiecewiseControl) -> PiecewiseControl:
    """Reverse a control, running its base backwards over the same time domain.

    Each segment is mirrored through the midpoint of the domain and its sign is flipped.
    """
    center = control.start + control.end
    return PiecewiseControl(
        tuple(
            ControlSegment(
                center - segment.t1,
                center - segment.t0,
                segment.control.reflected(center),
                -segment.sign,
            )
            for segment in reversed(control.segments)
        )
    )


def inverse(control: PiecewiseControl, bundle: AnchoredBundle) -> PiecewiseControl:
    """Get the inverse of a control, the reverse with negated fibers and restored signs.

    :raises NotLinear: If the anchor is not linear in the fibers
    """
    if not bundle.linear:
        raise NotLinear(f"inverse curves need a linear anchor, {bundle.name} is not")
    return PiecewiseControl(
        tuple(
            ControlSegment(segment.t0, segment.t1, segment.control.negated(), -segment.sign)
            for segment in reverse(control)
        )
    )


@dataclass(frozen=True)
class Reparameterization:
    """A strictly increasing change of time ``phi``.

    The derivative and inverse are approximated numerically when they are not given.
    """

    func: TimeMap
    derivative: Optional[TimeMap] = None
    inverse: Optional[TimeMap] = None

    def slope(self, t: float) -> float:
        """Evaluate the derivative of the reparameterization."""
        if self.derivative is not None:
            return self.derivative(t)
        h = 1e-6 * max(1.0, abs(t))
        return (self.func(t + h) - self.func(t - h)) / (2 * h)

    def invert(self, s: float, interval: Tuple[float, float]) -> float:
        """Find the time in ``interval`` mapped to ``s``."""
        if self.inverse is not None:
            return self.inverse(s)
        a, b = interval
        s = min(max(s, self.func(a)), self.func(b))
        return brentq(lambda t: self.func(t) - s, a, b, xtol=1e-14)

    def check_monotone(self, interval: Tuple[float, float]) -> None:
        """Check that the derivative stays above the monotonicity threshold on a grid.

        :raises NotMonotone: If a sampled derivative or increment is too small
        """
        grid = np.linspace(interval[0], interval[1], MONOTONE_SUBINTERVALS + 1)
        values = np.array([self.func(t) for t in grid])
        slopes = np.array([self.slope(t) for t in grid])
        if np.any(np.diff(values) <= 0) or np.any(slopes < MONOTONE_THRESHOLD):
            worst = int(np.argmin(slopes))
            raise NotMonotone(
                f"reparameterization has slope {slopes[worst]:.3e} at t={grid[worst]}"
            )


def reparameterize(
    control: PiecewiseControl,
    phi: Reparameterization,
    bundle: AnchoredBundle,
) -> PiecewiseControl:
    """Reparameterize a control by ``phi``, each segment separately.

    The new control on ``[phi(a_{i-1}), phi(a_i)]`` is ``s -> u(psi(s)) psi'(s)`` with
    ``psi`` the inverse of ``phi``, so the new base is the old one run along ``psi``.

    :raises NotLinear: If the anchor is not linear in the fibers
    :raises NotMonotone: If ``phi`` is not strictly increasing on the domain of the control
    """
    if not bundle.linear:
        raise NotLinear(f"reparameterization needs a linear anchor, {bundle.name} is not")
    if not control.segments:
        return control
    interval = (control.start, control.end)
    phi.check_monotone(interval)

    def _psi(s: float) -> float:
        return phi.invert(s, interval)

    def _factor(s: float) -> float:
        return 1.0 / phi.slope(_psi(s))

    breakpoints = [phi.func(t) for t in control.breakpoints]
    return PiecewiseControl(
        tuple(
            ControlSegment(s0, s1, WarpedControl(segment.control, _psi, _factor), segment.sign)
            for segment, s0, s1 in zip(control.segments, breakpoints, breakpoints[1:])
        )
    )


def exponential_reparameterization(
    interval: Tuple[float, float],
    rate: float,
) -> Reparameterization:
    """Build the reparameterization of ``[a, b]`` onto itself with ``phi' ~ exp(rate t)``.

    A rate of zero gives the identity.
    """
    a, b = interval
    length = b - a
    if rate == 0:
        return Reparameterization(lambda t: t, lambda _t: 1.0, lambda s: s)
    scale = math.expm1(rate)
    return Reparameterization(
        func=lambda t: a + length * math.expm1(rate * (t - a) / length) / scale,
        derivative=lambda t: rate / scale * math.exp(rate * (t - a) / length),
        inverse=lambda s: a + length / rate * math.log1p((s - a) * scale / length),
    )
