# -*- coding: utf-8 -*-

"""Tasks that a scenario can run.

Every task turns a scenario into a table, a dictionary of named metrics, and optionally
further tables. Metrics are checked against the scenario's tolerances by the runner.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar, Dict, List, Mapping, Tuple, Type

import numpy as np
import pandas as pd

from ..anchored import AnchoredBundle, Section, bracket_rank, induced_field, sample_orbit
from ..curves import (
    PiecewiseControl,
    compose_curves,
    exponential_reparameterization,
    integrate_admissible,
    reparameterize,
    reverse,
)
from ..holonomy import (
    LoopFamily,
    conjugate_sample,
    estimate_to_frame,
    generate_loops,
    holonomy_algebra,
    principal_angle,
    sample_holonomy,
    sample_loops,
    sample_to_frame,
)
from ..liegroup import GroupElement, GroupSpec, get_group, solve_right_log_ode
from ..lift import TrivializedLift, displacement, transport
from .registry import resolve_bundle, resolve_family, resolve_lift
from .schema import Scenario

__all__ = [
    "TaskContext",
    "TaskResult",
    "Task",
    "RankMapTask",
    "OrbitTask",
    "TransportTask",
    "HolonomyTask",
    "AlgebraTask",
    "ConvergenceTask",
    "TRANSPORT_CHECKS",
    "CONVERGENCE_PATHS",
    "get_task",
]

logger = logging.getLogger(__name__)


@dataclass
class TaskContext:
    """The resolved run settings a task sees."""

    scenario: Scenario
    step: float
    seed: int
    use_tqdm: bool = False

    @property
    def options(self) -> Mapping[str, Any]:
        """The task options of the scenario."""
        return self.scenario.options

    def rng(self) -> np.random.Generator:
        """Get a fresh generator seeded by the run seed."""
        return np.random.default_rng(self.seed)


@dataclass
class TaskResult:
    """The outputs of a task."""

    table: pd.DataFrame
    metrics: Dict[str, float]
    #: Further tables by artifact suffix
    extra: Dict[str, pd.DataFrame] = field(default_factory=dict)


class Task:
    """A computation driven by a scenario."""

    name: ClassVar[str]

    def run(self, context: TaskContext) -> TaskResult:
        """Run the task."""
        raise NotImplementedError

    @staticmethod
    def bundle(context: TaskContext) -> AnchoredBundle:
        """Get the bundle of the scenario."""
        rv = resolve_bundle(context.scenario)
        if rv is None:
            raise context.scenario.error("this task needs a bundle", "task")
        return rv

    @classmethod
    def lift(cls, context: TaskContext) -> TrivializedLift:
        """Get the lift of the scenario."""
        rv = resolve_lift(context.scenario, cls.bundle(context))
        if rv is None:
            raise context.scenario.error("this task needs a lift", "task")
        return rv


def unit_sections(bundle: AnchoredBundle) -> List[Section]:
    """Get the constant sections along the fiber basis."""
    return [
        Section.constant(bundle, row, name=f"e{i + 1}")
        for i, row in enumerate(np.eye(bundle.fiber_dim))
    ]


def _points(context: TaskContext, spec: Any, dim: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, Mapping):
        low = np.asarray(spec.get("low", [-1.0] * dim), dtype=float)
        high = np.asarray(spec.get("high", [1.0] * dim), dtype=float)
        rv = rng.uniform(low, high, (int(spec.get("count", 10)), dim))
    else:
        rv = np.atleast_2d(np.asarray(spec, dtype=float))
    if rv.ndim != 2 or rv.shape[1] != dim:
        raise context.scenario.error(f"points must have {dim} coordinates", "options")
    return rv


def _coordinates(prefix: str, x: np.ndarray) -> Dict[str, float]:
    return {f"{prefix}{i + 1}": float(v) for i, v in enumerate(x)}


class RankMapTask(Task):
    """Ranks of the induced fields and their brackets at sets of points.

    Options: ``depth`` and ``points``, a mapping from a label to a list of points or to a
    ``{"count", "low", "high"}`` box sampled with the run seed.
    """

    name = "rank-map"

    def run(self, context: TaskContext) -> TaskResult:  # noqa:D102
        bundle = self.bundle(context)
        depth = int(context.options.get("depth", 2))
        fields = [induced_field(bundle, s) for s in unit_sections(bundle)]
        rng = context.rng()
        point_sets = context.options.get("points", {"all": {"count": 10}})
        rows, metrics = [], {}
        for label, spec in point_sets.items():
            ranks = []
            for x in _points(context, spec, bundle.base_dim, rng):
                rank, _ = bracket_rank(fields, x, depth)
                ranks.append(rank)
                rows.append({"set": label, **_coordinates("x", x), "depth": depth, "rank": rank})
            metrics[f"{label}_min_rank"] = float(min(ranks))
            metrics[f"{label}_max_rank"] = float(max(ranks))
        all_ranks = [row["rank"] for row in rows]
        metrics["min_rank"] = float(min(all_ranks))
        metrics["max_rank"] = float(max(all_ranks))
        return TaskResult(pd.DataFrame(rows), metrics)


class OrbitTask(Task):
    """Seeded samples of the orbit through a point, with their distance from its known leaf.

    Options: ``start``, ``count``, and ``max_time``.
    """

    name = "orbit"

    def run(self, context: TaskContext) -> TaskResult:  # noqa:D102
        bundle = self.bundle(context)
        start = np.asarray(context.options.get("start", [0.0] * bundle.base_dim), dtype=float)
        if start.shape != (bundle.base_dim,):
            raise context.scenario.error(
                f"start must have {bundle.base_dim} coordinates", "options"
            )
        sample = sample_orbit(
            bundle,
            unit_sections(bundle),
            start,
            count=int(context.options.get("count", 100)),
            max_time=float(context.options.get("max_time", 1.0)),
            seed=context.seed,
            step=context.step,
            use_tqdm=context.use_tqdm,
        )
        rows = []
        for i, x in enumerate(sample.points):
            residual = np.nan if bundle.leaf_residual is None else bundle.leaf_residual(start, x)
            rows.append({"sample": i, **_coordinates("x", x), "leaf_residual": residual})
        table = pd.DataFrame(rows, columns=["sample", *_coordinates("x", start), "leaf_residual"])
        metrics = {"samples": float(len(sample.points)), "dropped": float(sample.dropped)}
        if len(sample.points):
            if bundle.leaf_residual is not None:
                metrics["max_leaf_residual"] = float(table["leaf_residual"].max())
            for i, v in enumerate(np.max(np.abs(sample.points - start), axis=0)):
                metrics[f"max_shift_x{i + 1}"] = float(v)
        return TaskResult(table, metrics)


def random_loops(
    bundle: AnchoredBundle,
    family: LoopFamily,
    count: int,
    rng: np.random.Generator,
) -> List[PiecewiseControl]:
    """Draw rectangles and lassos at the family's base point in its plane."""
    rv = []
    for _ in range(count):
        a, b = rng.uniform(0.1, 1.0, 2)
        orientation = int(rng.choice([-1, 1]))
        tail = rng.normal(scale=0.5, size=bundle.fiber_dim) if rng.random() < 0.5 else None
        loop_family = LoopFamily(
            kind="rectangles" if tail is None else "lasso",
            base_point=family.base_point,
            scales=((a, b),),
            plane=family.plane,
            orientation=orientation,
            tail=tail,
        )
        rv.extend(generate_loops(loop_family, bundle))
    return rv


def random_elements(spec: GroupSpec, count: int, rng: np.random.Generator) -> List[GroupElement]:
    """Draw group elements as exponentials of normally distributed coordinates."""
    return [spec.element(spec.exp_matrix(rng.normal(size=spec.algebra_dim))) for _ in range(count)]


def _identity_distance(g: GroupElement) -> float:
    return g.distance(g.spec.identity())


class TransportTask(Task):
    """Structural checks of transport and displacement over random loops.

    Options: ``checks`` (a subset of :data:`TRANSPORT_CHECKS`), ``loops``, ``elements`` (the
    number of random group elements), ``pairs``, and ``reparameterizations``.
    """

    name = "transport"

    def run(self, context: TaskContext) -> TaskResult:  # noqa:D102
        lift = self.lift(context)
        family = resolve_family(context.scenario, lift.bundle)
        rng = context.rng()
        loops = random_loops(lift.bundle, family, int(context.options.get("loops", 20)), rng)
        checks = context.options.get("checks", sorted(TRANSPORT_CHECKS))
        rows, metrics = [], {}
        for check in checks:
            if check not in TRANSPORT_CHECKS:
                raise context.scenario.error(
                    f"unknown check {check!r}. Use one of {', '.join(sorted(TRANSPORT_CHECKS))}",
                    "options",
                )
            deviations = TRANSPORT_CHECKS[check](context, lift, family, loops, rng)
            rows.extend({"check": check, "case": case, "deviation": d} for case, d in deviations)
            metrics[f"{check}_max"] = max((d for _, d in deviations), default=0.0)
        return TaskResult(pd.DataFrame(rows, columns=["check", "case", "deviation"]), metrics)


def _check_equivariance(context, lift, family, loops, rng):
    rv = []
    elements = random_elements(lift.group, int(context.options.get("elements", 5)), rng)
    for i, loop in enumerate(loops):
        base = transport(lift, loop, family.base_point, lift.group.identity(), step=context.step)
        for j, g in enumerate(elements):
            shifted = transport(lift, loop, family.base_point, g, step=context.step)
            deviation = np.max(np.abs(shifted.path.matrices - base.path.matrices @ g.matrix))
            rv.append((f"{i}:{j}", float(deviation)))
    return rv


def _check_reverse(context, lift, family, loops, rng):
    rv = []
    for i, loop in enumerate(loops):
        forward = displacement(lift, loop, family.base_point, step=context.step)
        backward = displacement(lift, reverse(loop), family.base_point, step=context.step)
        rv.append((str(i), _identity_distance(backward @ forward)))
    return rv


def _check_composition(context, lift, family, loops, rng):
    rv = []
    displacements = [
        displacement(lift, loop, family.base_point, step=context.step) for loop in loops
    ]
    pairs = int(context.options.get("pairs", len(loops)))
    for k in range(pairs):
        i, j = k % len(loops), (k + 1) % len(loops)
        composed = displacement(
            lift, compose_curves([loops[i], loops[j]]), family.base_point, step=context.step
        )
        rv.append((f"{j}.{i}", composed.distance(displacements[j] @ displacements[i])))
    return rv


def _check_conjugation(context, lift, family, loops, rng):
    rv = []
    sample = sample_loops(lift, loops, family.base_point, step=context.step)
    elements = random_elements(lift.group, int(context.options.get("elements", 5)), rng)
    for j, g in enumerate(elements):
        shifted = sample_loops(lift, loops, family.base_point, step=context.step, reference=g)
        conjugated = conjugate_sample(sample, g)
        for i, (a, b) in enumerate(zip(shifted.elements, conjugated.elements)):
            rv.append((f"{i}:{j}", a.distance(b)))
    return rv


def _check_reparameterization(context, lift, family, loops, rng):
    if not lift.is_connection:
        raise context.scenario.error(f"lift {lift.name} is not linear in the fibers", "lift")
    rv = []
    for k in range(int(context.options.get("reparameterizations", 20))):
        loop = loops[k % len(loops)]
        rate = float(rng.uniform(-1.5, 1.5))
        phi = exponential_reparameterization((loop.start, loop.end), rate)
        original = displacement(lift, loop, family.base_point, step=context.step)
        warped = displacement(
            lift, reparameterize(loop, phi, lift.bundle), family.base_point, step=context.step
        )
        rv.append((f"{k % len(loops)}:{rate:.4f}", warped.distance(original)))
    return rv


def _check_projection(context, lift, family, loops, rng):
    rv = []
    for i, loop in enumerate(loops):
        lifted = transport(lift, loop, family.base_point, lift.group.identity(), step=context.step)
        realized = integrate_admissible(lift.bundle, loop, family.base_point, step=context.step)
        rv.append((str(i), float(np.max(np.abs(lifted.base.base - realized.base), initial=0.0))))
    return rv


TRANSPORT_CHECKS: Mapping[str, Callable[..., List[Tuple[str, float]]]] = {
    "equivariance": _check_equivariance,
    "reverse": _check_reverse,
    "composition": _check_composition,
    "conjugation": _check_conjugation,
    "reparameterization": _check_reparameterization,
    "projection": _check_projection,
}


def shoelace(points: np.ndarray) -> float:
    """Get the signed area enclosed by a closed polygon."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class HolonomyTask(Task):
    """A holonomy sample over the scenario's loop family.

    Options: ``closure`` (include reversed and composed loops), and ``oracle``, an object
    ``{"kind": "shoelace", "factor", "axis", "plane"}`` comparing the logarithm of each family
    loop with ``factor`` times the signed area its base encloses along algebra axis ``axis``.
    """

    name = "holonomy"

    def run(self, context: TaskContext) -> TaskResult:  # noqa:D102
        lift = self.lift(context)
        family = resolve_family(context.scenario, lift.bundle)
        sample = sample_holonomy(
            lift,
            family,
            step=context.step,
            closure=bool(context.options.get("closure", True)),
            use_tqdm=context.use_tqdm,
        )
        table = sample_to_frame(sample)
        logs = sample.available_logs
        metrics = {
            "elements": float(len(sample.elements)),
            "skipped": float(sample.skipped),
            "max_residual": float(table["residual"].max()),
            "max_log_norm": max((a.norm() for a in logs), default=0.0),
        }
        oracle = context.options.get("oracle")
        if oracle is not None:
            errors = self.area_errors(context, lift, family, sample.logs, oracle)
            table["oracle_error"] = errors + [np.nan] * (len(table.index) - len(errors))
            metrics["max_oracle_error"] = max(errors, default=0.0)
        return TaskResult(table, metrics)

    @staticmethod
    def area_errors(context, lift, family, logs, oracle) -> List[float]:
        """Compare the logarithms of the family loops with the enclosed-area rule."""
        if oracle.get("kind", "shoelace") != "shoelace":
            raise context.scenario.error(f"unknown oracle {oracle.get('kind')!r}", "options")
        factor = float(oracle.get("factor", 1.0))
        axis = int(oracle.get("axis", 0))
        plane = list(oracle.get("plane", [0, 1]))
        rv = []
        for loop, a in zip(generate_loops(family, lift.bundle), logs):
            realized = integrate_admissible(lift.bundle, loop, family.base_point, step=context.step)
            expected = np.zeros(lift.group.algebra_dim)
            expected[axis] = factor * shoelace(realized.base[:, plane])
            rv.append(np.inf if a is None else float(np.linalg.norm(a.coords - expected)))
        return rv


class AlgebraTask(Task):
    """The holonomy algebra of the scenario's loop family and its adjoint transport.

    Options: ``depth`` (bracket closure passes), ``tol``, and ``references`` (the number of
    random reference elements at which the estimate is recomputed).
    """

    name = "algebra"

    def run(self, context: TaskContext) -> TaskResult:  # noqa:D102
        lift = self.lift(context)
        family = resolve_family(context.scenario, lift.bundle)
        depth = int(context.options.get("depth", 2))
        tol = float(context.options.get("tol", 1e-6))
        sample = sample_holonomy(lift, family, step=context.step, use_tqdm=context.use_tqdm)
        estimate = holonomy_algebra(sample, extra_bracket_depth=depth, tol=tol)
        angles = []
        references = int(context.options.get("references", 3))
        for g in random_elements(lift.group, references, context.rng()):
            shifted = holonomy_algebra(
                sample_holonomy(lift, family, step=context.step, reference=g),
                extra_bracket_depth=depth,
                tol=tol,
            )
            if shifted.rank != estimate.rank:
                angles.append(math.pi / 2)
            else:
                angles.append(principal_angle(estimate.transported(g), shifted))
        metrics = {
            "rank": float(estimate.rank),
            "closure_residual": estimate.closure_residual,
            "skipped": float(sample.skipped),
            "max_principal_angle": max(angles, default=0.0),
        }
        extra = {"estimate": estimate_to_frame(estimate)}
        return TaskResult(sample_to_frame(sample), metrics, extra)


def _so3_trig(t: float) -> np.ndarray:
    return np.array([math.sin(t), math.cos(2 * t), t])


#: Right logarithmic derivatives by name, with their group
CONVERGENCE_PATHS: Mapping[str, Tuple[str, Callable[[float], np.ndarray]]] = {
    "so3-trig": ("SO3", _so3_trig),
}


class ConvergenceTask(Task):
    """The observed order of the group solver and its constraint drift.

    Options: ``path`` (one of :data:`CONVERGENCE_PATHS`), ``interval``, ``steps`` (decreasing),
    ``reference_divisor``, ``drift_interval``, and ``drift_step``.
    """

    name = "convergence"

    def run(self, context: TaskContext) -> TaskResult:  # noqa:D102
        options = context.options
        name = options.get("path", "so3-trig")
        if name not in CONVERGENCE_PATHS:
            raise context.scenario.error(f"unknown path {name!r}", "options")
        group_name, y = CONVERGENCE_PATHS[name]
        spec = get_group(group_name)
        interval = tuple(options.get("interval", [0.0, 2.0]))
        steps = [float(h) for h in options.get("steps", [0.1, 0.05])]
        reference_step = steps[-1] / float(options.get("reference_divisor", 64))
        reference = solve_right_log_ode(y, spec.identity(), interval, reference_step).end

        rows = []
        for h in steps:
            end = solve_right_log_ode(y, spec.identity(), interval, h).end
            rows.append({"step": h, "error": float(np.linalg.norm(end.matrix - reference.matrix))})
        for previous, row in zip(rows, rows[1:]):
            ratio = previous["error"] / row["error"]
            row["order"] = math.log(ratio) / math.log(previous["step"] / row["step"])
        table = pd.DataFrame(rows, columns=["step", "error", "order"])

        drift_path = solve_right_log_ode(
            y,
            spec.identity(),
            tuple(options.get("drift_interval", [0.0, 10.0])),
            float(options.get("drift_step", 1e-2)),
        )
        metrics = {"drift": drift_path.max_residual(), "finest_error": rows[-1]["error"]}
        if len(rows) > 1:
            metrics["order"] = rows[-1]["order"]
            metrics["order_deviation"] = abs(rows[-1]["order"] - 4.0)
        return TaskResult(table, metrics)


TASKS: Mapping[str, Type[Task]] = {
    cls.name: cls
    for cls in (RankMapTask, OrbitTask, TransportTask, HolonomyTask, AlgebraTask, ConvergenceTask)
}


def get_task(name: str) -> Task:
    """Get the task with the given name.

    :raises KeyError: If the name is unknown
    """
    cls = TASKS.get(name)
    if cls is None:
        raise KeyError(f"unknown task {name}. Use one of {', '.join(sorted(TASKS))}")
    return cls()
