# -*- coding: utf-8 -*-

"""Run scenarios, check their metrics, and write their artifacts."""

import datetime
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from tabulate import tabulate

from ..constants import DEFAULT_SEED, get_default_out_dir, get_default_step
from .schema import Scenario
from .tasks import TaskContext, get_task

__all__ = [
    "MetricCheck",
    "RunReport",
    "run_scenario",
    "write_csv",
]

logger = logging.getLogger(__name__)

#: Absolute slack when comparing a metric with an exact expected value
EXPECT_SLACK = 1e-12


@dataclass(frozen=True)
class MetricCheck:
    """A metric and the bound it was checked against."""

    metric: str
    value: float
    #: One of ``tolerance`` (upper bound), ``expect`` (exact value), or ``report``
    kind: str = "report"
    bound: float = float("nan")

    @property
    def passed(self) -> bool:
        """Whether the metric meets its bound."""
        if self.kind == "tolerance":
            return bool(self.value <= self.bound)
        if self.kind == "expect":
            return bool(abs(self.value - self.bound) <= EXPECT_SLACK)
        return True


@dataclass
class RunReport:
    """The outcome of running a scenario."""

    scenario: Scenario
    step: float
    seed: int
    checks: List[MetricCheck]
    wall_time: float
    artifacts: List[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Whether every checked metric meets its bound."""
        return all(check.passed for check in self.checks)

    def to_frame(self) -> pd.DataFrame:
        """Get one row per metric."""
        return pd.DataFrame(
            [
                {
                    "metric": check.metric,
                    "value": check.value,
                    "kind": check.kind,
                    "bound": check.bound,
                    "passed": check.passed,
                }
                for check in self.checks
            ],
            columns=["metric", "value", "kind", "bound", "passed"],
        )

    def summary(self) -> str:
        """Get a plain-text summary of the run."""
        header = (
            f"{self.scenario.name} ({self.scenario.task}) step={self.step:g} seed={self.seed} "
            f"{'PASSED' if self.passed else 'FAILED'} in {self.wall_time:.2f}s"
        )
        rows = [
            (check.metric, check.value, check.kind, check.bound, "yes" if check.passed else "NO")
            for check in self.checks
        ]
        table = tabulate(rows, headers=["metric", "value", "kind", "bound", "passed"])
        return f"{header}\n\n{table}"


def _checks(
    metrics: Dict[str, float],
    scenario: Scenario,
    tol_scale: float,
) -> List[MetricCheck]:
    rv = []
    for metric, value in metrics.items():
        if metric in scenario.expect:
            rv.append(MetricCheck(metric, value, "expect", scenario.expect[metric]))
        if metric in scenario.tolerances:
            bound = scenario.tolerances[metric] * tol_scale
            rv.append(MetricCheck(metric, value, "tolerance", bound))
        if metric not in scenario.expect and metric not in scenario.tolerances:
            rv.append(MetricCheck(metric, value))
    missing = (set(scenario.expect) | set(scenario.tolerances)) - set(metrics)
    for metric in sorted(missing):
        # a bound on a metric the task did not produce is a failure
        rv.append(MetricCheck(metric, float("nan"), "tolerance", float("nan")))
    return rv


def write_csv(frame: pd.DataFrame, path: Path, timestamp: bool = True) -> None:
    """Write a frame through a temporary file in the target directory, then rename it."""
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8", newline="") as file:
            if timestamp:
                now = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
                file.write(f"# generated {now}\n")
            frame.to_csv(file, index=False, float_format="%.17g")
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise


def run_scenario(
    scenario: Scenario,
    *,
    step: Optional[float] = None,
    seed: Optional[int] = None,
    out_dir: Union[None, str, Path] = None,
    timestamp: bool = True,
    tol_scale: float = 1.0,
    use_tqdm: bool = False,
) -> RunReport:
    """Run a scenario and write its artifacts.

    Settings passed here take precedence over the scenario's, which take precedence over the
    configuration. No artifact is written unless the task completes.

    :param tol_scale: Multiplies every tolerance of the scenario
    :raises ValueError: If the step or the tolerance scale is not positive
    """
    if step is None:
        step = scenario.step or get_default_step()
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if tol_scale <= 0:
        raise ValueError(f"tolerance scale must be positive, got {tol_scale}")
    if seed is None:
        seed = scenario.seed if scenario.seed is not None else DEFAULT_SEED
    directory = Path(out_dir or scenario.output or get_default_out_dir())

    logger.info(
        "running %s (%s) with step %g and seed %d", scenario.name, scenario.task, step, seed
    )
    start = time.time()
    task = get_task(scenario.task)
    result = task.run(TaskContext(scenario=scenario, step=step, seed=seed, use_tqdm=use_tqdm))
    wall_time = time.time() - start
    logger.info("done running %s after %.2fs", scenario.name, wall_time)

    report = RunReport(
        scenario=scenario,
        step=step,
        seed=seed,
        checks=_checks({k: float(v) for k, v in result.metrics.items()}, scenario, tol_scale),
        wall_time=wall_time,
    )
    frames = {"": result.table, "-metrics": report.to_frame()}
    frames.update({f"-{suffix}": frame for suffix, frame in result.extra.items()})
    for suffix, frame in frames.items():
        path = directory.joinpath(f"{scenario.name}{suffix}.csv")
        write_csv(frame, path, timestamp=timestamp)
        report.artifacts.append(path)
        logger.info("wrote %s", path)
    return report
