# -*- coding: utf-8 -*-

"""Declarative scenarios and the runner that checks them."""

from .registry import list_scenarios, load_scenario  # noqa:F401
from .runner import MetricCheck, RunReport, run_scenario  # noqa:F401
from .schema import Scenario  # noqa:F401
from .tasks import TASKS, Task, TaskContext, TaskResult, get_task  # noqa:F401
