# -*- coding: utf-8 -*-

"""Parsing of scenario files.

A scenario is a single JSON object. The layout is documented in ``schema.json`` next to this
module; :meth:`Scenario.from_json` reports problems with the line of the offending key.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

from ..exceptions import ScenarioError
from ..liegroup import GROUP_NAMES

__all__ = [
    "TASK_NAMES",
    "ComponentRef",
    "Scenario",
]

logger = logging.getLogger(__name__)

TASK_NAMES = ("rank-map", "orbit", "transport", "holonomy", "algebra", "convergence")
#: Tasks that transport along a lift
LIFT_TASKS = {"transport", "holonomy", "algebra"}

_KEYS = {
    "name",
    "description",
    "task",
    "bundle",
    "lift",
    "group",
    "family",
    "step",
    "seed",
    "tolerances",
    "expect",
    "options",
    "output",
}


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if text is None:
        return None
    match = re.search(rf'"{re.escape(key)}"\s*:', text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


@dataclass(frozen=True)
class ComponentRef:
    """A built-in component selected by name, with its parameters."""

    name: str
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario."""

    name: str
    task: str
    bundle: Optional[ComponentRef] = None
    lift: Optional[ComponentRef] = None
    group: Optional[str] = None
    family: Mapping[str, Any] = field(default_factory=dict)
    step: Optional[float] = None
    seed: Optional[int] = None
    #: Upper bounds on metrics
    tolerances: Mapping[str, float] = field(default_factory=dict)
    #: Exact values of metrics
    expect: Mapping[str, float] = field(default_factory=dict)
    options: Mapping[str, Any] = field(default_factory=dict)
    output: Optional[str] = None
    description: str = ""
    #: The source text, kept for line-numbered diagnostics
    text: Optional[str] = field(default=None, repr=False, compare=False)

    def error(self, message: str, key: str) -> ScenarioError:
        """Build an error pointing at the line of a key."""
        return ScenarioError(message, line=_line_of(self.text, key))

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        """Parse a scenario from JSON text.

        :raises ScenarioError: If the text is not valid JSON or does not describe a scenario
        """
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"malformed JSON: {e.msg}", line=e.lineno) from e
        return cls.from_dict(data, text=text)

    @classmethod
    def from_dict(cls, data: Any, text: Optional[str] = None) -> "Scenario":
        """Build a scenario from a parsed JSON object.

        :raises ScenarioError: If a key is missing, unknown, or has the wrong type
        """
        if not isinstance(data, dict):
            raise ScenarioError("a scenario must be a JSON object", line=1)

        def _fail(message: str, key: str) -> ScenarioError:
            return ScenarioError(message, line=_line_of(text, key))

        for key in data:
            if key not in _KEYS:
                raise _fail(f"unknown key {key!r}", key)
        for key in ("name", "task"):
            if key not in data:
                raise ScenarioError(f"missing required key {key!r}", line=1)
            if not isinstance(data[key], str):
                raise _fail(f"{key!r} must be a string", key)
        task = data["task"]
        if task not in TASK_NAMES:
            raise _fail(f"unknown task {task!r}. Use one of {', '.join(TASK_NAMES)}", "task")

        refs: Dict[str, Optional[ComponentRef]] = {}
        for key in ("bundle", "lift"):
            value = data.get(key)
            if value is None:
                refs[key] = None
            elif isinstance(value, str):
                refs[key] = ComponentRef(value)
            elif isinstance(value, dict) and isinstance(value.get("name"), str):
                params = value.get("params", {})
                if not isinstance(params, dict):
                    raise _fail(f"{key} params must be an object", key)
                refs[key] = ComponentRef(value["name"], params)
            else:
                raise _fail(f"{key!r} must be a name or an object with a name", key)
        if task != "convergence" and refs["bundle"] is None:
            raise ScenarioError(f"task {task!r} needs a bundle", line=_line_of(text, "task"))
        if task in LIFT_TASKS and refs["lift"] is None:
            raise ScenarioError(f"task {task!r} needs a lift", line=_line_of(text, "task"))

        group = data.get("group")
        if group is not None and group not in GROUP_NAMES:
            raise _fail(f"unknown group {group!r}. Use one of {', '.join(GROUP_NAMES)}", "group")

        step = data.get("step")
        if step is not None and (not isinstance(step, (int, float)) or step <= 0):
            raise _fail(f"step must be a positive number, got {step!r}", "step")
        seed = data.get("seed")
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
            raise _fail(f"seed must be an integer, got {seed!r}", "seed")

        for key in ("family", "options"):
            if not isinstance(data.get(key, {}), dict):
                raise _fail(f"{key!r} must be an object", key)
        bounds: Dict[str, Dict[str, float]] = {}
        for key in ("tolerances", "expect"):
            value = data.get(key, {})
            if not isinstance(value, dict) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value.values()
            ):
                raise _fail(f"{key!r} must map metric names to numbers", key)
            bounds[key] = {k: float(v) for k, v in value.items()}
        output = data.get("output")
        if output is not None and not isinstance(output, str):
            raise _fail("'output' must be a directory path", "output")

        return cls(
            name=data["name"],
            task=task,
            bundle=refs["bundle"],
            lift=refs["lift"],
            group=group,
            family=data.get("family", {}),
            step=None if step is None else float(step),
            seed=seed,
            tolerances=bounds["tolerances"],
            expect=bounds["expect"],
            options=data.get("options", {}),
            output=output,
            description=data.get("description", ""),
            text=text,
        )
