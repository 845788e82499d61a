# -*- coding: utf-8 -*-

"""Built-in scenarios and the resolution of the components a scenario names."""

import logging
from pathlib import Path
from typing import List, Optional, Union

from ..anchored import AnchoredBundle, get_bundle
from ..exceptions import ScenarioError
from ..holonomy import LoopFamily
from ..lift import TrivializedLift, get_lift
from .schema import Scenario

__all__ = [
    "BUILTIN_DIRECTORY",
    "list_scenarios",
    "load_scenario",
    "resolve_bundle",
    "resolve_lift",
    "resolve_family",
    "validate_scenario",
]

logger = logging.getLogger(__name__)

BUILTIN_DIRECTORY = Path(__file__).parent.joinpath("builtin")


def list_scenarios() -> List[str]:
    """Get the sorted names of the built-in scenarios."""
    return sorted(path.stem for path in BUILTIN_DIRECTORY.glob("*.json"))


def load_scenario(name_or_path: Union[str, Path]) -> Scenario:
    """Load a scenario from a file, or a built-in one by name, and validate it.

    :raises ScenarioError: If the name is unknown or the scenario is invalid
    :raises OSError: If the file can not be read
    """
    path = Path(name_or_path)
    if not path.is_file():
        builtin = BUILTIN_DIRECTORY.joinpath(f"{name_or_path}.json")
        if not builtin.is_file():
            raise ScenarioError(
                f"no scenario file or built-in scenario named {name_or_path}. "
                f"Built-in scenarios: {', '.join(list_scenarios())}"
            )
        path = builtin
    logger.debug("loading scenario from %s", path)
    scenario = Scenario.from_json(path.read_text(encoding="utf-8"))
    validate_scenario(scenario)
    return scenario


def resolve_bundle(scenario: Scenario) -> Optional[AnchoredBundle]:
    """Get the bundle a scenario names.

    :raises ScenarioError: If the bundle is unknown
    """
    if scenario.bundle is None:
        return None
    try:
        return get_bundle(scenario.bundle.name)
    except KeyError as e:
        raise scenario.error(e.args[0], "bundle") from e


def resolve_lift(scenario: Scenario, bundle: AnchoredBundle) -> Optional[TrivializedLift]:
    """Get the lift a scenario names, in the scenario's group if it gives one.

    :raises ScenarioError: If the lift is unknown, its parameters don't fit, or its group
        differs from the scenario's group
    """
    if scenario.lift is None:
        return None
    params = dict(scenario.lift.params)
    if scenario.group is not None:
        params.setdefault("group", scenario.group)
    try:
        lift = get_lift(scenario.lift.name, bundle, params)
    except KeyError as e:
        raise scenario.error(e.args[0], "lift") from e
    except (ValueError, TypeError) as e:
        raise scenario.error(f"invalid lift parameters: {e}", "lift") from e
    if scenario.group is not None and lift.group.name != scenario.group:
        raise scenario.error(
            f"lift {lift.name} lives in {lift.group.name}, scenario asks for {scenario.group}",
            "group",
        )
    return lift


def resolve_family(scenario: Scenario, bundle: AnchoredBundle) -> LoopFamily:
    """Build the loop family of a scenario, by default rectangles at the origin.

    :raises ScenarioError: If the family parameters are invalid or don't fit the bundle
    """
    params = dict(scenario.family)
    params.setdefault("kind", "rectangles")
    params.setdefault("base_point", [0.0] * bundle.base_dim)
    params.setdefault("scales", [[1.0, 1.0]])
    try:
        family = LoopFamily(**params)
    except (TypeError, ValueError) as e:
        raise scenario.error(f"invalid loop family: {e}", "family") from e
    if family.base_point.shape != (bundle.base_dim,):
        raise scenario.error(
            f"base point {family.base_point.tolist()} does not fit {bundle.name}", "family"
        )
    if not all(0 <= i < bundle.fiber_dim for i in family.plane):
        raise scenario.error(f"plane {family.plane} does not fit {bundle.name}", "family")
    return family


def validate_scenario(scenario: Scenario) -> None:
    """Check that the names a scenario references exist and their dimensions agree.

    :raises ScenarioError: If the scenario can not be run
    """
    bundle = resolve_bundle(scenario)
    if bundle is None:
        return
    resolve_lift(scenario, bundle)
    if scenario.task in {"holonomy", "algebra", "transport"}:
        resolve_family(scenario, bundle)
