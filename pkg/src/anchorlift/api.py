# -*- coding: utf-8 -*-

"""High-level API for :mod:`anchorlift`."""

import logging
from typing import Any, Mapping, Optional, Sequence, Union

from .anchored import get_bundle
from .holonomy import AlgebraEstimate, HolonomySample, LoopFamily, holonomy_algebra
from .holonomy import sample_holonomy as _sample_holonomy
from .lift import get_lift
from .scenarios import RunReport, load_scenario, run_scenario

__all__ = [
    "run",
    "holonomy",
    "algebra",
]

logger = logging.getLogger(__name__)


def run(scenario: str, **kwargs) -> RunReport:
    """Run a scenario file or a built-in scenario by name.

    Keyword arguments are passed to :func:`anchorlift.scenarios.run_scenario`.
    """
    return run_scenario(load_scenario(scenario), **kwargs)


def holonomy(
    bundle: str,
    lift: str,
    scales: Sequence[Union[float, Sequence[float]]],
    base_point: Optional[Sequence[float]] = None,
    params: Optional[Mapping[str, Any]] = None,
    kind: str = "rectangles",
    step: Optional[float] = None,
    closure: bool = False,
) -> HolonomySample:
    """Sample the displacements of a loop family for built-in components.

    >>> from anchorlift.api import holonomy
    >>> sample = holonomy("planar-identity", "so2-area", [[1.0, 2.0]])
    >>> round(float(sample.logs[0].coords[0]), 6)
    2.0
    """
    anchored_bundle = get_bundle(bundle)
    family = LoopFamily(
        kind=kind,
        base_point=base_point if base_point is not None else [0.0] * anchored_bundle.base_dim,
        scales=tuple(scales),
    )
    return _sample_holonomy(
        get_lift(lift, anchored_bundle, params), family, step=step, closure=closure
    )


def algebra(
    bundle: str,
    lift: str,
    scales: Sequence[Union[float, Sequence[float]]],
    params: Optional[Mapping[str, Any]] = None,
    depth: int = 2,
    step: Optional[float] = None,
) -> AlgebraEstimate:
    """Estimate the holonomy algebra at the origin from a closed loop family.

    >>> from anchorlift.api import algebra
    >>> algebra("planar-identity", "so3-flat2", [[0.5, 0.5], [1.0, 1.0]]).rank
    3
    """
    sample = holonomy(bundle, lift, scales, params=params, step=step, closure=True)
    return holonomy_algebra(sample, extra_bracket_depth=depth)
