# -*- coding: utf-8 -*-

"""Constants and configuration lookups for :mod:`anchorlift`."""

import pystow

MODULE = pystow.module("anchorlift")

#: Group-constraint residual accepted for a matrix to count as a group element
CONSTRAINT_TOL = 1e-9
#: Coordinate/matrix and exp/log round-trip tolerance
ROUND_TRIP_TOL = 1e-10
#: Relative SVD threshold for numerical ranks
RANK_THRESHOLD = 1e-8
#: Bracket-closure residual tolerance for holonomy algebras
CLOSURE_TOL = 1e-6
#: Base gap accepted when a loop returns to its base point
LOOP_CLOSURE_TOL = 1e-6
#: Base gap accepted at a junction between composed curves
JUNCTION_TOL = 1e-7
#: Iterates leaving this ball are reported as a blowup
DOMAIN_GUARD = 1e6
#: Distance kept from the cut locus when taking logarithms of rotations
INJECTIVITY_MARGIN = 1e-6
#: Minimal derivative of a reparameterization
MONOTONE_THRESHOLD = 1e-8
#: Number of subintervals on which a reparameterization derivative is sampled
MONOTONE_SUBINTERVALS = 256
#: Base step of the central differences used for Lie brackets
BRACKET_STEP = 1e-5
#: Widening of the differencing step per nesting level of a bracket
BRACKET_NESTING_FACTOR = 300.0
#: Upper bound on the differencing step of a nested bracket, relative to max(1, |x|)
BRACKET_MAX_STEP = 5e-2

DEFAULT_STEP = 1e-2
DEFAULT_SEED = 0


def get_default_step() -> float:
    """Get the default integrator step, configurable with ``ANCHORLIFT_STEP``."""
    rv = pystow.get_config("anchorlift", "step", dtype=float)
    if rv is not None:
        return rv

    # Default value
    return DEFAULT_STEP


def get_default_out_dir() -> str:
    """Get the default artifact directory, configurable with ``ANCHORLIFT_OUT_DIR``."""
    rv = pystow.get_config("anchorlift", "out_dir")
    if rv is not None:
        return rv

    # Default value
    return str(MODULE.join("runs"))
