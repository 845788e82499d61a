# -*- coding: utf-8 -*-

"""Principal lifts of anchored bundles: transport, displacement, and holonomy."""

from .api import algebra, holonomy, run  # noqa:F401
