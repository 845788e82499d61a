# -*- coding: utf-8 -*-

"""Trivial version test."""

import unittest

from anchorlift.version import VERSION, get_version


class TestVersion(unittest.TestCase):
    """Trivially test a version."""

    def test_version_type(self):
        """Test the version is a string that starts with the release version."""
        version = get_version()
        self.assertIsInstance(version, str)
        self.assertTrue(version.startswith(VERSION))
