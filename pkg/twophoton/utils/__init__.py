"""Utilities package for the TWOPHOTON project.

This package contains logging setup, file persistence, parameter and
document validation, and the blocked-summation helpers used by the
evaluators.
"""
