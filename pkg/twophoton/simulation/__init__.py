"""Simulation package for the TWOPHOTON project.

This package contains the scenario configuration, the named presets and the
runners behind the command-line subcommands.
"""
