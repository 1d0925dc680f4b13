#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Test package for the TWOPHOTON project.

This package contains test modules for the biphoton states, the two-atom
excitation engine, the correlation maps, the numerical certificates and the
command-line interface.
"""

__author__ = "TWOPHOTON Team"
__version__ = "0.1.0"
