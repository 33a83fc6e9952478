"""Spectral-viscosity simulation of 2D incompressible flow with Monte-Carlo
statistical solutions and structure-function / energy-spectrum diagnostics."""

__version__ = "0.1.0"
