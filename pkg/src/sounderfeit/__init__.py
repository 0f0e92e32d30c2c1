"""Sounderfeit: synth-cloning workbench for a bowed-string waveguide."""

__version__ = "0.1.0"
