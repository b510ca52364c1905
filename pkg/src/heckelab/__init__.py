"""Verification-grade computations for Hecke operators on compactly induced
representations of GL2 over unramified p-adic fields, and the submodule
structure controlling their mod-p reductions."""

__version__ = "0.1.0"
