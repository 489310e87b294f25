"""Simulator for a reconfigurable lithium-niobate two-photon source chip."""

__version__ = "0.1.0"
