"""Dissipative stabilization of Floquet quasienergy states: simulation toolkit."""

__version__ = "0.1.0"
