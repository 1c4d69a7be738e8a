"""Simulation and decoding toolkit for the 5-qudit perfect code in prime dimension."""
