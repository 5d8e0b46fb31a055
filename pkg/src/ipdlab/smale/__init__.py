"""Smale plans, separation paths and the equilibrium pair constructor."""
