"""
Simulation of a three-radical quantum magnetic sensor driven by a collisional
environment.
"""

__version__ = '1.0.0'
