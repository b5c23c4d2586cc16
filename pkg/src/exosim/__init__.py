"""Gravity-compensation and adaptive gravity-compensation control of a cable-driven elbow exosuit."""

__version__ = "0.1.0"
