"""Saddle-point solvers and two-player robust RL trainers built on Langevin sampling."""

__version__ = "0.1.0"
