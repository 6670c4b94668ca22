"""Capsule-endoscope coverage scanning: simulator, RL trainers, and teleop server."""

__version__ = "0.1.0"
