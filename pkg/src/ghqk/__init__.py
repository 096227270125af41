"""Extended Gibbons-Hawking spaces, hyperkaehler cones and their quaternionic Kaehler quotients."""

from . import cli, cmap, cone, cp4d, dual, excalc, gh, imhp, legendre, qk, quatmath

__all__ = ["cli", "cmap", "cone", "cp4d", "dual", "excalc", "gh", "imhp", "legendre", "qk", "quatmath"]
__version__ = "0.1.0"
