"""Desk-scale in-hand object rotation lab.

Trains a privileged teacher policy in a planar contact surrogate,
distills a proprioception-history adaptation module from it, and
evaluates the resulting controllers against non-adaptive baselines.
"""

__version__ = "0.1.0"
