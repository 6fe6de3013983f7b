"""
infosubs - value of information, informational substitutes and complements.

This package computes the value of signals in finite Bayesian decision
problems, classifies signals as substitutes or complements, selects signals
under budget constraints, and checks prediction-market equilibria on small
exact games.
"""

__version__ = "0.1.0"
