"""Deterministic simulator and library for distributed DDoS detection over
software-defined networks: MAC-learning switches mirror traffic to
co-located monitors that classify per-flow windows with an RBF SVC, share
beliefs, and report to per-domain controllers that block attackers by
quorum vote."""

__version__ = "0.1.0"
