"""Solvated variational quantum eigensolver (PCM-VQE) toolkit."""

__version__ = "0.1.0"
