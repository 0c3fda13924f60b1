"""Experiment commands: bound verification, probing, sweeps and feature analysis."""
