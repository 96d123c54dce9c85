"""Experiment harness: configuration, persistence, probes, runs, CLI."""

from . import config, probes, records, runs  # noqa: F401
