"""Experiment harness: configs, repeated runs, reports and the CLI."""
