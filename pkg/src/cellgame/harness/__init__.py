"""Scenario harness and command-line front end."""
