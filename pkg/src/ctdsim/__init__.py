"""Simulation of privacy-protecting wearable contact tracing."""
