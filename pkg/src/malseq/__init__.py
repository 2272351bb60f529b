"""Malware/goodware classification from sandbox API-call sequences."""

__version__ = "0.1.0"
