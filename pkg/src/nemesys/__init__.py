"""Desk-scale mobile core network security testbed.

Simulates a mobile core's control plane and billing stream, injects
signaling storms, botnet signaling DDoS and premium-rate fraud, detects
them with sequential likelihood-ratio and random-neural-network detectors,
enriches honeypot-style attack traces, and serves alerts to an analyst
console.
"""

__version__ = "0.1.0"
