"""RSU-assisted cooperative sensing: scenario simulator and two-layer placement solver."""
__version__ = "0.1.0"
