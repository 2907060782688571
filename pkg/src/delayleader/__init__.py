"""Delay-closeness leader election over peer overlays, with a deterministic
discrete-event simulator and an exact brute-force oracle to check it."""

__version__ = "0.1.0"

from delayleader.overlay import OverlayGraph, generate_overlay  # noqa: F401
from delayleader.oracle import oracle_all_pairs, oracle_mst  # noqa: F401
from delayleader.engine import run_scenario  # noqa: F401
