"""EV battery-swap scheduling with optimal power flow on radial feeders."""

from ._core import (
    Grid,
    Scenario,
    audit_privacy,
    count_critical,
    distances,
    enumerate_binary,
    exactness,
    random_fixture,
    rounding_gap,
    run_admm,
    run_dual,
    solve_centralized,
)

__all__ = [
    "Grid",
    "Scenario",
    "audit_privacy",
    "count_critical",
    "distances",
    "enumerate_binary",
    "exactness",
    "random_fixture",
    "rounding_gap",
    "run_admm",
    "run_dual",
    "solve_centralized",
]
