"""Equilibrium measures on the real line in the field of two attracting
log-charges: direct solvers, mass-parameter dynamics, phase transitions,
and the one-cut/two-cut phase body."""

from .core import (
    ChargeConfig,
    ConjugatePair,
    OneCut,
    PhaseDiagram,
    PhaseInterval,
    RealPair,
    TransitionEvent,
    TransitionKind,
    TwoCut,
    density,
    equilibrium_constant,
    total_potential,
)

__all__ = [
    "ChargeConfig",
    "ConjugatePair",
    "OneCut",
    "PhaseDiagram",
    "PhaseInterval",
    "RealPair",
    "TransitionEvent",
    "TransitionKind",
    "TwoCut",
    "density",
    "equilibrium_constant",
    "total_potential",
]

__version__ = "0.1.0"
