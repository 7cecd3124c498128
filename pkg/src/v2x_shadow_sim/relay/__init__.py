"""Relay path selection: MoHeD, signal-strength, random and direct policies."""

from .policies import (
    CandidateAssessment,
    RelayDecision,
    candidate_set,
    decide,
    reachable_candidates,
    select_direct,
    select_mohed,
    select_random,
    select_signal_strength,
)
from .reselect import DecisionEvent, maybe_reselect
from .risk import (
    RiskTerm,
    link_nlos_risk,
    mobility_similarity,
    obstacles_between,
    obstacles_between_bruteforce,
    predicted_link_risk,
    risk_terms,
    static_nlos_risk,
)

__all__ = [
    # Risk
    "RiskTerm",
    "link_nlos_risk",
    "mobility_similarity",
    "obstacles_between",
    "obstacles_between_bruteforce",
    "predicted_link_risk",
    "risk_terms",
    "static_nlos_risk",
    # Policies
    "CandidateAssessment",
    "RelayDecision",
    "candidate_set",
    "decide",
    "reachable_candidates",
    "select_direct",
    "select_mohed",
    "select_random",
    "select_signal_strength",
    # Re-selection
    "DecisionEvent",
    "maybe_reselect",
]
