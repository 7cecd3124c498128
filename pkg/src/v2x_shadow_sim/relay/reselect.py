"""Periodic relay re-selection and the decision event trace."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

from ..config import RelayPolicy
from .policies import RelayDecision

logger = logging.getLogger(__name__)

WINDOW_TOLERANCE = 1e-9


@dataclass(frozen=True, slots=True)
class DecisionEvent:
    """One trace record per policy evaluation."""

    clock: float
    policy: str
    path: str
    relay_id: int | None
    switched: bool
    assessments: tuple[dict, ...] = ()

    @classmethod
    def from_decision(cls, decision: RelayDecision, switched: bool) -> "DecisionEvent":
        return cls(
            clock=decision.decided_at,
            policy=str(decision.policy),
            path=decision.path,
            relay_id=decision.relay_id,
            switched=switched,
            assessments=tuple(a.to_dict() for a in decision.assessments),
        )

    def to_dict(self) -> dict:
        return {
            "clock": self.clock,
            "policy": self.policy,
            "path": self.path,
            "relay_id": self.relay_id,
            "switched": self.switched,
            "assessments": list(self.assessments),
        }


def maybe_reselect(
    clock: float,
    last: RelayDecision | None,
    policy: RelayPolicy,
    select: Callable[[], RelayDecision],
) -> tuple[RelayDecision, bool]:
    """
    Re-run the policy once its re-selection window has elapsed.

    Args:
        clock: Current simulation time in seconds
        last: Decision in force, or None before the first decision
        policy: Relay policy providing the window
        select: Zero-argument callable evaluating the policy now

    Returns:
        Tuple of (decision in force, switched). The first decision is never a switch.
    """
    if last is None:
        return select(), False

    if clock - last.decided_at < policy.reselect_window - WINDOW_TOLERANCE:
        return last, False

    decision = select()
    switched = decision.relay_id != last.relay_id
    if switched:
        logger.debug(f"t={clock:.2f}s relay switch {last.path} -> {decision.path}")
    return decision, switched
