"""Reward heads, verifier plumbing and aggregation."""

from visreason.reward.model import (
    FLAG_UNAVAILABLE,
    FLAG_UNPARSEABLE,
    HEADS,
    VERIFIER_HEADS,
    HeadOutcome,
    InvalidWeights,
    RewardModel,
    RewardVector,
    RewardWeights,
    SyntaxOutcome,
    Unparseable,
    VerifierClient,
    aggregate_reward,
    format_reward,
    parse_verifier_verdict,
    score_rollout,
    syntax_check,
    syntax_reward,
    verifier_prompt,
    verifier_reward,
)

__all__ = [
    "FLAG_UNAVAILABLE",
    "FLAG_UNPARSEABLE",
    "HEADS",
    "VERIFIER_HEADS",
    "HeadOutcome",
    "InvalidWeights",
    "RewardModel",
    "RewardVector",
    "RewardWeights",
    "SyntaxOutcome",
    "Unparseable",
    "VerifierClient",
    "aggregate_reward",
    "format_reward",
    "parse_verifier_verdict",
    "score_rollout",
    "syntax_check",
    "syntax_reward",
    "verifier_prompt",
    "verifier_reward",
]
