"""GRPO scalar math and the rollout-group builder."""

from visreason.grpo.batch import (
    FLAG_EXCLUDED,
    GrpoGroup,
    PolicyUnavailable,
    QueryItem,
    RolloutRecord,
    build_rollout_batch,
    rollout_rows,
    write_rollouts,
)
from visreason.grpo.objective import (
    MAX_EXP_ARG,
    GroupLoss,
    GroupTooSmall,
    GrpoConfig,
    SequenceLogProbs,
    SizeMismatch,
    clamped_exp,
    clipped_objective,
    group_advantages,
    grpo_group_loss,
    grpo_group_loss_flagged,
    importance_ratio,
    importance_ratio_flagged,
    kl_penalty,
    kl_penalty_flagged,
)

__all__ = [
    "FLAG_EXCLUDED",
    "MAX_EXP_ARG",
    "GroupLoss",
    "GroupTooSmall",
    "GrpoConfig",
    "GrpoGroup",
    "PolicyUnavailable",
    "QueryItem",
    "RolloutRecord",
    "SequenceLogProbs",
    "SizeMismatch",
    "build_rollout_batch",
    "clamped_exp",
    "clipped_objective",
    "group_advantages",
    "grpo_group_loss",
    "grpo_group_loss_flagged",
    "importance_ratio",
    "importance_ratio_flagged",
    "kl_penalty",
    "kl_penalty_flagged",
    "rollout_rows",
    "write_rollouts",
]
