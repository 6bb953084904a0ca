"""Sequence-level GRPO scalars: centered advantages, ratios, clipped objective, KL penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

MAX_EXP_ARG = 700.0


class GroupTooSmall(ValueError):
    pass


class SizeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GrpoConfig:
    epsilon: float = 0.2
    beta: float = 0.01
    group_size: int = 5

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta!r}")
        if isinstance(self.group_size, bool) or not isinstance(self.group_size, int) or self.group_size < 2:
            raise ValueError(f"group_size must be an integer >= 2, got {self.group_size!r}")


@dataclass(frozen=True)
class SequenceLogProbs:
    logp_new: float
    logp_old: float
    logp_ref: float

    def __post_init__(self) -> None:
        for name in ("logp_new", "logp_old", "logp_ref"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def group_advantages(rewards: Sequence[float]) -> list[float]:
    """A_i = R_i - mean(R).

    The mean and differences are taken in exact rational arithmetic and rounded
    once, so shifting all rewards by a constant that keeps them exactly
    representable reproduces the advantages bit for bit.
    """
    if len(rewards) < 2:
        raise GroupTooSmall(f"a group needs at least 2 rewards, got {len(rewards)}")
    exact = []
    for r in rewards:
        if isinstance(r, bool) or not isinstance(r, (int, float)) or not math.isfinite(r):
            raise ValueError(f"rewards must be finite numbers, got {r!r}")
        exact.append(Fraction(r))
    mean = sum(exact, Fraction(0)) / len(exact)
    return [float(r - mean) for r in exact]


def clamped_exp(x: float) -> tuple[float, bool]:
    """exp(x) with the argument clamped to +/-700; the flag reports clamping."""
    if x > MAX_EXP_ARG:
        return math.exp(MAX_EXP_ARG), True
    if x < -MAX_EXP_ARG:
        return math.exp(-MAX_EXP_ARG), True
    return math.exp(x), False


def importance_ratio_flagged(lp: SequenceLogProbs) -> tuple[float, bool]:
    return clamped_exp(lp.logp_new - lp.logp_old)


def importance_ratio(lp: SequenceLogProbs) -> float:
    """s = exp(logp_new - logp_old)."""
    return importance_ratio_flagged(lp)[0]


def clipped_objective(s: float, advantage: float, epsilon: float) -> float:
    """min(s*A, clip(s, 1-eps, 1+eps)*A)."""
    if not s > 0:
        raise ValueError(f"ratio must be positive, got {s!r}")
    clipped = min(max(s, 1.0 - epsilon), 1.0 + epsilon)
    return min(s * advantage, clipped * advantage)


def _kl_from_delta(delta: float) -> float:
    if delta == 0.0:
        return 0.0
    if abs(delta) < 0.1:
        # series of exp(d) - d - 1; the direct form cancels catastrophically here
        term = value = delta * delta / 2
        k = 2
        while abs(term) > 1e-18 * value:
            k += 1
            term *= delta / k
            value += term
    else:
        value = math.expm1(delta) - delta
    # the true value is strictly positive for delta != 0; keep it off zero after underflow
    return value if value > 0.0 else math.ulp(0.0)


def kl_penalty_flagged(lp: SequenceLogProbs) -> tuple[float, bool]:
    delta = lp.logp_ref - lp.logp_new
    flagged = abs(delta) > MAX_EXP_ARG
    if flagged:
        delta = math.copysign(MAX_EXP_ARG, delta)
    return _kl_from_delta(delta), flagged


def kl_penalty(lp: SequenceLogProbs) -> float:
    """k(d) = exp(d) - d - 1 with d = logp_ref - logp_new; nonnegative, zero iff d == 0."""
    return kl_penalty_flagged(lp)[0]


@dataclass(frozen=True)
class GroupLoss:
    value: float
    overflow: bool


def grpo_group_loss_flagged(
    advantages: Sequence[float], lps: Sequence[SequenceLogProbs], cfg: GrpoConfig = GrpoConfig()
) -> GroupLoss:
    if len(advantages) != len(lps):
        raise SizeMismatch(f"{len(advantages)} advantages but {len(lps)} log-prob triples")
    if len(advantages) < 2:
        raise GroupTooSmall("a group needs at least 2 members")
    total = 0.0
    overflow = False
    for a, lp in zip(advantages, lps):
        s, o1 = importance_ratio_flagged(lp)
        k, o2 = kl_penalty_flagged(lp)
        overflow = overflow or o1 or o2
        total += clipped_objective(s, a, cfg.epsilon) - cfg.beta * k
    return GroupLoss(total / len(advantages), overflow)


def grpo_group_loss(group, lps: Sequence[SequenceLogProbs], cfg: GrpoConfig = GrpoConfig()) -> float:
    """(1/G) * sum_i [clipped_objective(s_i, A_i, eps) - beta * kl_i].

    ``group`` is a :class:`GrpoGroup` or a plain sequence of advantages.
    """
    advantages = group.advantages if hasattr(group, "advantages") else group
    return grpo_group_loss_flagged(advantages, lps, cfg).value
