"""Image-seeded query generation and uniform selection."""

from visreason.queries.generate import (
    FLAG_MALFORMED,
    FLAG_OVER_COUNT,
    FLAG_UNDER_COUNT,
    MAX_CANDIDATES,
    Malformed,
    SKIP,
    QueryCandidateSet,
    Skip,
    Skipped,
    TrainingMix,
    compose_training_mix,
    generate_queries,
    manifest_row,
    parse_generation,
    select_query,
)

__all__ = [
    "FLAG_MALFORMED",
    "FLAG_OVER_COUNT",
    "FLAG_UNDER_COUNT",
    "MAX_CANDIDATES",
    "Malformed",
    "SKIP",
    "QueryCandidateSet",
    "Skip",
    "Skipped",
    "TrainingMix",
    "compose_training_mix",
    "generate_queries",
    "manifest_row",
    "parse_generation",
    "select_query",
]
