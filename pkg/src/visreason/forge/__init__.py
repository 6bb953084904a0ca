"""VLM-verified pseudo-label forge."""

from visreason.forge.coco import DanglingReference, coco_document, export_coco, import_coco
from visreason.forge.metrics import EmptyCounts, NoSources, PrecisionCounts, balanced_sample, precision
from visreason.forge.pipeline import (
    STAGES,
    ForgeConfig,
    ForgeItem,
    ImageRun,
    PseudoLabel,
    collect_labels,
    forge_image,
    manifest_rows,
    registered_images,
    run_pipeline,
)
from visreason.forge.stages import (
    DuplicateGroup,
    KeepDropVerdict,
    StageResult,
    VerdictInvalid,
    coarse_filter,
    deduplicate,
    drop_geometric_duplicates,
    geometric_duplicates,
    overpredict,
    parse_keep,
    parse_keep_drop,
    per_crop_verify,
)

__all__ = [
    "STAGES",
    "DanglingReference",
    "DuplicateGroup",
    "EmptyCounts",
    "ForgeConfig",
    "ForgeItem",
    "ImageRun",
    "KeepDropVerdict",
    "NoSources",
    "PrecisionCounts",
    "PseudoLabel",
    "StageResult",
    "VerdictInvalid",
    "balanced_sample",
    "coarse_filter",
    "coco_document",
    "collect_labels",
    "deduplicate",
    "drop_geometric_duplicates",
    "export_coco",
    "forge_image",
    "geometric_duplicates",
    "import_coco",
    "manifest_rows",
    "overpredict",
    "parse_keep",
    "parse_keep_drop",
    "per_crop_verify",
    "precision",
    "registered_images",
    "run_pipeline",
]
