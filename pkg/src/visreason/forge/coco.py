"""COCO-style export and import of pseudo-labels."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Mapping

from visreason import serialize
from visreason.forge.pipeline import PseudoLabel
from visreason.geometry import BBox, area
from visreason.tools.types import Detection


class DanglingReference(ValueError):
    pass


def coco_document(labels: Iterable[PseudoLabel], images: Mapping[str, tuple[int, int, str]]) -> dict[str, Any]:
    """``images`` maps image ref to (width, height, source); every label must name one of them.

    Corner coordinates and stage history ride along as extra annotation fields so
    re-import is exact.
    """
    labels = list(labels)
    for label in labels:
        if label.image_id not in images:
            raise DanglingReference(f"label refers to unregistered image {label.image_id!r}")
    image_ids = {ref: i for i, ref in enumerate(sorted(images), start=1)}
    category_ids = {name: i for i, name in enumerate(sorted({l.detection.label for l in labels}), start=1)}
    image_rows = [
        {"id": image_ids[ref], "file_name": ref, "width": w, "height": h, "source": src}
        for ref, (w, h, src) in sorted(images.items())
    ]
    annotations = []
    for k, label in enumerate(labels, start=1):
        b = label.detection.bbox
        annotations.append(
            {
                "id": k,
                "image_id": image_ids[label.image_id],
                "category_id": category_ids[label.detection.label],
                "bbox": [b.x1, b.y1, b.width, b.height],
                "area": area(b),
                "iscrowd": 0,
                "score": label.detection.score,
                "bbox_xyxy": b.as_list(),
                "stage_history": list(label.stage_history),
                "source": label.source,
            }
        )
    categories = [{"id": i, "name": name} for name, i in category_ids.items()]
    return {"images": image_rows, "annotations": annotations, "categories": categories}


def export_coco(labels: Iterable[PseudoLabel], path: str | Path, images: Mapping[str, tuple[int, int, str]]) -> dict[str, Any]:
    doc = coco_document(labels, images)
    serialize.write_json(path, doc)
    return doc


def import_coco(path: str | Path) -> list[PseudoLabel]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    images = {img["id"]: img for img in doc["images"]}
    categories = {c["id"]: c["name"] for c in doc["categories"]}
    out = []
    for ann in doc["annotations"]:
        if ann["image_id"] not in images or ann["category_id"] not in categories:
            raise DanglingReference(f"annotation {ann.get('id')} refers to a missing image or category")
        if "bbox_xyxy" in ann:
            box = BBox.from_seq(ann["bbox_xyxy"])
        else:
            x, y, w, h = ann["bbox"]
            box = BBox(x, y, x + w, y + h)
        image = images[ann["image_id"]]
        out.append(
            PseudoLabel(
                image["file_name"],
                Detection(box, categories[ann["category_id"]], ann.get("score", 1.0)),
                ann.get("source", image.get("source", "")),
                tuple(ann.get("stage_history", ())),
            )
        )
    return out
