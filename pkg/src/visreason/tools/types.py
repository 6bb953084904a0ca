from __future__ import annotations

import base64
import hashlib
import io
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Any

from PIL import Image

from visreason.geometry import BBox, InvalidBox


class ProviderError(RuntimeError):
    """A tool backend failed (transport failure or malformed response)."""


class EmptyPrompt(ValueError):
    pass


class OutOfBounds(ValueError):
    pass


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    label: str
    score: float = 1.0

    def __post_init__(self) -> None:
        if not self.label or not self.label.strip():
            raise ValueError("detection label must be non-empty")
        if not (0.0 <= self.score <= 1.0) or math.isnan(self.score):
            raise ValueError(f"detection score must lie in [0, 1]: {self.score!r}")
        object.__setattr__(self, "score", float(self.score))

    def to_json(self) -> dict[str, Any]:
        return {"bbox": self.bbox.as_list(), "label": self.label, "score": self.score}

    @classmethod
    def from_json(cls, obj: Any) -> "Detection":
        try:
            return cls(BBox.from_seq([float(v) for v in obj["bbox"]]), str(obj["label"]), float(obj.get("score", 1.0)))
        except (KeyError, TypeError, ValueError, InvalidBox) as exc:
            raise ProviderError(f"malformed detection {obj!r}: {exc}") from exc


@dataclass(frozen=True, eq=False)
class ImageHandle:
    """Encoded raster bytes plus pixel size.

    ``ref`` is the caller-facing name (usually a path); identity for caching
    purposes is the pixel digest, never the ref.
    """

    data: bytes
    width: int
    height: int
    ref: str = ""
    fmt: str = field(default="PNG")

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image must be at least 1x1, got {self.width}x{self.height}")

    @cached_property
    def digest(self) -> str:
        """Hash of the decoded RGB pixels, so re-encoding the same raster keeps its identity."""
        with Image.open(io.BytesIO(self.data)) as im:
            rgb = im.convert("RGB")
        h = hashlib.sha256(f"{rgb.width}x{rgb.height}:".encode())
        h.update(rgb.tobytes())
        return h.hexdigest()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ImageHandle) and self.digest == other.digest

    def __hash__(self) -> int:
        return hash(self.digest)

    @classmethod
    def from_path(cls, path: str | Path) -> "ImageHandle":
        data = Path(path).read_bytes()
        with Image.open(io.BytesIO(data)) as im:
            width, height = im.size
            fmt = im.format or "PNG"
        return cls(data, width, height, ref=str(path), fmt=fmt)

    @classmethod
    def from_pil(cls, im: Image.Image, ref: str = "") -> "ImageHandle":
        buf = io.BytesIO()
        im.save(buf, format="PNG", optimize=False)
        return cls(buf.getvalue(), im.width, im.height, ref=ref)

    @classmethod
    def placeholder(cls, width: int = 640, height: int = 480, ref: str = "img_pth") -> "ImageHandle":
        """A solid-color stand-in whose color (and so its digest) is derived from ``ref``."""
        return _placeholder(width, height, ref)

    def to_pil(self) -> Image.Image:
        im = Image.open(io.BytesIO(self.data))
        im.load()
        return im.convert("RGB")

    def data_url(self) -> str:
        mime = "image/jpeg" if self.fmt.upper() in ("JPEG", "JPG") else "image/png"
        return f"data:{mime};base64,{base64.b64encode(self.data).decode('ascii')}"

    def b64(self) -> str:
        return base64.b64encode(self.data).decode("ascii")

    def check_box(self, bbox: BBox) -> None:
        if not bbox.within(self.width, self.height):
            raise OutOfBounds(f"box {bbox.as_list()} outside {self.width}x{self.height} image")


@lru_cache(maxsize=256)
def _placeholder(width: int, height: int, ref: str) -> ImageHandle:
    color = tuple(hashlib.sha256(ref.encode("utf-8")).digest()[:3])
    return ImageHandle.from_pil(Image.new("RGB", (width, height), color), ref=ref)
