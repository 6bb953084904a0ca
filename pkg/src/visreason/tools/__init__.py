"""Vision tool API (detect, depth, VQA) behind pluggable providers."""

from visreason.geometry import BBox
from visreason.tools.cassette import (
    CassetteStore,
    RecordingChatClient,
    RecordingToolProvider,
    ReplayChatClient,
    ReplayToolProvider,
    UnrecordedCall,
)
from visreason.tools.chat import (
    ChatClient,
    HttpChatClient,
    RuleChatClient,
    ScriptedChatClient,
    call_with_retries,
    message_images,
    message_text,
    user_message,
)
from visreason.tools.imaging import crop_and_upscale, detection_listing, render_overlay
from visreason.tools.providers import (
    DummyToolProvider,
    HttpToolProvider,
    MockScene,
    MockToolProvider,
    ToolProvider,
    VqaRule,
    vqa_view,
)
from visreason.tools.types import Detection, EmptyPrompt, ImageHandle, OutOfBounds, ProviderError

__all__ = [
    "BBox",
    "CassetteStore",
    "ChatClient",
    "Detection",
    "DummyToolProvider",
    "EmptyPrompt",
    "HttpChatClient",
    "HttpToolProvider",
    "ImageHandle",
    "MockScene",
    "MockToolProvider",
    "OutOfBounds",
    "ProviderError",
    "RecordingChatClient",
    "RecordingToolProvider",
    "ReplayChatClient",
    "ReplayToolProvider",
    "RuleChatClient",
    "ScriptedChatClient",
    "ToolProvider",
    "UnrecordedCall",
    "VqaRule",
    "call_with_retries",
    "crop_and_upscale",
    "detection_listing",
    "message_images",
    "message_text",
    "render_overlay",
    "user_message",
    "vqa_view",
]
