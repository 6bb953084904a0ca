from __future__ import annotations

from pathlib import Path

import pytest

from visreason.engine import ImageResolver
from visreason.tools.providers import MockToolProvider

FIXTURES = Path(__file__).resolve().parent / "fixtures"

GOLDEN_IMAGES = {
    "sofa_table_height": "living_room.png",
    "tv_sofa_closer": "tv_room.png",
    "placemat_plant_ratio": "dining.png",
    "washer_chair_closer": "laundry.png",
    "blue_shirt_count": "street.png",
}


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def scenes() -> MockToolProvider:
    return MockToolProvider.from_file(FIXTURES / "scenes.json")


@pytest.fixture(scope="session")
def resolver(scenes: MockToolProvider) -> ImageResolver:
    return ImageResolver.for_provider(scenes)


@pytest.fixture(scope="session")
def run_on_scene(scenes, resolver):
    """Execute program source against one authored mock scene."""
    from visreason.runtime import Budget, ToolBridge, execute
    from visreason.toolprog import parse_program

    def run(code: str, ref: str, budget: Budget = Budget()):
        image = resolver.resolve(ref)
        return execute(parse_program(code), ToolBridge(scenes, {ref: image}), budget)

    return run


KITCHEN_PROGRAM = 'dets = gd_detect(img_pth, "cup, glass, plate")\nfinal_answer = len(dets)'
COARSE_KEEP = [1, 3, 4, 5, 6, 9]
COARSE_DROP = [2, 7, 8, 10]
CROP_REJECT = "[300, 200, 420, 280]"


def forge_responder(messages):
    """Scripted VLM for the kitchen fixture.

    Stages are told apart by their prompt; crops by the pixel box in the crop's ref.
    """
    import json as _json

    from visreason.tools.chat import message_images, message_text

    text = message_text(messages)
    if "single-box verifier" in text:
        crop = message_images(messages)[0]
        return _json.dumps({"keep": not crop.ref.endswith(f"#crop{CROP_REJECT}"), "reason": "scripted"})
    listing = text.split("Detections:\n", 1)[1].splitlines()
    n = len([row for row in listing if row.strip()])
    if "FINAL-PASS" in text:
        return _json.dumps({"keep_indices": list(range(1, n + 1)), "drop_indices": [], "notes": []})
    if "Object-Detection Verifier" in text:
        return _json.dumps({"keep_indices": COARSE_KEEP, "drop_indices": COARSE_DROP, "notes": ["scripted"]})
    raise AssertionError("unexpected VLM request")


@pytest.fixture
def forge_vlm():
    from visreason.tools.chat import ScriptedChatClient

    return ScriptedChatClient(responder=forge_responder, name="forge-vlm")


ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        ACCEPTANCE_RESULTS[label] = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the terminal summary")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split(" ", 1)[0])):
        terminalreporter.write_line(f"{ACCEPTANCE_RESULTS[label]:4} {label}")
