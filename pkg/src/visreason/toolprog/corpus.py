"""Reference tool programs used as few-shot examples and as the golden test corpus.

The program bodies are kept as published except for one repaired typo
(``ot`` for ``or`` in the ratio example). Tag placement around the bodies is
normalized so every entry is a well-formed plan/answer response.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GoldenProgram:
    name: str
    question: str
    plan: str
    code: str

    def raw_output(self) -> str:
        return f"<plan>\n{self.plan}\n</plan><answer>\n{self.code}\n</answer>"


SOFA_TABLE_HEIGHT = GoldenProgram(
    name="sofa_table_height",
    question="If the 3D height of the two-seat sofa is 0.50 meters, what is the 3D height of the dining table in meters?",
    plan="""1. Detect "two-seat sofa, dining table" once and pick each object by label.
2. Fall back to whole-image vqa and return if either is missing.
3. For each object, multiply its pixel height by its depth to get a pseudo-3D height.
4. Scale the table's pseudo height by 0.50 / sofa pseudo height and store it in final_answer.""",
    code='''# Step 1: Detect sofa and dining table
detections = gd_detect(img_pth, "two-seat sofa, dining table")

sofa_det = None
table_det = None
for det in detections:
    label = det["label"].lower()
    if "sofa" in label:
        sofa_det = det
    elif "table" in label:
        table_det = det

if sofa_det is None or table_det is None:
    final_answer = vqa(img_pth, None, "If the 3D height of the two-seat sofa is 0.50 meters, what is the 3D height of the dining table in meters?")
    return

# Step 2: Compute pseudo-3D height of the sofa
sx1, sy1, sx2, sy2 = sofa_det["bbox"]
sofa_height_2d = float(sy2 - sy1)
sofa_depth = depth(img_pth, sofa_det["bbox"])
sofa_pseudo = sofa_height_2d * sofa_depth

# Step 3: Compute pseudo-3D height of the dining table
tx1, ty1, tx2, ty2 = table_det["bbox"]
table_height_2d = float(ty2 - ty1)
table_depth = depth(img_pth, table_det["bbox"])
table_pseudo = table_height_2d * table_depth

# Step 4: Convert to real-world meters using the known sofa height
scale = 0.50 / sofa_pseudo
final_answer = table_pseudo * scale''',
)

TV_SOFA_CLOSER = GoldenProgram(
    name="tv_sofa_closer",
    question="What is closer to the camera: the tv or the sofa?",
    plan="""1. Detect "tv, sofa" and pick each object by label.
2. If one is missing, answer with the other one and return.
3. Query the depth of both boxes.
4. Answer "tv" when its depth is smaller, otherwise "sofa".""",
    code='''# Step 1: Detect the TV and sofa
detections = gd_detect(img_pth, "tv, sofa")

sofa_det = None
tv_det = None
for det in detections:
    label = det["label"].lower()
    if "sofa" in label:
        sofa_det = det
    elif "tv" in label:
        tv_det = det

# Step 2: Check detections
if tv_det is None:
    final_answer = "sofa"
    return
if sofa_det is None:
    final_answer = "tv"
    return

tv_bbox = tv_det["bbox"]
sofa_bbox = sofa_det["bbox"]

# Step 3: Query depths
tv_depth = depth(img_pth, tv_bbox)
sofa_depth = depth(img_pth, sofa_bbox)

# Step 4: Compare depths (smaller = closer)
if tv_depth < sofa_depth:
    final_answer = "tv"
else:
    final_answer = "sofa"''',
)

PLACEMAT_PLANT_RATIO = GoldenProgram(
    name="placemat_plant_ratio",
    question="What is the number of placemats divided by the number of plants?",
    plan="""1. Detect "placemat" and "plant" separately.
2. Fall back to whole-image vqa and return if either list is empty.
3. Divide the placemat count by the plant count and store it in final_answer.""",
    code='''# Step 1: Detect all placemats
placemat_dets = gd_detect(img_pth, "placemat")

# Step 2: Detect all plants
plant_dets = gd_detect(img_pth, "plant")

# Step 3: Check detections
if len(placemat_dets) == 0 or len(plant_dets) == 0:
    final_answer = vqa(img_pth, None, "What is the number of placemats divided by the number of plants?")
    return

# Step 4: Count placemats
num_placemats = len(placemat_dets)

# Step 5: Count plants
num_plants = len(plant_dets)

# Step 6: Compute the ratio
final_answer = num_placemats / num_plants''',
)

WASHER_CHAIR_CLOSER = GoldenProgram(
    name="washer_chair_closer",
    question=(
        "Which object is closer to the camera: the washing machine or the rightmost chair? "
        "Options: {washing machine, rightmost chair}"
    ),
    plan="""1. Detect "washing machine" and "chair" separately.
2. If one is missing, answer with the other option and return.
3. Take the chair whose box center x is largest as the rightmost chair.
4. Compare the two depths and answer with the closer option.""",
    code='''# Step 1: Detect the washing machine
wm_dets = gd_detect(img_pth, "washing machine")

# Step 2: Detect all chairs
chair_dets = gd_detect(img_pth, "chair")

# Step 3: Check detections
if len(wm_dets) == 0:
    final_answer = "rightmost chair"
    return
if len(chair_dets) == 0:
    final_answer = "washing machine"
    return

# Step 4: Identify the rightmost chair by max center x
def center_x(det):
    x1, y1, x2, y2 = det["bbox"]
    return (x1 + x2) / 2.0

rightmost_chair_det = max(chair_dets, key=center_x)
wm_det = wm_dets[0]

# Step 5: Query depths for both objects
wm_depth = depth(img_pth, wm_det["bbox"])
chair_depth = depth(img_pth, rightmost_chair_det["bbox"])

# Step 6 & 7: Compare depths (smaller = closer)
if wm_depth < chair_depth:
    final_answer = "washing machine"
else:
    final_answer = "rightmost chair"''',
)

BLUE_SHIRT_COUNT = GoldenProgram(
    name="blue_shirt_count",
    question="How many people are wearing blue shirts? Options: {0,1,3,2}.",
    plan="""1. Detect "person".
2. Fall back to whole-image vqa and return if nobody is found.
3. Ask vqa on each person box whether the shirt is blue and count the yes answers.
4. Fall back to whole-image vqa if the count is not an option, else store the count.""",
    code='''# Step 1: Detect the people
people_dets = gd_detect(img_pth, "person")

# Step 2: Check detections
if len(people_dets) == 0:
    final_answer = vqa(img_pth, None, "How many people are wearing blue shirts?")
    return

# Step 3: Initialize counter
counter = 0

# Step 4 & 5
for person in people_dets:
    person_box = person["bbox"]
    blue_shirt_check = vqa(img_pth, person_box, "Is this person wearing a blue shirt?")
    if "yes" in blue_shirt_check.lower():
        counter += 1

# Step 6
if counter not in [0,1,3,2]:
    final_answer = vqa(img_pth, None, "How many people are wearing blue shirts?")
    return

# Step 7
final_answer = counter''',
)

GOLDEN_PROGRAMS: tuple[GoldenProgram, ...] = (
    SOFA_TABLE_HEIGHT,
    TV_SOFA_CLOSER,
    PLACEMAT_PLANT_RATIO,
    WASHER_CHAIR_CLOSER,
    BLUE_SHIRT_COUNT,
)


def icl_examples(programs: tuple[GoldenProgram, ...] = GOLDEN_PROGRAMS) -> str:
    """Few-shot block for the program-generation prompt."""
    blocks = []
    for i, p in enumerate(programs, start=1):
        blocks.append(f"Question {i}: {p.question}\nSolution {i}: {p.raw_output()}")
    return "\n\n".join(blocks)
