#!/usr/bin/env python3
# Copyright (C) 2026 obbkit contributors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates data/fixtures. Seeded, so the output is stable."""

import json
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent / "fixtures"
NUM_CLASSES = 15


def wrap(theta):
    t = math.fmod(theta + math.pi / 2, math.pi)
    if t < 0:
        t += math.pi
    return t - math.pi / 2


def write_lines(name, rows):
    with open(OUT / name, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, separators=(",", ":")) + "\n")


def shift_for_iou(side, iou):
    # Two equal squares offset along x overlap with IoU (s-d)/(s+d).
    return side * (1 - iou) / (1 + iou)


def obj(box, cls=0, difficult=False):
    return {"box": box, "class": cls, "difficult": difficult}


def three_anchor():
    anchors = [[shift_for_iou(10, r), 0, 10, 10, 0] for r in (0.3, 0.5, 0.65)]
    write_lines("three_anchor_dump.jsonl", [{
        "schema_version": 1, "image_id": "three", "anchors": anchors, "regressed": anchors,
        "targets": [obj([0, 0, 10, 10, 0])], "scores": [0.1, 0.2, 0.9]}])
    write_lines("fallback_dump.jsonl", [{
        "schema_version": 1, "image_id": "fallback", "anchors": anchors[:2],
        "regressed": anchors[:2], "targets": [obj([0, 0, 10, 10, 0])]}])


def four_positive():
    anchors, regressed, targets = [], [], []
    for t in range(4):
        box = [100.0 * t, 0, 20, 20, 0]
        targets.append(obj(box))
        anchors.append(box)
        drift = shift_for_iou(20, 0.4) if t == 3 else 0.0
        regressed.append([box[0] + drift, 0, 20, 20, 0])
    anchors.append([50, 500, 20, 20, 0])
    regressed.append([50, 500, 20, 20, 0])
    write_lines("four_positive_dump.jsonl", [{
        "schema_version": 1, "image_id": "four", "anchors": anchors, "regressed": regressed,
        "targets": targets}])


def single_tp():
    write_lines("single_tp_annotations.jsonl", [{
        "schema_version": 1, "image_id": "one", "width": 100, "height": 100,
        "objects": [obj([50, 50, 20, 10, 0.3])]}])
    write_lines("single_tp_detections.jsonl", [{
        "schema_version": 1, "image_id": "one",
        "detections": [{"box": [50.5, 50, 20, 10, 0.3], "class": 0, "score": 0.9}]}])


def tp_fp_tp():
    write_lines("tp_fp_tp_annotations.jsonl", [{
        "schema_version": 1, "image_id": "pr", "width": 400, "height": 400,
        "objects": [obj([50, 50, 20, 20, 0]), obj([200, 200, 20, 20, 0])]}])
    write_lines("tp_fp_tp_detections.jsonl", [{
        "schema_version": 1, "image_id": "pr", "detections": [
            {"box": [50, 50, 20, 20, 0], "class": 0, "score": 0.9},
            {"box": [350, 350, 20, 20, 0], "class": 0, "score": 0.8},
            {"box": [200, 200, 20, 20, 0], "class": 0, "score": 0.7}]}])


def boxes():
    (OUT / "boxes_a.txt").write_text("# cx cy w h theta\n0 0 1 1 0\n10 10 4 2 0.5\n")
    (OUT / "boxes_b.txt").write_text(f"0 0 1 1 {math.pi / 4!r}\n10 10 4 2 0.5\n100 100 1 1 0\n")


def random_box(rng, extent, lo, hi):
    return [rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(lo, hi), rng.uniform(lo, hi),
            rng.uniform(-math.pi / 2, math.pi / 2)]


def jitter(rng, box, reach):
    return [box[0] + rng.uniform(-reach, reach), box[1] + rng.uniform(-reach, reach),
            box[2] * rng.uniform(0.8, 1.25), box[3] * rng.uniform(0.8, 1.25),
            wrap(box[4] + rng.uniform(-0.2, 0.2))]


def sample_suite(rng):
    dump, annotations, detections = [], [], []
    for i in range(8):
        image_id = f"sample{i:02d}"
        targets = [obj(random_box(rng, 600, 12, 90), rng.randrange(NUM_CLASSES), rng.random() < 0.1)
                   for _ in range(rng.randint(1, 8))]
        anchors, regressed, scores = [], [], []
        for _ in range(rng.randint(150, 250)):
            near = rng.random() < 0.4
            base = jitter(rng, rng.choice(targets)["box"], 15) if near else random_box(rng, 600, 12, 90)
            anchor = [base[0], base[1], base[2], base[3], 0.0 if rng.random() < 0.5 else base[4]]
            anchors.append(anchor)
            regressed.append(jitter(rng, anchor, 6))
            scores.append([round(rng.random(), 6) for _ in range(NUM_CLASSES)])
        dump.append({"schema_version": 1, "image_id": image_id, "anchors": anchors,
                     "regressed": regressed, "targets": targets, "scores": scores})
        annotations.append({"schema_version": 1, "image_id": image_id, "width": 600, "height": 600,
                            "objects": targets})
        dets = []
        for t in targets:
            for _ in range(rng.randint(0, 3)):
                dets.append({"box": jitter(rng, t["box"], 8), "class": t["class"],
                             "score": round(rng.random(), 4)})
        for _ in range(rng.randint(0, 6)):
            dets.append({"box": random_box(rng, 600, 12, 90), "class": rng.randrange(NUM_CLASSES),
                         "score": round(rng.random(), 4)})
        detections.append({"schema_version": 1, "image_id": image_id, "detections": dets})
    write_lines("sample_dump.jsonl", dump)
    write_lines("sample_annotations.jsonl", annotations)
    write_lines("sample_detections.jsonl", detections)


def dota_text():
    lines = ["imagesource:GoogleEarth", "gsd:0.5",
             "100 100 200 100 200 150 100 150 ship 0",
             "850 850 950 850 950 950 850 950 plane 0",
             "790 400 810 400 810 420 790 420 small-vehicle 1",
             "400 700 460 760 400 820 340 760 storage-tank 0"]
    (OUT / "sample_dota.txt").write_text("\n".join(lines) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20261018)
    three_anchor()
    four_positive()
    single_tp()
    tp_fp_tp()
    boxes()
    sample_suite(rng)
    dota_text()


if __name__ == "__main__":
    main()
