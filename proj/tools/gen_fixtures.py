#!/usr/bin/env python3
"""Regenerate the files under fixtures/.

The reference accuracy grid and detection AP cells are entered by hand below. The suite stand-in
(manifests, predictions, config) is synthesized from fixed seeds, so running
this script twice produces identical bytes.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"

MODELS = [f"M{i}" for i in range(1, 11)]

# Test accuracy (%) by split tag, then shift 1..5, then M1..M10.
ACCURACY = {
    "80": [
        [71, 78, 70, 45, 78, 77, 70, 73, 48, 51],
        [70, 77, 68, 56, 81, 79, 73, 72, 42, 49],
        [71, 81, 71, 38, 79, 75, 66, 73, 56, 54],
        [75, 83, 76, 53, 81, 81, 73, 78, 53, 57],
        [67, 80, 69, 35, 78, 74, 69, 75, 41, 44],
    ],
    "50": [
        [72, 69, 70, 55, 73, 74, 63, 70, 47, 50],
        [77, 75, 74, 59, 76, 76, 70, 76, 46, 50],
        [73, 68, 70, 52, 71, 74, 59, 69, 43, 52],
        [75, 77, 76, 59, 77, 81, 71, 79, 48, 53],
        [67, 68, 66, 46, 69, 71, 59, 69, 37, 43],
    ],
    "20": [
        [67, 65, 62, 48, 73, 71, 56, 63, 48, 44],
        [70, 68, 65, 51, 77, 74, 68, 66, 53, 47],
        [67, 68, 64, 48, 68, 70, 44, 61, 43, 35],
        [74, 69, 67, 45, 77, 77, 58, 73, 50, 35],
        [61, 66, 64, 43, 67, 69, 50, 63, 35, 36],
    ],
    "t-RAIN": [
        [70, 68, 65, 55, 71, 74, 64, 66, 43, 42],
        [70, 71, 62, 61, 74, 76, 66, 71, 42, 38],
        [70, 69, 65, 50, 72, 72, 60, 64, 47, 43],
        [72, 73, 69, 56, 80, 78, 68, 67, 43, 38],
        [66, 67, 62, 50, 68, 70, 58, 63, 38, 39],
    ],
}

# FasterRCNN detection AP (%) with the printed aggregates of each row.
DAWN_CLASSES = ["car", "person", "bus", "truck", "mc", "bicycle"]
WEDGE_CLASSES = ["car", "person", "bus", "truck", "van"]
DETECTION = [
    ("coco", "FasterRCNN MobileNet Large 320",
     [37.56, 34.93, 20.90, 12.91, 23.15, 18.95], 26.57, 24.73,
     [34.10, 36.26, 39.35, 16.05, 0.00], 25.15),
    ("coco", "FasterRCNN MobileNet Large",
     [60.64, 55.96, 32.78, 23.66, 38.55, 28.75], 43.26, 40.05,
     [35.34, 39.52, 35.83, 25.43, 0.00], 27.22),
    ("coco", "FasterRCNN ResNet 50",
     [69.13, 70.31, 38.64, 30.54, 52.17, 30.56], 52.15, 48.55,
     [31.41, 33.54, 30.19, 18.75, 0.00], 22.78),
    ("wedge-finetuned", "FasterRCNN MobileNet Large 320",
     [39.52, 23.97, 7.81, 22.08, 0.00, 0.00], 23.34, 15.56,
     [40.40, 43.01, 49.88, 31.41, 10.19], 34.98),
    ("wedge-finetuned", "FasterRCNN MobileNet Large",
     [59.81, 34.61, 14.06, 30.67, 0.00, 0.00], 34.78, 23.19,
     [52.52, 54.79, 51.23, 50.01, 7.95], 43.30),
    ("wedge-finetuned", "FasterRCNN ResNet 50",
     [68.09, 54.29, 27.48, 35.02, 0.00, 0.00], 46.22, 30.81,
     [57.48, 54.71, 46.92, 57.43, 10.49], 45.41),
]

WEATHER = ["dust", "fog", "rain", "snow"]
SCENE_WORDS = ["highway", "street", "night", "dawn", "traffic", "bridge", "truck", "city"]
SUITE_MODELS = ["M1", "M2", "M3"]
SUITE_SPLITS = ["80", "50", "20", "t-RAIN"]


def dump_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8", newline="\n")


def dump_lines(path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")


def sample_line(obj):
    return json.dumps(obj, separators=(",", ":"))


def accuracy_grid():
    rows = []
    for tag, shifts in ACCURACY.items():
        for shift, accs in enumerate(shifts, start=1):
            for model, acc in zip(MODELS, accs):
                rows.append({"split": tag, "shift": shift, "model": model, "accuracy": acc / 100})
    dump_json(ROOT / "accuracy_grid.json", {"seed": 0, "config_hash": "", "rows": rows})


def detection_ap():
    rows = []
    for section, model, dawn, t4, dawn_map, wedge, wedge_map in DETECTION:
        rows.append({
            "section": section,
            "model": model,
            "dataset": "dawn",
            "ap": dict(zip(DAWN_CLASSES, dawn)),
            "printed": {"t4_ap": t4, "map": dawn_map},
        })
        rows.append({
            "section": section,
            "model": model,
            "dataset": "wedge",
            "ap": dict(zip(WEDGE_CLASSES, wedge)),
            "printed": {"map": wedge_map},
        })
    dump_json(ROOT / "detection_ap.json", {"rows": rows})


def suite():
    base = ROOT / "suite"
    real = []
    for split, per_class in (("train", 40), ("test", 40)):
        for cls in WEATHER:
            for k in range(per_class):
                real.append({"id": f"dawn_{split}_{cls}_{k:03d}", "class": cls, "split": split,
                             "source": "real"})
    dump_lines(base / "dawn_standin.jsonl", [sample_line(s) for s in real])

    rng = random.Random(20240601)
    synthetic = []
    for k in range(200):
        cls = WEATHER[k % len(WEATHER)]
        words = rng.sample(SCENE_WORDS, rng.randint(1, 3))
        # A fifth of the prompts mention a second weather word.
        if rng.random() < 0.2:
            words.append(rng.choice([w for w in WEATHER if w != cls]))
        synthetic.append({"id": f"wedge_{k:04d}", "class": cls, "split": "train",
                          "source": "synthetic", "prompt_keywords": [cls] + words})
    dump_lines(base / "wedge_standin.jsonl", [sample_line(s) for s in synthetic])

    tests = [s for s in real if s["split"] == "test"]
    skill = {"80": 0.80, "50": 0.72, "20": 0.64, "t-RAIN": 0.70}
    for tag in SUITE_SPLITS:
        for m, model in enumerate(SUITE_MODELS):
            r = random.Random(f"{tag}/{model}")
            p = skill[tag] - 0.05 * m
            lines = ["sample_id,predicted_class"]
            for s in tests:
                guess = s["class"] if r.random() < p else r.choice([w for w in WEATHER if w != s["class"]])
                lines.append(f"{s['id']},{guess}")
            dump_lines(base / "predictions" / f"{tag}_{model}.csv", lines)

    dump_json(base / "config.json", {
        "real_manifest": "dawn_standin.jsonl",
        "synthetic_manifest": "wedge_standin.jsonl",
        "oracle": {"eta": 60, "beta": 12, "dims": 64},
        "splits": SUITE_SPLITS,
        "models": SUITE_MODELS,
        "prediction_template": "predictions/{split}_{model}.csv",
        "shift_split": "test",
        "with_replacement": True,
        "output_dir": "out",
        "seed": 7,
        "compare": {"baseline": "20", "treated": "t-RAIN"},
    })


if __name__ == "__main__":
    accuracy_grid()
    detection_ap()
    suite()
