import math
import os
import pathlib

import pytest

import shiftbench as sb

FIXTURES = pathlib.Path(os.environ.get("SHIFTBENCH_FIXTURES", pathlib.Path(__file__).parents[2] / "fixtures"))


def real_manifest(per_class=5):
    lines = []
    for split in ("train", "test"):
        for cls in ("dust", "fog", "rain", "snow"):
            for k in range(per_class):
                lines.append(f'{{"id":"{split}_{cls}_{k}","class":"{cls}","split":"{split}","source":"real"}}')
    return sb.parse_manifest("\n".join(lines) + "\n", "real")


def test_manifest_round_trip(tmp_path):
    m = real_manifest()
    assert len(m) == 40
    assert m.classes == ["dust", "fog", "rain", "snow"]
    sb.save_manifest(m, tmp_path / "m.jsonl")
    back = sb.load_manifest(tmp_path / "m.jsonl")
    assert back.name == "m"
    assert back.samples == m.samples
    assert back.to_jsonl() == m.to_jsonl()
    assert sb.label_distribution(m, "train") == {"dust": 5, "fog": 5, "rain": 5, "snow": 5}


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(sb.ValidationError):
        sb.parse_manifest('{"id":"a","class":"rain","split":"val","source":"real"}')
    with pytest.raises(sb.IoError):
        sb.load_manifest(tmp_path / "missing.jsonl")
    assert issubclass(sb.CoverageError, sb.ShiftbenchError)


def test_shift_boosts_named_class_and_resamples():
    base = {"dust": 40, "fog": 40, "rain": 40, "snow": 40}
    scenario = sb.make_scenario("rain", 2.0, (1.0, 1.0), (0, 0))
    assert sb.make_shift(scenario, base, 17) == {"dust": 40, "fog": 40, "rain": 80, "snow": 40}
    assert [s.name for s in sb.standard_scenarios()] == ["none", "rain", "fog", "snow", "dust"]
    out = sb.resample(real_manifest(), {"rain": 8, "fog": 2}, seed=3, with_replacement=True)
    test = [s for s in out.samples if s["split"] == "test"]
    assert sorted(s["class"] for s in test).count("rain") == 8
    assert len(test) == 10


def test_similarity_kernel():
    v = sb.keyword_embed(["Rain", "road"], 32)
    assert len(v) == 32
    assert math.isclose(sum(x * x for x in v), 1.0)
    assert math.isclose(sb.cosine_similarity(v, v), 1.0)
    assert sb.cosine_similarity([1.0, 0.0], [0.0, 2.0]) == 0.0
    with pytest.raises(sb.ValidationError):
        sb.cosine_similarity([0.0, 0.0], [1.0, 0.0])


def test_oracle_and_t_rain():
    synthetic = sb.load_manifest(FIXTURES / "suite" / "wedge_standin.jsonl")
    picks = sb.oracle("rain", synthetic, eta=len(synthetic), beta=5, dims=64)
    assert len(picks) == 5
    scores = [s for _, s in picks]
    assert scores == sorted(scores, reverse=True)
    augmented, report = sb.t_rain(real_manifest(), synthetic, eta=60, beta=4, dims=64, seed=7, iterations=10)
    assert len(augmented) > 40
    assert report["iterations"] == 10


def test_metrics():
    r = sb.classification_report(["rain", "fog", "rain"], ["rain", "rain", "rain"], ["fog", "rain"])
    assert math.isclose(r["accuracy"], 2 / 3)
    assert r["per_class"]["fog"]["recall"] == 0.0
    gts = [("i", "person", 0, 0, 10, 10), ("i", "person", 20, 20, 30, 30)]
    dets = [("i", "person", 0, 0, 10, 10, 0.9), ("i", "person", 50, 50, 60, 60, 0.8),
            ("i", "person", 20, 20, 30, 30, 0.7)]
    assert math.isclose(sb.average_precision(dets, gts, "person"), 0.8333333333333333)


def test_compare_table_fixture():
    deltas = sb.compare_grid(FIXTURES / "accuracy_grid.json")
    assert [d["delta_pp"] for d in deltas["deltas"]] == ["2.1", "-0.8", "4.4", "1.9", "2.7"]


def test_run_suite_is_deterministic(tmp_path):
    config = FIXTURES / "suite" / "config.json"
    first = sb.run_suite(config, tmp_path / "a")
    second = sb.run_suite(config, tmp_path / "b")
    assert first == second
    assert len(first["rows"]) == 60
    assert (tmp_path / "a" / "grid.csv").read_bytes() == (tmp_path / "b" / "grid.csv").read_bytes()
