import copy
import json

import numpy as np
import pytest
from conftest import suite_by_name

from shapegrasp.bench.evaluate import (
    evaluate,
    label_matches,
    parse_range,
    sweep_thresholds,
)
from shapegrasp.bench.synth import SyntheticObjectSpec, generate, load_suite
from shapegrasp.errors import ConfigError, SpecOverlapError
from shapegrasp.reasoner.backends import load_rulebook

FIRST_FIVE = ["hammer", "mug", "screwdriver", "knife", "sunglasses"]


def two_rects(junction):
    d = {
        "name": "blocks",
        "parts": [
            {"label": "a", "primitive": {"kind": "rect", "length": 60, "width": 20}, "pose": {"x": 100, "y": 100}, "color": [255, 0, 0]},
            {"label": "b", "primitive": {"kind": "rect", "length": 60, "width": 20}, "pose": {"x": 150, "y": 100}, "color": [0, 0, 255]},
        ],
        "tasks": [],
        "image": [240, 200],
    }
    if junction:
        d["junctions"] = [["a", "b"]]
    return SyntheticObjectSpec.from_dict(d)


def test_generate_is_deterministic():
    spec = suite_by_name()["wine bottle"]
    a, _ = generate(spec, 7)
    b, _ = generate(spec, 7)
    assert np.array_equal(a.depth, b.depth) and np.array_equal(a.confidence, b.confidence)
    c, _ = generate(spec, 8)
    assert not np.array_equal(a.depth, c.depth)


def test_noise_free_confidence_is_full():
    scene, _ = generate(suite_by_name()["hammer"], 0)
    assert (scene.confidence == 1).all()


def test_overlap_needs_declared_junction():
    with pytest.raises(SpecOverlapError):
        generate(two_rects(False))
    scene, gt = generate(two_rects(True))
    assert not (gt.part_masks["a"] & gt.part_masks["b"]).any()


def test_mask_is_union_of_parts():
    scene, gt = generate(suite_by_name()["hammer"])
    union = np.zeros_like(scene.mask)
    for m in gt.part_masks.values():
        union |= m
    assert np.array_equal(union, scene.mask)
    assert gt.part_masks["head"].sum() == 100 * 40  # earlier parts keep the shared pixels


def test_duplicate_labels_rejected():
    d = json.loads(json.dumps({"name": "x", "parts": [two_rects(True).parts[0].__dict__] * 2}, default=list))
    with pytest.raises(ConfigError):
        SyntheticObjectSpec.from_dict(d)


def test_label_synonyms():
    spec = suite_by_name()["hammer"]
    assert label_matches("Grip", "handle", spec)
    assert label_matches("hammer_head", "head", spec)
    assert not label_matches("handle", "head", spec)
    assert not label_matches(None, "head", spec)


def test_parse_range():
    g = parse_range("0.01:0.35:0.025")
    assert len(g) == 14 and g[0] == 0.01 and g[-1] == pytest.approx(0.335)
    with pytest.raises(ConfigError):
        parse_range("0.3:0.1:0.05")
    with pytest.raises(ConfigError):
        parse_range("abc")


@pytest.mark.parametrize("name", ["screwdriver", "sunglasses", "mug"])
def test_sweep_is_monotone(name):
    rows = sweep_thresholds(suite_by_name()[name], parse_range("0.01:0.35:0.05"))
    n2 = [r[1] for r in rows]
    n3 = [r[2] for r in rows]
    assert n2 == sorted(n2, reverse=True)
    assert n3 == sorted(n3, reverse=True)


def test_one_wrong_rule_in_ten_cases():
    suite = [suite_by_name()[n] for n in FIRST_FIVE]
    assert sum(len(s.tasks) for s in suite) == 10
    book = copy.deepcopy(load_rulebook())
    book["objects"]["hammer"]["tasks"]["hand it over"]["scores"] = {"head": 0.1, "handle": 0.9}
    rep = evaluate(suite, rulebook=book)
    assert rep.part_selection == pytest.approx(0.9)
    wrong = [r for r in rep.records if not r.correct]
    assert [(r.object, r.task) for r in wrong] == [("hammer", "hand it over")]


def test_parallel_matches_serial():
    suite = [suite_by_name()[n] for n in ("hammer", "knife")]
    a = evaluate(suite, workers=1).to_json()
    b = evaluate(suite, workers=2).to_json()
    assert a == b


def test_report_table_lists_every_case():
    suite = [suite_by_name()["mug"]]
    rep = evaluate(suite)
    table = rep.table()
    assert table.count("mug") == 2
    assert "part selection" in table


def test_empty_suite_rejected():
    with pytest.raises(ConfigError):
        evaluate([])


def test_packaged_suite_loads():
    suite = load_suite()
    assert len(suite) == 12
    assert sum(len(s.tasks) for s in suite) == 22
