import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binpick.maskio import instance_records
from binpick.scenegen import SceneConfig, generate, generate_many, perturb_scores, scene_seeds


def recount_ok(scene):
    labels = scene.labelmap.labels
    for rec in scene.instances:
        vs, us = np.nonzero(labels == rec.id)
        if rec.area != len(us) or rec.centroid != (int(us.sum()) / len(us), int(vs.sum()) / len(vs)):
            return False
    return True


def test_determinism():
    cfg = SceneConfig(seed=42)
    a, b = generate(cfg), generate(cfg)
    assert a.labelmap == b.labelmap
    assert a.instances == b.instances
    assert a.labelmap.labels.tobytes() == b.labelmap.labels.tobytes()


def test_stable_across_releases():
    # frozen fingerprint of one scene; changes here break reproducibility of stored datasets
    import hashlib

    scene = generate(SceneConfig(seed=7))
    assert len(scene.instances) == 19
    assert int(np.count_nonzero(scene.labelmap.labels)) == 4356
    digest = hashlib.sha256(scene.labelmap.labels.tobytes()).hexdigest()
    assert digest == "2440f904cbffff0b1fd9466da830c67834479b59df5f3f4dd4947d35ccf64154"


def test_single_object():
    for seed in range(20):
        scene = generate(SceneConfig(n_objects=(1, 1), seed=seed))
        assert scene.labelmap.ids == [1]


def test_config_validation():
    with pytest.raises(ValueError):
        SceneConfig(n_objects=(0, 3))
    with pytest.raises(ValueError):
        SceneConfig(n_objects=(4, 3))
    with pytest.raises(ValueError):
        SceneConfig(shape_kinds=("triangle",))
    with pytest.raises(ValueError):
        SceneConfig(width=20, height=20, bin_margin=10)


def test_config_document_round_trip():
    cfg = SceneConfig(width=64, n_objects=(2, 5), shape_kinds=("ellipse",), seed=3)
    assert SceneConfig.from_dict(cfg.to_dict()) == cfg


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    lo=st.integers(1, 8),
    extra=st.integers(0, 8),
    margin=st.integers(0, 15),
    kinds=st.sets(st.sampled_from(["rectangle", "ellipse", "capsule"]), min_size=1),
)
def test_generator_contract(seed, lo, extra, margin, kinds):
    cfg = SceneConfig(width=72, height=64, n_objects=(lo, lo + extra), shape_kinds=tuple(sorted(kinds)),
                      size_range=(4, 16), seed=seed, bin_margin=margin)
    scene = generate(cfg)
    n = len(scene.instances)
    assert lo <= n <= lo + extra
    assert scene.labelmap.ids == list(range(1, n + 1))
    assert recount_ok(scene)
    assert list(scene.instances) == instance_records(scene.labelmap)
    labels = scene.labelmap.labels
    inner = np.zeros_like(labels, dtype=bool)
    inner[margin : 64 - margin, margin : 72 - margin] = True
    assert not labels[~inner].any()
    assert set(scene.labelmap.scores.values()) <= {1.0}


def test_perturb_zero_noise_is_identity():
    scene = generate(SceneConfig(seed=1))
    pred = perturb_scores(scene, 0.0, 99)
    assert np.array_equal(pred.labels, scene.labelmap.labels)
    assert set(pred.scores.values()) == {1.0}


def test_perturb_deterministic_and_bounded():
    scene = generate(SceneConfig(seed=5))
    a = perturb_scores(scene, 0.7, 3)
    b = perturb_scores(scene, 0.7, 3)
    assert a == b
    assert all(0.3 <= s <= 1.0 for s in a.scores.values())
    assert a.ids == scene.labelmap.ids
    changed = a.labels != scene.labelmap.labels
    # one-pixel morphology only touches pixels next to an instance boundary
    from scipy import ndimage

    gt = scene.labelmap.labels
    boundary = ndimage.binary_dilation(gt > 0) & ~ndimage.binary_erosion(gt > 0) | (ndimage.maximum_filter(gt, 3) != ndimage.minimum_filter(gt, 3))
    assert not (changed & ~boundary).any()
    with pytest.raises(ValueError):
        perturb_scores(scene, 1.5, 0)


def test_scene_seeds():
    s = scene_seeds(11, 5)
    assert s == scene_seeds(11, 5)
    assert len(set(s)) == 5
    assert all(0 <= x < 2**64 for x in s)
    many = generate_many(SceneConfig(width=40, height=40, size_range=(4, 9), bin_margin=2), 3, 11)
    assert [seed for seed, _ in many] == s[:3]
