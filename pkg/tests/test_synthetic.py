import math

import numpy as np
import pytest

from camscore.errors import SchemaError
from camscore.synthetic import (
    FEATURE_DIM,
    PALETTE,
    PERTURBATION_KINDS,
    SHAPES,
    SceneObject,
    SceneSpec,
    class_embedding,
    load_scene,
    perturb_scene,
    random_scene,
    render_scene,
    save_scene,
    scene_from_dict,
    scene_to_dict,
)
from camscore.types import BoundingBox


def _obj(shape="square", color=(0.85, 0.13, 0.11), box=None, depth=1.0) -> SceneObject:
    return SceneObject(
        shape=shape, color=color, box=box or BoundingBox(0.2, 0.2, 0.6, 0.6), depth=depth
    )


class TestClassEmbedding:
    def test_deterministic(self):
        a = class_embedding("circle", (0.85, 0.13, 0.11))
        b = class_embedding("circle", (0.85, 0.13, 0.11))
        np.testing.assert_array_equal(a.values, b.values)

    def test_shape_and_sparsity(self):
        e = class_embedding("triangle", PALETTE["blue"])
        assert e.dim == FEATURE_DIM
        assert np.count_nonzero(e.values) == 8
        assert np.all(e.values >= 0.0)

    def test_distinct_classes_distinct_embeddings(self):
        seen = set()
        for s in SHAPES:
            for c in PALETTE.values():
                seen.add(tuple(class_embedding(s, c).values))
        assert len(seen) == len(SHAPES) * len(PALETTE)

    def test_nearby_colors_quantize_together(self):
        # color coordinates are quantized to 8 levels per channel
        a = class_embedding("circle", (0.500, 0.2, 0.2))
        b = class_embedding("circle", (0.501, 0.2, 0.2))
        np.testing.assert_array_equal(a.values, b.values)


class TestRandomScene:
    def test_object_count_and_distinctness(self):
        for seed in range(40):
            spec = random_scene(seed)
            assert 2 <= len(spec.objects) <= 5
            combos = {(o.shape, o.color) for o in spec.objects}
            assert len(combos) == len(spec.objects)

    def test_boxes_inside_frame(self):
        for seed in range(40):
            for o in random_scene(seed).objects:
                assert 0.0 <= o.box.x1 < o.box.x2 <= 1.0
                assert 0.0 <= o.box.y1 < o.box.y2 <= 1.0

    def test_depths_positive(self):
        for seed in range(20):
            assert all(o.depth > 0 for o in random_scene(seed).objects)

    def test_bad_count_range(self):
        with pytest.raises(ValueError):
            random_scene(0, min_objects=0)
        with pytest.raises(ValueError):
            random_scene(0, min_objects=5, max_objects=99)


class TestRenderScene:
    def test_deterministic_bytes(self):
        spec = random_scene(7)
        a = render_scene(spec)
        b = render_scene(spec)
        np.testing.assert_array_equal(a.image.data, b.image.data)
        np.testing.assert_array_equal(a.depth.data, b.depth.data)
        np.testing.assert_array_equal(a.global_feature.values, b.global_feature.values)

    def test_bundle_shape_and_source(self):
        spec = random_scene(3, canvas=(48, 32))
        bundle = render_scene(spec)
        assert (bundle.image.height, bundle.image.width) == (32, 48)
        assert bundle.source == "synthetic"
        assert int(bundle.meta["object_count"]) == len(spec.objects)
        assert "scene_seed" in bundle.meta

    def test_detections_in_scene_order(self):
        spec = random_scene(11)
        bundle = render_scene(spec)
        assert len(bundle.detections) == len(spec.objects)
        for det, obj in zip(bundle.detections, spec.objects):
            assert det.box == obj.box
            np.testing.assert_array_equal(
                det.feature.values, class_embedding(obj.shape, obj.color).values
            )

    def test_global_feature_is_scene_plus_objects(self):
        spec = random_scene(5)
        bundle = render_scene(spec)
        expected = class_embedding("scene", spec.background).values.copy()
        for o in spec.objects:
            expected = expected + class_embedding(o.shape, o.color).values
        np.testing.assert_allclose(bundle.global_feature.values, expected, atol=1e-12)

    def test_painter_order_near_wins(self):
        # same box, different depths: the nearer object's color shows
        box = BoundingBox(0.2, 0.2, 0.8, 0.8)
        near = _obj(shape="square", color=PALETTE["red"], box=box, depth=1.0)
        far = _obj(shape="square", color=PALETTE["blue"], box=box, depth=4.0)
        spec = SceneSpec(canvas=(32, 32), objects=(far, near), background=(0.1, 0.1, 0.1), seed=0)
        bundle = render_scene(spec)
        center = bundle.image.data[16, 16]
        np.testing.assert_allclose(center, PALETTE["red"], atol=1e-6)

    def test_depth_map_background_is_far(self):
        spec = random_scene(9)
        bundle = render_scene(spec)
        max_obj_depth = max(o.depth for o in spec.objects)
        assert bundle.depth.data.max() == pytest.approx(10.0 * max_obj_depth)

    def test_empty_scene(self):
        spec = SceneSpec(canvas=(16, 16), objects=(), background=(0.3, 0.3, 0.3), seed=0)
        bundle = render_scene(spec)
        assert bundle.detections == ()
        assert np.all(bundle.depth.data == 1.0)
        np.testing.assert_allclose(bundle.image.data, 0.3, atol=1e-6)

    def test_circle_inside_box_only(self):
        box = BoundingBox(0.25, 0.25, 0.75, 0.75)
        spec = SceneSpec(
            canvas=(64, 64),
            objects=(_obj(shape="circle", box=box, depth=1.0),),
            background=(0.0, 0.0, 0.0),
            seed=0,
        )
        img = render_scene(spec).image.data
        assert np.all(img[:14, :, :] == 0.0)  # above the box: untouched
        assert img[32, 32, 0] > 0.5  # center: painted


class TestPerturbScene:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown perturbation"):
            perturb_scene(random_scene(0), "blur", seed=1)

    def test_deterministic(self):
        spec = random_scene(21)
        for kind in PERTURBATION_KINDS:
            a = perturb_scene(spec, kind, seed=5)
            b = perturb_scene(spec, kind, seed=5)
            assert a == b

    def test_drop_removes_one(self):
        spec = random_scene(2)
        out = perturb_scene(spec, "drop_object", seed=0)
        assert len(out.objects) == len(spec.objects) - 1
        assert set(out.objects) <= set(spec.objects)

    def test_add_appends_unused_class(self):
        spec = random_scene(2)
        out = perturb_scene(spec, "add_object", seed=0)
        assert len(out.objects) == len(spec.objects) + 1
        new = out.objects[-1]
        assert (new.shape, new.color) not in {(o.shape, o.color) for o in spec.objects}

    def test_move_displaces_at_least_point_two(self):
        for seed in range(20):
            spec = random_scene(seed)
            out = perturb_scene(spec, "move_object", seed=seed + 100)
            moved = [
                (a, b) for a, b in zip(spec.objects, out.objects) if a.box != b.box
            ]
            assert len(moved) == 1
            a, b = moved[0]
            dist = math.hypot(
                a.box.center[0] - b.box.center[0], a.box.center[1] - b.box.center[1]
            )
            assert dist >= 0.2
            assert a.box.width == pytest.approx(b.box.width, abs=1e-12)
            assert (a.shape, a.color, a.depth) == (b.shape, b.color, b.depth)

    def test_recolor_changes_one_color_only(self):
        spec = random_scene(4)
        out = perturb_scene(spec, "recolor", seed=3)
        changed = [
            (a, b) for a, b in zip(spec.objects, out.objects) if a.color != b.color
        ]
        assert len(changed) == 1
        a, b = changed[0]
        assert b.color in PALETTE.values()
        assert (a.shape, a.box, a.depth) == (b.shape, b.box, b.depth)

    def test_recolor_picks_farthest(self):
        # single red square: farthest palette entry by squared distance is cyan
        spec = SceneSpec(
            canvas=(32, 32),
            objects=(_obj(color=PALETTE["red"]),),
            background=(0.1, 0.1, 0.1),
            seed=0,
        )
        out = perturb_scene(spec, "recolor", seed=0)
        dists = {
            name: sum((a - b) ** 2 for a, b in zip(c, PALETTE["red"]))
            for name, c in PALETTE.items()
            if c != PALETTE["red"]
        }
        farthest = max(dists, key=dists.get)
        assert out.objects[0].color == PALETTE[farthest]

    def test_reorder_depth_swaps_two(self):
        spec = random_scene(6)
        out = perturb_scene(spec, "reorder_depth", seed=1)
        assert sorted(o.depth for o in spec.objects) == sorted(o.depth for o in out.objects)
        diffs = [a.depth != b.depth for a, b in zip(spec.objects, out.objects)]
        assert sum(diffs) == 2

    def test_preconditions(self):
        empty = SceneSpec(canvas=(16, 16), objects=(), background=(0.1, 0.1, 0.1), seed=0)
        for kind in ("drop_object", "move_object", "recolor"):
            with pytest.raises(ValueError):
                perturb_scene(empty, kind, seed=0)
        one = SceneSpec(canvas=(16, 16), objects=(_obj(),), background=(0.1, 0.1, 0.1), seed=0)
        with pytest.raises(ValueError, match="two objects"):
            perturb_scene(one, "reorder_depth", seed=0)


class TestSceneSerialization:
    def test_dict_roundtrip(self):
        spec = random_scene(33)
        again = scene_from_dict(scene_to_dict(spec))
        assert again == spec

    def test_file_roundtrip(self, tmp_path):
        spec = random_scene(34)
        p = tmp_path / "s.scene.json"
        save_scene(spec, p)
        assert load_scene(p) == spec

    def test_bad_dict(self):
        with pytest.raises(SchemaError):
            scene_from_dict({"canvas": [16, 16]})

    def test_bad_object_entry(self):
        doc = scene_to_dict(random_scene(1))
        doc["objects"][0]["shape"] = "hexagon"
        with pytest.raises(SchemaError):
            scene_from_dict(doc)


class TestSceneSpecValidation:
    def test_canvas_minimum(self):
        with pytest.raises(ValueError):
            SceneSpec(canvas=(4, 64), objects=(), background=(0.1, 0.1, 0.1), seed=0)

    def test_color_range(self):
        with pytest.raises(ValueError):
            _obj(color=(1.5, 0.0, 0.0))

    def test_depth_positive(self):
        with pytest.raises(ValueError):
            _obj(depth=0.0)

    def test_shape_known(self):
        with pytest.raises(ValueError):
            _obj(shape="star")
