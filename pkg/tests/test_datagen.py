"""Synthetic shapes, partial views, dataset files, and pseudo text banks."""

import numpy as np
import pytest

from affordkit.datagen import (
    DEFAULT_LABELS,
    FAMILIES,
    ShapeSpec,
    gen_dataset,
    gen_shape,
    gen_textbank,
    partial_view_crop,
    read_dataset,
    resample_to_n,
    write_dataset,
)
from affordkit.errors import (
    ConfigError,
    DataGenError,
    DatasetFormatError,
    LabelError,
)


class TestShapes:
    def test_deterministic(self):
        spec = ShapeSpec(family="mug")
        a = gen_shape(spec, seed=7)
        b = gen_shape(spec, seed=7)
        np.testing.assert_array_equal(a.coords, b.coords)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_point_budget_and_finiteness(self):
        for family in FAMILIES:
            cloud = gen_shape(ShapeSpec(family=family, n_points=100), seed=1)
            assert cloud.n == 100
            assert np.all(np.isfinite(cloud.coords))
            assert np.abs(cloud.coords).max() < 10.0

    def test_each_family_mixes_labels(self):
        expected = {
            "mug": {"contain", "grasp"},
            "table": {"support", "wrap-grasp"},
            "bottle": {"contain", "pour"},
            "knife": {"cut", "grasp"},
        }
        for family, names in expected.items():
            cloud = gen_shape(ShapeSpec(family=family), seed=2)
            got = {DEFAULT_LABELS[i] for i in np.unique(cloud.labels)}
            assert got == names

    def test_label_set_must_cover_parts(self):
        with pytest.raises(DataGenError, match="grasp"):
            gen_shape(ShapeSpec(family="mug"), seed=0, label_set=("contain", "pour"))

    def test_restricted_label_set_reindexes(self):
        cloud = gen_shape(ShapeSpec(family="knife"), seed=3, label_set=("grasp", "cut"))
        assert set(np.unique(cloud.labels)) == {0, 1}

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            ShapeSpec(family="spoon")
        with pytest.raises(ConfigError):
            ShapeSpec(family="mug", n_points=4)
        with pytest.raises(ConfigError):
            ShapeSpec(family="mug", scale_range=(0.0, 1.0))
        with pytest.raises(ConfigError):
            ShapeSpec(family="mug", pose_range=(1.0, 0.5))

    def test_scale_range_controls_extent(self):
        small = gen_shape(ShapeSpec(family="table", scale_range=(0.1, 0.1)), seed=5)
        large = gen_shape(ShapeSpec(family="table", scale_range=(10.0, 10.0)), seed=5)
        np.testing.assert_allclose(large.coords, small.coords * 100.0, atol=1e-9)


class TestPartialView:
    def test_deterministic(self):
        cloud = gen_shape(ShapeSpec(family="mug"), seed=8)
        a = partial_view_crop(cloud, seed=9)
        b = partial_view_crop(cloud, seed=9)
        np.testing.assert_array_equal(a.coords, b.coords)

    def test_keeps_a_labeled_subset(self):
        cloud = gen_shape(ShapeSpec(family="bottle"), seed=10)
        crop = partial_view_crop(cloud, seed=11)
        assert 8 <= crop.n < cloud.n
        # every surviving (point, label) pair exists in the original
        original = {(tuple(c), l) for c, l in zip(cloud.coords, cloud.labels)}
        assert all((tuple(c), l) in original for c, l in zip(crop.coords, crop.labels))

    def test_keep_fraction_is_roughly_half(self):
        cloud = gen_shape(ShapeSpec(family="mug", n_points=200), seed=12)
        fractions = [
            partial_view_crop(cloud, seed=s).n / cloud.n for s in range(100)
        ]
        assert 0.35 < np.mean(fractions) < 0.65
        assert all(f >= 8 / cloud.n for f in fractions)

    def test_too_few_points_rejected(self):
        from affordkit.pointcloud import PointCloud

        with pytest.raises(DataGenError):
            partial_view_crop(PointCloud(np.zeros((1, 3))), seed=0)


class TestResample:
    def test_exact_size_is_identity(self):
        cloud = gen_shape(ShapeSpec(family="mug", n_points=64), seed=13)
        assert resample_to_n(cloud, 64, seed=0) is cloud

    def test_subsample_uses_only_original_points(self):
        cloud = gen_shape(ShapeSpec(family="mug", n_points=64), seed=14)
        small = resample_to_n(cloud, 40, seed=15)
        assert small.n == 40
        original = {tuple(c) for c in cloud.coords}
        assert all(tuple(c) in original for c in small.coords)

    def test_padding_keeps_all_originals_then_repeats(self):
        cloud = gen_shape(ShapeSpec(family="mug", n_points=32), seed=16)
        big = resample_to_n(cloud, 50, seed=17)
        assert big.n == 50
        np.testing.assert_array_equal(big.coords[:32], cloud.coords)
        original = {tuple(c) for c in cloud.coords}
        assert all(tuple(c) in original for c in big.coords[32:])

    def test_deterministic(self):
        cloud = gen_shape(ShapeSpec(family="mug", n_points=64), seed=18)
        a = resample_to_n(cloud, 40, seed=19)
        b = resample_to_n(cloud, 40, seed=19)
        np.testing.assert_array_equal(a.coords, b.coords)

    def test_bad_target_rejected(self):
        cloud = gen_shape(ShapeSpec(family="mug", n_points=32), seed=20)
        with pytest.raises(ConfigError):
            resample_to_n(cloud, 0, seed=0)


class TestGenDataset:
    def test_deterministic_and_cycles_families(self):
        a = gen_dataset(5, 64, seed=21)
        b = gen_dataset(5, 64, seed=21)
        for ca, cb in zip(a, b):
            np.testing.assert_array_equal(ca.coords, cb.coords)
            np.testing.assert_array_equal(ca.labels, cb.labels)
        assert len(a) == 5
        assert all(c.n == 64 for c in a)

    def test_partial_view_still_fixes_point_count(self):
        clouds = gen_dataset(4, 64, seed=22, partial_view=True)
        assert all(c.n == 64 for c in clouds)

    def test_protocols_differ(self):
        full = gen_dataset(2, 64, seed=23)
        part = gen_dataset(2, 64, seed=23, partial_view=True)
        assert not np.array_equal(full[0].coords, part[0].coords)

    def test_bad_count_rejected(self):
        with pytest.raises(ConfigError):
            gen_dataset(0, 64, seed=0)


class TestDatasetFiles:
    def test_round_trip(self, tmp_path):
        clouds = gen_dataset(3, 32, seed=24)
        write_dataset(clouds, str(tmp_path), seed=24)
        loaded, manifest = read_dataset(str(tmp_path))
        assert manifest["n_points"] == 32
        assert manifest["labels"] == list(DEFAULT_LABELS)
        assert manifest["seed"] == 24
        assert len(loaded) == 3
        for orig, got in zip(clouds, loaded):
            np.testing.assert_array_equal(got.coords, orig.coords.astype("<f4").astype(np.float64))
            np.testing.assert_array_equal(got.labels, orig.labels)

    def test_write_read_write_is_byte_identical(self, tmp_path):
        clouds = gen_dataset(2, 32, seed=25)
        d1, d2 = tmp_path / "one", tmp_path / "two"
        write_dataset(clouds, str(d1), seed=25)
        loaded, _ = read_dataset(str(d1))
        write_dataset(loaded, str(d2), seed=25)
        for name in sorted(p.name for p in d1.iterdir()):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_dataset(str(tmp_path))

    def test_missing_points_file(self, tmp_path):
        write_dataset(gen_dataset(2, 32, seed=26), str(tmp_path))
        (tmp_path / "points_1.bin").unlink()
        with pytest.raises(FileNotFoundError, match="points_1.bin"):
            read_dataset(str(tmp_path))

    def test_wrong_version(self, tmp_path):
        write_dataset(gen_dataset(1, 32, seed=27), str(tmp_path))
        manifest = (tmp_path / "manifest.json").read_text()
        (tmp_path / "manifest.json").write_text(manifest.replace('"version":1', '"version":2'))
        with pytest.raises(DatasetFormatError, match="version"):
            read_dataset(str(tmp_path))

    def test_truncated_points(self, tmp_path):
        write_dataset(gen_dataset(1, 32, seed=28), str(tmp_path))
        raw = (tmp_path / "points_0.bin").read_bytes()
        (tmp_path / "points_0.bin").write_bytes(raw[:-4])
        with pytest.raises(DatasetFormatError, match="expected"):
            read_dataset(str(tmp_path))

    def test_out_of_range_label_on_disk(self, tmp_path):
        write_dataset(gen_dataset(1, 32, seed=29), str(tmp_path))
        labels = np.fromfile(tmp_path / "labels_0.bin", dtype="<u2")
        labels[0] = 60000
        labels.tofile(tmp_path / "labels_0.bin")
        with pytest.raises(LabelError, match="60000"):
            read_dataset(str(tmp_path))

    def test_empty_write_rejected(self, tmp_path):
        with pytest.raises(DatasetFormatError):
            write_dataset([], str(tmp_path))

    def test_ragged_sizes_rejected(self, tmp_path):
        clouds = gen_dataset(1, 32, seed=30) + gen_dataset(1, 48, seed=30)
        with pytest.raises(DatasetFormatError, match="48"):
            write_dataset(clouds, str(tmp_path))


class TestTextBankGeneration:
    def test_deterministic_unit_rows(self):
        a = gen_textbank(DEFAULT_LABELS, 32, seed=31)
        b = gen_textbank(DEFAULT_LABELS, 32, seed=31)
        np.testing.assert_array_equal(a.embeddings, b.embeddings)
        assert a.normalized
        np.testing.assert_allclose(np.linalg.norm(a.embeddings, axis=1), np.ones(a.m), atol=1e-12)

    def test_label_row_depends_only_on_name_and_seed(self):
        a = gen_textbank(("grasp", "pour"), 16, seed=32)
        b = gen_textbank(("grasp", "cut"), 16, seed=32)
        np.testing.assert_array_equal(a.embeddings[0], b.embeddings[0])

    def test_independent_labels_are_nearly_orthogonal(self):
        bank = gen_textbank(DEFAULT_LABELS, 256, seed=33)
        gram = bank.embeddings @ bank.embeddings.T
        off = gram[~np.eye(bank.m, dtype=bool)]
        assert np.abs(off).max() < 0.35

    def test_synonym_group_rows_correlate(self):
        bank = gen_textbank(
            ("grasp", "hold", "cut"), 32, seed=34, synonym_groups=[["grasp", "hold"]]
        )
        gram = bank.embeddings @ bank.embeddings.T
        assert gram[0, 1] >= 0.9  # within the group
        assert abs(gram[0, 2]) < 0.9  # across groups

    def test_group_keyed_by_foreign_name_tracks_that_base(self):
        # an evaluation bank of synonyms anchored to another bank's label
        train_bank = gen_textbank(("grasp", "cut"), 32, seed=35)
        eval_bank = gen_textbank(
            ("grab", "slice"),
            32,
            seed=35,
            synonym_groups=[["grasp", "grab"], ["cut", "slice"]],
        )
        assert float(train_bank.embeddings[0] @ eval_bank.embeddings[0]) >= 0.9
        assert float(train_bank.embeddings[1] @ eval_bank.embeddings[1]) >= 0.9

    def test_group_without_bank_member_rejected(self):
        with pytest.raises(ConfigError, match="no member"):
            gen_textbank(("grasp",), 16, seed=0, synonym_groups=[["pour", "fill"]])

    def test_duplicate_group_membership_rejected(self):
        with pytest.raises(ConfigError, match="two synonym groups"):
            gen_textbank(
                ("a", "b"), 16, seed=0, synonym_groups=[["a", "b"], ["c", "b"]]
            )

    def test_tiny_dimension_rejected(self):
        with pytest.raises(ConfigError):
            gen_textbank(("a",), 1, seed=0)
