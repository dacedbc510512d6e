import numpy as np
import pytest

from logcoral.data import (
    DatasetPair,
    ShiftSpec,
    generate,
    load_csv,
    make_benchmark_spec,
    random_rotation,
    save_csv,
)
from logcoral.exceptions import InvalidInput, ParseError
from logcoral.stats import FeatureBatch, batch_covariance, batch_mean


def spec_with(**overrides):
    base = make_benchmark_spec(num_classes=3, dim=4, samples_per_class=50, seed=1)
    fields = dict(num_classes=base.num_classes, dim=base.dim, class_means=base.class_means,
                  class_cov=base.class_cov, rotation=base.rotation, scale=base.scale,
                  translation=base.translation, samples_per_class=base.samples_per_class,
                  seed=base.seed)
    fields.update(overrides)
    return ShiftSpec(**fields)


class TestShiftSpec:
    def test_rejects_non_orthogonal_rotation(self):
        with pytest.raises(InvalidInput):
            spec_with(rotation=np.eye(4) * 2.0)

    def test_rejects_negative_scale(self):
        with pytest.raises(InvalidInput):
            spec_with(scale=np.array([1.0, -1.0, 1.0, 1.0]))

    def test_random_rotation_is_orthogonal(self):
        rng = np.random.default_rng(0)
        for strength in (0.0, 0.5, 2.0):
            q = random_rotation(8, rng, strength=strength)
            assert np.linalg.norm(q.T @ q - np.eye(8)) <= 1e-8


class TestGenerate:
    def test_deterministic_per_seed(self):
        spec = make_benchmark_spec(seed=42, samples_per_class=20)
        a, b = generate(spec), generate(spec)
        assert np.array_equal(a.source.data, b.source.data)
        assert np.array_equal(a.target.data, b.target.data)
        assert np.array_equal(a.source.labels, b.source.labels)

    def test_identity_transform_matches_statistics(self):
        d = 6
        spec = spec_with(dim=d, num_classes=3, samples_per_class=4000,
                         class_means=np.zeros((3, d)), class_cov=np.eye(d),
                         rotation=np.eye(d), scale=np.ones(d), translation=np.zeros(d))
        pair = generate(spec)
        gap = np.linalg.norm(batch_covariance(pair.source).data - batch_covariance(pair.target).data)
        assert gap <= 4.0 / np.sqrt(pair.source.n) * d

    def test_pure_translation_shifts_mean(self):
        d = 4
        t = np.array([3.0, -1.0, 0.5, 2.0])
        spec = spec_with(rotation=np.eye(d), scale=np.ones(d), translation=t,
                         samples_per_class=4000)
        pair = generate(spec)
        observed = batch_mean(pair.target) - batch_mean(pair.source)
        # 3 sigma of a mean over n samples with unit-ish variance
        n = pair.source.n
        assert np.max(np.abs(observed - t)) <= 3.0 * 3.0 / np.sqrt(n)

    def test_pure_scaling_scales_covariance(self):
        d = 4
        s = np.array([0.5, 1.0, 2.0, 3.0])
        spec = spec_with(rotation=np.eye(d), scale=s, translation=np.zeros(d),
                         class_means=np.zeros((3, d)), class_cov=np.diag([1.0, 2.0, 0.5, 1.5]),
                         samples_per_class=10000)
        pair = generate(spec)
        expected = np.diag(s) @ batch_covariance(pair.source).data @ np.diag(s)
        got = batch_covariance(pair.target).data
        assert np.linalg.norm(got - expected) / np.linalg.norm(expected) <= 0.05

    def test_target_statistics_converge_to_transformed(self):
        spec = make_benchmark_spec(num_classes=3, dim=5, samples_per_class=3400, seed=7)
        pair = generate(spec)
        a = np.diag(spec.scale) @ spec.rotation
        src_cov = batch_covariance(pair.source).data
        expected = a @ src_cov @ a.T
        got = batch_covariance(pair.target).data
        assert np.linalg.norm(got - expected) / np.linalg.norm(expected) <= 0.05


class TestCsv:
    def test_basic_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        batch = FeatureBatch(rng.standard_normal((17, 5)), labels=rng.integers(0, 4, size=17))
        path = tmp_path / "feat.csv"
        save_csv(path, batch, header="features")
        back = load_csv(path, has_labels=True)
        assert np.array_equal(back.data, batch.data)
        assert np.array_equal(back.labels, batch.labels)

    def test_unlabeled_load(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("1.0,2.0,3.0\n4.0,5.0,6.0\n")
        batch = load_csv(path)
        assert batch.n == 2 and batch.d == 3
        assert batch.labels is None

    def test_label_column(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("1.0,2.0,0\n3.0,4.0,1\n")
        batch = load_csv(path, has_labels=True)
        assert np.array_equal(batch.labels, [0, 1])
        assert batch.d == 2

    def test_crlf_and_comments(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_bytes(b"# header\r\n1.0,2.0\r\n3.0,4.0\r\n")
        batch = load_csv(path)
        assert batch.n == 2

    def test_ragged_rows_report_line(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.line == 2

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("1.0,2.0\n3.0,abc\n")
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.line == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(tmp_path / "nope.csv")


class TestDatasetPair:
    def test_requires_labels_on_both(self):
        x = np.zeros((4, 2))
        with pytest.raises(InvalidInput):
            DatasetPair(source=FeatureBatch(x, labels=[0, 0, 1, 1]), target=FeatureBatch(x))

    def test_requires_matching_dims(self):
        with pytest.raises(InvalidInput):
            DatasetPair(source=FeatureBatch(np.zeros((2, 2)), labels=[0, 1]),
                        target=FeatureBatch(np.zeros((2, 3)), labels=[0, 1]))
