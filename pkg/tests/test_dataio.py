import numpy as np
import pytest

from flowelm import dataio, elm
from flowelm.dataio import CsvSchema, ModelArtifact, SyntheticSpec
from flowelm.elm import Activation, ElmParams
from flowelm.errors import (
    DataError,
    IntegrityError,
    ParseError,
    SchemaError,
    UnsupportedVersionError,
)
from flowelm.preprocess import FeatureSelection, FlowDataset, ScalerState


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_three_row_labeled_example(self, tmp_path):
        path = write(
            tmp_path,
            "f1,f2,Label\n1,2,Benign\n3,4,DDoS-SYN Flood\n5,6,Benign\n",
        )
        ds = dataio.load_csv(path)
        assert list(ds.labels) == [0, 1, 0]
        assert ds.feature_names == ("f1", "f2")
        assert np.array_equal(ds.features, [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        assert ds.categories == ("Benign", "DDoS-SYN Flood", "Benign")

    def test_unparseable_cell_becomes_missing(self, tmp_path):
        path = write(tmp_path, "f1,f2,Label\nabc,2,Benign\n3,4,DoS-TCP Flood\n")
        ds = dataio.load_csv(path)
        assert np.isnan(ds.features[0, 0])
        assert ds.features[1, 0] == 3.0

    def test_empty_cell_becomes_missing(self, tmp_path):
        path = write(tmp_path, "f1,f2,Label\n,2,Benign\n3,4,Benign\n")
        assert np.isnan(dataio.load_csv(path).features[0, 0])

    def test_round_trip_reproduces_values(self, tmp_path):
        rs = np.random.RandomState(0)
        labels = rs.randint(0, 2, 7)
        original = FlowDataset(
            features=rs.randn(7, 3) * 1e3,
            labels=labels,
            feature_names=("a", "b", "c"),
            categories=tuple("Recon" if l else "Benign" for l in labels),
        )
        path = tmp_path / "roundtrip.csv"
        dataio.write_csv(original, path)
        loaded = dataio.load_csv(path)
        assert np.abs(loaded.features - original.features).max() == 0.0
        assert np.array_equal(loaded.labels, original.labels)
        assert loaded.categories == original.categories

    def test_categorical_column_one_hot_expanded(self, tmp_path):
        path = write(
            tmp_path,
            "rate,proto,Label\n1.5,TCP,Benign\n2.5,UDP,DoS-UDP Flood\n3.5,TCP,Benign\n",
        )
        ds = dataio.load_csv(path)
        assert ds.feature_names == ("rate", "proto=TCP", "proto=UDP")
        assert np.array_equal(ds.features[:, 1], [1.0, 0.0, 1.0])
        assert np.array_equal(ds.features[:, 2], [0.0, 1.0, 0.0])

    def test_missing_label_column(self, tmp_path):
        path = write(tmp_path, "f1,f2\n1,2\n")
        with pytest.raises(SchemaError, match="Label"):
            dataio.load_csv(path)

    def test_zero_data_rows(self, tmp_path):
        path = write(tmp_path, "f1,Label\n")
        with pytest.raises(DataError, match="no data rows"):
            dataio.load_csv(path)

    def test_ragged_row_reports_line(self, tmp_path):
        path = write(tmp_path, "f1,f2,Label\n1,2,Benign\n3,Benign\n")
        with pytest.raises(ParseError, match=":3:"):
            dataio.load_csv(path)

    def test_excluded_columns_skipped(self, tmp_path):
        path = write(tmp_path, "id,f1,Label\n99,1,Benign\n98,2,DoS-SYN Flood\n")
        schema = CsvSchema(exclude_columns=("id",))
        ds = dataio.load_csv(path, schema)
        assert ds.feature_names == ("f1",)

    def test_custom_schema(self, tmp_path):
        path = write(tmp_path, "f1;class\n1;normal\n2;bad\n")
        schema = CsvSchema(label_column="class", benign_value="normal", delimiter=";")
        ds = dataio.load_csv(path, schema)
        assert list(ds.labels) == [0, 1]

    def test_total_over_wellformed_csvs(self, tmp_path):
        # fuzz: random mixtures of numbers, junk, and blanks never crash
        rs = np.random.RandomState(1)
        cells = ["1.5", "-2e3", "junk", "", "0", "nanobot"]
        for trial in range(10):
            rows = [
                ",".join(rs.choice(cells, 3)) + "," + rs.choice(["Benign", "DoS-SYN Flood"])
                for _ in range(5)
            ]
            path = write(tmp_path, "a,b,c,Label\n" + "\n".join(rows) + "\n", f"fuzz{trial}.csv")
            ds = dataio.load_csv(path)
            assert ds.n_samples == 5


def make_artifact(seed=3):
    rs = np.random.RandomState(seed)
    x = rs.randn(40, 3)
    y = (x[:, 0] > 0).astype(int)
    model = elm.fit(x, y, ElmParams(hidden_nodes=10, activation=Activation.TANH, seed=seed))
    return ModelArtifact(
        model=model,
        selection=FeatureSelection(kept_indices=(0, 2, 3), correlations=np.array([0.5, 0.01, 0.4, -0.3])),
        scaler=ScalerState(means=rs.randn(3), stds=np.abs(rs.randn(3)) + 0.5),
        schema=CsvSchema(),
        feature_names=("a", "b", "c", "d"),
        seed=seed,
        fingerprint="ab" * 32,
        source="unit-test",
    )


class TestModelArtifact:
    def test_round_trip_scores_bit_exact(self, tmp_path):
        artifact = make_artifact()
        path = tmp_path / "m.flowelm"
        dataio.save_model(artifact, path)
        loaded = dataio.load_model(path)
        rs = np.random.RandomState(9)
        probe = rs.randn(100, 3)
        before = elm.score(artifact.model, probe)
        after = elm.score(loaded.model, probe)
        assert np.abs(before - after).max() == 0.0
        assert loaded.feature_names == artifact.feature_names
        assert loaded.selection.kept_indices == artifact.selection.kept_indices
        assert np.array_equal(loaded.scaler.means, artifact.scaler.means)
        assert loaded.seed == artifact.seed

    def test_save_is_deterministic(self, tmp_path):
        artifact = make_artifact()
        p1, p2 = tmp_path / "m1", tmp_path / "m2"
        dataio.save_model(artifact, p1)
        dataio.save_model(artifact, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_file_rejected(self, tmp_path):
        artifact = make_artifact()
        path = tmp_path / "m.flowelm"
        dataio.save_model(artifact, path)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(IntegrityError):
            dataio.load_model(path)

    def test_inconsistent_width_rejected(self, tmp_path):
        artifact = make_artifact()
        path = tmp_path / "m.flowelm"
        dataio.save_model(artifact, path)
        # claim 11 hidden nodes; the stored output-weight rows no longer match
        text = path.read_text().replace("elm.hidden_nodes=10", "elm.hidden_nodes=11")
        path.write_text(text)
        with pytest.raises(IntegrityError):
            dataio.load_model(path)

    def test_version_mismatch_rejected(self, tmp_path):
        artifact = make_artifact()
        path = tmp_path / "m.flowelm"
        dataio.save_model(artifact, path)
        text = path.read_text().replace("flowelm-model v1", "flowelm-model v2")
        path.write_text(text)
        with pytest.raises(UnsupportedVersionError):
            dataio.load_model(path)

    def test_not_a_model_file(self, tmp_path):
        path = write(tmp_path, "hello world\n", "junk.txt")
        with pytest.raises(IntegrityError):
            dataio.load_model(path)

    def test_artifact_validation_catches_scaler_width(self):
        artifact = make_artifact()
        with pytest.raises(IntegrityError):
            ModelArtifact(
                model=artifact.model,
                selection=artifact.selection,
                scaler=ScalerState(means=np.zeros(2), stds=np.ones(2)),
                schema=artifact.schema,
                feature_names=artifact.feature_names,
                seed=0,
            )


class TestFingerprint:
    def test_deterministic_and_content_sensitive(self):
        ds1 = FlowDataset(features=np.ones((2, 2)), labels=[0, 1], feature_names=("a", "b"))
        ds2 = FlowDataset(features=np.ones((2, 2)), labels=[0, 1], feature_names=("a", "b"))
        ds3 = FlowDataset(features=np.zeros((2, 2)), labels=[0, 1], feature_names=("a", "b"))
        assert dataio.fingerprint(ds1) == dataio.fingerprint(ds2)
        assert dataio.fingerprint(ds1) != dataio.fingerprint(ds3)


class TestSynthetic:
    def test_deterministic(self):
        spec = SyntheticSpec(n_benign=100, n_attack=100, seed=7)
        a = dataio.generate_synthetic(spec)
        b = dataio.generate_synthetic(spec)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)
        assert a.categories == b.categories

    def test_request_rate_separation_at_least_three_pooled_sigma(self):
        ds = dataio.generate_synthetic(SyntheticSpec())
        rate = ds.features[:, list(ds.feature_names).index("conn_request_rate")]
        benign = rate[ds.labels == 0]
        attack = rate[ds.labels == 1]
        assert attack.mean() > benign.mean()
        pooled = np.sqrt((benign.var() + attack.var()) / 2.0)
        assert (attack.mean() - benign.mean()) / pooled >= 3.0

    def test_all_recon_mix_tags_every_attack_row(self):
        mix = {"Recon": 1.0}
        ds = dataio.generate_synthetic(SyntheticSpec(n_benign=5, n_attack=20, attack_mix=mix, seed=1))
        attack_categories = {c for c, l in zip(ds.categories, ds.labels) if l == 1}
        assert attack_categories == {"Recon"}
        assert "Recon" in ds.source

    def test_invalid_weights_rejected(self):
        with pytest.raises(DataError):
            SyntheticSpec(attack_mix={"Recon": 0.5})  # does not sum to 1
        with pytest.raises(DataError):
            SyntheticSpec(attack_mix={"Recon": 1.5, "DoS": -0.5})
        with pytest.raises(DataError):
            SyntheticSpec(attack_mix={"Recon": 0.5, "Martians": 0.5})

    def test_single_class_generation_allowed(self):
        ds = dataio.generate_synthetic(SyntheticSpec(n_benign=0, n_attack=10, seed=2))
        assert ds.n_samples == 10
        assert ds.labels.all()

    def test_mix_counts_follow_weights(self):
        mix = {"DDoS": 0.5, "Recon": 0.5}
        ds = dataio.generate_synthetic(SyntheticSpec(n_benign=0, n_attack=10, attack_mix=mix, seed=3))
        counts = {c: ds.categories.count(c) for c in ("DDoS", "Recon")}
        assert counts == {"DDoS": 5, "Recon": 5}

    def test_extra_features_are_noise_columns(self):
        ds = dataio.generate_synthetic(SyntheticSpec(n_benign=10, n_attack=10, n_features=14, seed=4))
        assert ds.n_features == 14
        assert ds.feature_names[-1] == "noise_1"

    def test_feature_truncation_keeps_request_rate_first(self):
        ds = dataio.generate_synthetic(SyntheticSpec(n_benign=5, n_attack=5, n_features=2, seed=5))
        assert ds.feature_names[0] == "conn_request_rate"
