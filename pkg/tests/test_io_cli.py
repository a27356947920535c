import json
from pathlib import Path

import numpy as np
import pytest

from relgeo.cli import main
from relgeo.io_formats import (ConfigError, EmbeddingFormatError, config_hash,
                               format_real, load_config, read_csv_columns,
                               read_embedding, read_labels, write_csv,
                               write_embedding, write_labels)
from relgeo.numerics import RngStream


class TestEmbeddingFile:
    def test_round_trip_bit_identical(self, tmp_path, rng):
        matrix = rng.generator().standard_normal((13, 7))
        path = tmp_path / "m.rgem"
        write_embedding(path, matrix)
        assert np.array_equal(read_embedding(path), matrix)

    def test_crc_detects_corruption(self, tmp_path, rng):
        path = tmp_path / "m.rgem"
        write_embedding(path, rng.generator().standard_normal((4, 4)))
        blob = bytearray(path.read_bytes())
        blob[40] ^= 0xFF  # flip payload bits
        path.write_bytes(bytes(blob))
        with pytest.raises(EmbeddingFormatError, match="CRC"):
            read_embedding(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.rgem"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(EmbeddingFormatError, match="magic"):
            read_embedding(path)

    def test_truncation_detected(self, tmp_path, rng):
        path = tmp_path / "m.rgem"
        write_embedding(path, rng.generator().standard_normal((4, 4)))
        path.write_bytes(path.read_bytes()[:-9])
        with pytest.raises(EmbeddingFormatError):
            read_embedding(path)

    def test_dims_validated(self, tmp_path, rng):
        path = tmp_path / "m.rgem"
        write_embedding(path, rng.generator().standard_normal((2, 3)))
        blob = bytearray(path.read_bytes())
        blob[8] = 99  # claim far more rows than the payload carries
        path.write_bytes(bytes(blob))
        with pytest.raises(EmbeddingFormatError, match="declared dims"):
            read_embedding(path)


class TestCsvAndLabels:
    def test_float_round_trip(self, tmp_path, rng):
        values = rng.generator().standard_normal(20)
        path = tmp_path / "vals.csv"
        write_csv(path, ["v"], [(float(v),) for v in values])
        back = np.array([float(s) for s in read_csv_columns(path)["v"]])
        assert np.array_equal(back, values)

    def test_format_real_shortest_exact(self):
        assert float(format_real(np.pi)) == np.pi
        assert float(format_real(0.1)) == 0.1

    def test_labels_round_trip(self, tmp_path):
        labels = np.array([3, 1, 4, 1, 5], dtype=np.int64)
        path = tmp_path / "labels.csv"
        write_labels(path, labels)
        assert np.array_equal(read_labels(path), labels)


class TestConfig:
    def write_config(self, tmp_path, doc):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    def test_minimal_config(self, tmp_path):
        cfg = load_config(self.write_config(tmp_path, {"seed": 7}))
        assert cfg.seed == 7
        assert cfg.base_dir == tmp_path

    def test_unknown_top_level_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(self.write_config(tmp_path, {"seed": 1, "typo_key": 2}))

    def test_unknown_section_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(self.write_config(tmp_path,
                                          {"seed": 1, "dataset": {"kindd": "x"}}))

    def test_missing_seed_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="seed"):
            load_config(self.write_config(tmp_path, {"dataset": {}}))

    def test_relative_path_resolution(self, tmp_path):
        cfg = load_config(self.write_config(tmp_path, {"seed": 1}))
        assert cfg.resolve("sub/file.rgem") == (tmp_path / "sub/file.rgem").resolve()

    def test_config_hash_stable(self):
        a = config_hash({"b": 1, "a": [1, 2]})
        b = config_hash({"a": [1, 2], "b": 1})
        assert a == b


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> train two small AEs via the CLI, shared across CLI tests."""
    root = tmp_path_factory.mktemp("cli_pipeline")
    config = {
        "seed": 4242,
        "dataset": {"kind": "gaussian_mixture", "n": 120, "ambient_dim": 8,
                    "latent_dim": 2, "noise": 0.01},
        "models": [
            {"name": "m1", "encoder": [[16, "tanh"], [2, "identity"]],
             "decoder": [[16, "tanh"], [8, "identity"]],
             "epochs": 40, "batch_size": 30, "learning_rate": 0.003},
            {"name": "m2", "encoder": [[16, "tanh"], [2, "identity"]],
             "decoder": [[16, "tanh"], [8, "identity"]],
             "epochs": 40, "batch_size": 30, "learning_rate": 0.003,
             "seed_offset": 1},
        ],
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    out = root / "out"
    assert main(["synth", "--config", str(cfg_path), "--out", str(out)]) == 0
    for index in (0, 1):
        assert main(["train-ae", "--config", str(cfg_path),
                     "--data", str(out / "data_x.rgem"),
                     "--model-index", str(index), "--out", str(out)]) == 0
    return cfg_path, out


class TestCliPipeline:
    def test_synth_outputs(self, pipeline):
        _, out = pipeline
        X = read_embedding(out / "data_x.rgem")
        assert X.shape == (120, 8)
        assert (out / "labels.csv").exists()
        manifest = json.loads((out / "synth_manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert "created_utc" in manifest

    def test_train_outputs_and_loss_decreases(self, pipeline):
        _, out = pipeline
        for name in ("m1", "m2"):
            columns = read_csv_columns(out / f"{name}_loss.csv")
            losses = [float(v) for v in columns["loss"]]
            assert losses[-1] <= losses[0]
            assert read_embedding(out / f"{name}_latents.rgem").shape == (120, 2)

    def test_relrep_and_retrieve_identical_latents(self, pipeline):
        _, out = pipeline
        rc = main(["retrieve",
                   "--latents1", str(out / "m1_latents.rgem"),
                   "--latents2", str(out / "m1_latents.rgem"),
                   "--mode", "geo-length",
                   "--decoder1", str(out / "m1_decoder.json"),
                   "--decoder2", str(out / "m1_decoder.json"),
                   "--anchors", "8", "--seed", "5",
                   "--out", str(out / "self_retrieve")])
        assert rc == 0
        report = json.loads((out / "self_retrieve" / "retrieval.json").read_text())
        assert report["mrr"] == 1.0

    def test_relrep_emits_sidecar_and_determinism(self, pipeline):
        _, out = pipeline
        args = ["relrep", "--latents", str(out / "m1_latents.rgem"),
                "--mode", "geo-length",
                "--decoder", str(out / "m1_decoder.json"),
                "--anchors", "6", "--seed", "9"]
        assert main(args + ["--out", str(out / "r1")]) == 0
        assert main(args + ["--out", str(out / "r2")]) == 0
        bytes1 = (out / "r1" / "relrep.rgem").read_bytes()
        bytes2 = (out / "r2" / "relrep.rgem").read_bytes()
        assert bytes1 == bytes2
        meta = json.loads((out / "r1" / "relrep_meta.json").read_text())
        assert meta["mode"] == "geo-length"
        assert len(meta["anchor_indices"]) == 6
        csv1 = (out / "r1" / "relrep_anchors.csv").read_bytes()
        csv2 = (out / "r2" / "relrep_anchors.csv").read_bytes()
        assert csv1 == csv2

    def test_geodesic_compare(self, pipeline):
        _, out = pipeline
        rc = main(["geodesic-compare",
                   "--decoder", str(out / "m1_decoder.json"),
                   "--latents", str(out / "m1_latents.rgem"),
                   "--points", "12", "--steps", "8",
                   "--oracle-steps", "8", "--oracle-iters", "60",
                   "--out", str(out / "cmp")])
        assert rc == 0
        report = json.loads((out / "cmp" / "geodesic_compare.json").read_text())
        assert -1.0 <= report["spearman_rho"] <= 1.0
        approx = read_embedding(out / "cmp" / "approx_energies.rgem")
        oracle = read_embedding(out / "cmp" / "oracle_energies.rgem")
        assert approx.shape == oracle.shape == (12, 12)
        assert np.all(oracle <= approx + 1e-9)

    def test_geodesic_compare_threads_match_serial(self, pipeline):
        _, out = pipeline
        base = ["geodesic-compare",
                "--decoder", str(out / "m1_decoder.json"),
                "--latents", str(out / "m1_latents.rgem"),
                "--points", "8", "--steps", "4",
                "--oracle-steps", "6", "--oracle-iters", "30"]
        assert main(base + ["--out", str(out / "serial")]) == 0
        assert main(base + ["--out", str(out / "threaded"), "--threads", "3"]) == 0
        a = (out / "serial" / "oracle_energies.rgem").read_bytes()
        b = (out / "threaded" / "oracle_energies.rgem").read_bytes()
        assert a == b

    def test_align_and_stitch(self, pipeline):
        _, out = pipeline
        for index, name in ((0, "m1"), (1, "m2")):
            assert main(["relrep", "--latents", str(out / f"{name}_latents.rgem"),
                         "--mode", "geo-length",
                         "--decoder", str(out / f"{name}_decoder.json"),
                         "--anchors", "10", "--seed", "77",
                         "--name", f"rel_{name}",
                         "--out", str(out)]) == 0
        rc = main(["align", "--source", str(out / "m1_latents.rgem"),
                   "--target", str(out / "m2_latents.rgem"),
                   "--relrep1", str(out / "rel_m1.rgem"),
                   "--relrep2", str(out / "rel_m2.rgem"),
                   "--kind", "linear", "--out", str(out / "aligned")])
        assert rc == 0
        assert (out / "aligned" / "map.json").exists()
        assert (out / "aligned" / "correspondence.csv").exists()
        rc = main(["stitch", "--encoder", str(out / "m1_encoder.json"),
                   "--map", str(out / "aligned" / "map.json"),
                   "--decoder", str(out / "m2_decoder.json"),
                   "--data", str(out / "data_x.rgem"),
                   "--out", str(out / "stitched")])
        assert rc == 0
        report = json.loads((out / "stitched" / "stitch.json").read_text())
        assert report["mse_vs_reference"] >= 0.0
        assert read_embedding(out / "stitched" / "stitched.rgem").shape == (120, 8)

    def test_anchor_sweep(self, pipeline):
        _, out = pipeline
        args = ["anchor-sweep",
                "--latents1", str(out / "m1_latents.rgem"),
                "--latents2", str(out / "m2_latents.rgem"),
                "--decoder1", str(out / "m1_decoder.json"),
                "--decoder2", str(out / "m2_decoder.json"),
                "--k-list", "4,8", "--repeats", "3", "--seed", "31"]
        assert main(args + ["--out", str(out / "sweep")]) == 0
        summary = read_csv_columns(out / "sweep" / "sweep_summary.csv")
        assert summary["k"] == ["4", "8"]
        rows = read_csv_columns(out / "sweep" / "sweep.csv")
        assert len(rows["k"]) == 6  # 2 k values x 3 repeats
        for column in ("mean_relgeo", "std_relgeo", "mean_cosine", "std_cosine"):
            assert all(np.isfinite(float(v)) for v in summary[column])
        # Identical seed and inputs reproduce the result files byte for byte.
        assert main(args + ["--out", str(out / "sweep_again")]) == 0
        assert (out / "sweep" / "sweep.csv").read_bytes() == \
            (out / "sweep_again" / "sweep.csv").read_bytes()
        assert (out / "sweep" / "sweep_summary.csv").read_bytes() == \
            (out / "sweep_again" / "sweep_summary.csv").read_bytes()

    def test_align_min_score_filter(self, pipeline):
        _, out = pipeline
        base = ["align", "--source", str(out / "m1_latents.rgem"),
                "--target", str(out / "m2_latents.rgem"),
                "--relrep1", str(out / "rel_m1.rgem"),
                "--relrep2", str(out / "rel_m2.rgem"),
                "--kind", "linear"]
        assert main(base + ["--min-score", "-1.0",
                            "--out", str(out / "aligned_all")]) == 0
        report = json.loads((out / "aligned_all" / "align.json").read_text())
        assert report["matched_rows"] == 120
        assert main(base + ["--min-score", "0.999999",
                            "--out", str(out / "aligned_few")]) == 0
        report = json.loads((out / "aligned_few" / "align.json").read_text())
        assert report["matched_rows"] < 120

    def test_diet_training_command(self, pipeline):
        cfg_path, out = pipeline
        config = json.loads(cfg_path.read_text())
        config["models"].append({
            "name": "diet1", "encoder": [], "decoder": [],
            "head": [[16, "tanh"]], "epochs": 30, "batch_size": 30,
            "learning_rate": 0.005,
        })
        diet_cfg = cfg_path.parent / "diet_config.json"
        diet_cfg.write_text(json.dumps(config), encoding="utf-8")
        rc = main(["train-diet", "--config", str(diet_cfg),
                   "--embeddings", str(out / "m1_latents.rgem"),
                   "--labels", str(out / "labels.csv"),
                   "--model-index", "2", "--out", str(out)])
        assert rc == 0
        doc = json.loads((out / "diet1.json").read_text())
        assert doc["num_instances"] == 10
        assert doc["train_accuracy"] > 0.5


class TestCliErrors:
    def test_missing_input_exit_2(self, tmp_path):
        rc = main(["retrieve", "--latents1", str(tmp_path / "nope.rgem"),
                   "--latents2", str(tmp_path / "nope.rgem"),
                   "--out", str(tmp_path)])
        assert rc == 2

    def test_corrupt_file_exit_3(self, tmp_path, rng):
        bad = tmp_path / "bad.rgem"
        write_embedding(bad, rng.generator().standard_normal((3, 3)))
        blob = bytearray(bad.read_bytes())
        blob[30] ^= 0xFF
        bad.write_bytes(bytes(blob))
        rc = main(["retrieve", "--latents1", str(bad), "--latents2", str(bad),
                   "--out", str(tmp_path)])
        assert rc == 3

    def test_bad_config_exit_3(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 1, "bogus": True}), encoding="utf-8")
        rc = main(["synth", "--config", str(cfg), "--out", str(tmp_path)])
        assert rc == 3
