"""End-to-end tests of the command-line interface, exercised through
`main(argv)` with small synthetic inputs."""

import json

import numpy as np
import pytest

from taanseg import features as feat_mod
from taanseg.bootstrap import read_frame_labels
from taanseg.cli import main
from taanseg.cnn import cnn_init
from taanseg.features import StyleFeatureSeq
from taanseg.modelio import load_model, save_model
from taanseg.segmentation import read_timeline
from taanseg.synth import ConcertScript, SectionSpec, script_to_json


@pytest.fixture(scope="module")
def small_concert(tmp_path_factory):
    """A 100 s concert rendered through the CLI, with truth artifacts."""
    root = tmp_path_factory.mktemp("concert")
    script = ConcertScript(
        sections=[
            SectionSpec("instrumental", 15.0),
            SectionSpec("taan", 30.0, f0_hz=220.0, mod_rate_hz=6.0),
            SectionSpec("steady-vocal", 25.0, f0_hz=196.0),
            SectionSpec("taan", 30.0, f0_hz=247.0, mod_rate_hz=7.0),
        ],
        seed=5,
    )
    script_path = root / "script.json"
    script_to_json(script, script_path)
    wav = root / "concert.wav"
    timeline = root / "truth.tsv"
    labels = root / "labels.tsv"
    rc = main(["synth", "--script", str(script_path), "--out-wav", str(wav),
               "--out-timeline", str(timeline), "--out-labels", str(labels)])
    assert rc == 0
    return {"root": root, "script": script_path, "wav": wav,
            "timeline": timeline, "labels": labels}


@pytest.fixture(scope="module")
def track_csv(small_concert):
    out = small_concert["root"] / "track.csv"
    assert main(["tracks", "--audio", str(small_concert["wav"]),
                 "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def features_csv(small_concert, track_csv):
    out = small_concert["root"] / "features.csv"
    assert main(["features", "--track", str(track_csv),
                 "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def mlp_model(small_concert, features_csv, tmp_path_factory):
    root = tmp_path_factory.mktemp("mlp")
    cfg = root / "cfg.json"
    cfg.write_text('{"mlp_epochs": 60, "mlp_hidden": 20}')
    out = root / "model.tseg"
    rc = main(["--config", str(cfg), "train-mlp",
               "--features", str(features_csv),
               "--labels", str(small_concert["labels"]),
               "--out", str(out)])
    assert rc == 0
    return out


class TestSynth:
    def test_outputs_exist(self, small_concert):
        assert small_concert["wav"].stat().st_size > 44
        tl = read_timeline(small_concert["timeline"])
        assert [s.label for s in tl] == [
            "instrumental", "taan", "non-taan", "taan"]
        _, labels = read_frame_labels(small_concert["labels"])
        assert len(labels) == 100

    def test_deterministic_output(self, small_concert, tmp_path):
        wav2 = tmp_path / "again.wav"
        rc = main(["synth", "--script", str(small_concert["script"]),
                   "--out-wav", str(wav2)])
        assert rc == 0
        assert wav2.read_bytes() == small_concert["wav"].read_bytes()

    def test_seed_override_changes_audio(self, small_concert, tmp_path):
        wav2 = tmp_path / "other.wav"
        rc = main(["synth", "--script", str(small_concert["script"]),
                   "--seed", "9", "--out-wav", str(wav2)])
        assert rc == 0
        assert wav2.read_bytes() != small_concert["wav"].read_bytes()


class TestTracksAndFeatures:
    def test_track_columns(self, track_csv):
        header = track_csv.read_text().splitlines()[0]
        assert header == "time_s,f0_hz,energy_db,voiced"

    def test_features_readable(self, features_csv):
        seq = feat_mod.read_features(features_csv)
        assert seq.features.shape[1] == 3
        assert seq.vocal_mask.any()

    def test_features_needs_one_source(self, features_csv, tmp_path):
        rc = main(["features", "--out", str(tmp_path / "x.csv")])
        assert rc == 1


class TestTrainAndClassify:
    def test_model_saved(self, mlp_model):
        model = load_model(mlp_model)
        assert model.w1.shape == (3, 20)

    def test_classify_writes_posteriors(self, mlp_model, features_csv,
                                        tmp_path):
        out = tmp_path / "post.csv"
        rc = main(["classify", "--model", str(mlp_model),
                   "--features", str(features_csv), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "frame_s,p_taan,vocal"
        vals = [ln.split(",") for ln in lines[1:]]
        finite = [float(v[1]) for v in vals if v[1] != "nan"]
        assert finite and all(0.0 <= p <= 1.0 for p in finite)

    def test_segment_end_to_end(self, small_concert, mlp_model, tmp_path):
        out = tmp_path / "detected.tsv"
        rc = main(["segment", "--audio", str(small_concert["wav"]),
                   "--model", str(mlp_model), "--out", str(out)])
        assert rc == 0
        tl = read_timeline(out)
        assert len(tl) >= 1
        assert tl.span()[0] == 0.0

    def test_unpaired_training_args(self, features_csv, small_concert,
                                    tmp_path):
        rc = main(["train-mlp", "--features", str(features_csv),
                   "--labels", str(small_concert["labels"]),
                   "--labels", str(small_concert["labels"]),
                   "--out", str(tmp_path / "m.tseg")])
        assert rc == 1


class TestEvaluate:
    def test_identical_timelines(self, small_concert, capsys):
        rc = main(["evaluate", "--detected", str(small_concert["timeline"]),
                   "--truth", str(small_concert["timeline"]), "--json"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["exact"] == 2
        assert report["missed"] == 0 and report["false_alarm"] == 0

    def test_table_output(self, small_concert, capsys):
        rc = main(["evaluate", "--detected", str(small_concert["timeline"]),
                   "--truth", str(small_concert["timeline"])])
        assert rc == 0
        out = capsys.readouterr().out
        assert "Exact detection" in out


class TestInspectCnn:
    def test_channel_map_exports(self, small_concert, tmp_path):
        model_path = tmp_path / "cnn.tseg"
        save_model(cnn_init(seed=0), model_path)
        csv_path = tmp_path / "map.csv"
        pgm_path = tmp_path / "map.pgm"
        rc = main(["inspect-cnn", "--model", str(model_path),
                   "--audio", str(small_concert["wav"]),
                   "--second", "1", "--channel", "4",
                   "--out-csv", str(csv_path), "--out-pgm", str(pgm_path)])
        assert rc == 0
        cmap = np.loadtxt(csv_path, delimiter=",")
        assert cmap.shape == (21, 10)
        assert pgm_path.read_bytes().startswith(b"P5\n10 21\n255\n")

    def test_second_out_of_range(self, small_concert, tmp_path):
        model_path = tmp_path / "cnn.tseg"
        save_model(cnn_init(seed=0), model_path)
        rc = main(["inspect-cnn", "--model", str(model_path),
                   "--audio", str(small_concert["wav"]),
                   "--second", "5000"])
        assert rc == 1

    def test_mlp_model_rejected(self, small_concert, mlp_model, tmp_path):
        rc = main(["inspect-cnn", "--model", str(mlp_model),
                   "--audio", str(small_concert["wav"])])
        assert rc == 2


class TestBootstrapLabels:
    def test_recovers_clusters(self, tmp_path):
        rng = np.random.default_rng(0)
        n = 40
        feats = np.vstack([
            rng.normal(loc=[-1.5, -1.5, 0.0], scale=0.3, size=(n, 3)),
            rng.normal(loc=[1.5, 1.5, 0.0], scale=0.3, size=(n, 3)),
        ])
        seq = StyleFeatureSeq(features=feats,
                              vocal_mask=np.ones(2 * n, dtype=bool),
                              raw=feats.copy())
        feat_path = tmp_path / "features.csv"
        feat_mod.write_features(seq, feat_path)
        seed_path = tmp_path / "seed.tsv"
        seed_path.write_text(
            "0.0\tnon-taan\n1.0\tnon-taan\n40.0\ttaan\n41.0\ttaan\n")
        out = tmp_path / "labels.tsv"
        rc = main(["bootstrap-labels", "--features", str(feat_path),
                   "--seed-labels", str(seed_path), "--out", str(out)])
        assert rc == 0
        _, labels = read_frame_labels(out)
        assert labels[:n].count("non-taan") >= 0.9 * n
        assert labels[n:].count("taan") >= 0.9 * n


class TestExitCodes:
    def test_missing_subcommand(self):
        assert main([]) == 1

    def test_unknown_flag(self):
        assert main(["synth", "--bogus", "x", "--out-wav", "y.wav"]) == 1

    def test_missing_input_file(self, tmp_path):
        rc = main(["tracks", "--audio", str(tmp_path / "absent.wav"),
                   "--out", str(tmp_path / "t.csv")])
        assert rc == 2

    def test_bad_config(self, small_concert, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"no_such_knob": 1}')
        rc = main(["--config", str(cfg), "synth",
                   "--out-wav", str(tmp_path / "x.wav")])
        assert rc == 2
