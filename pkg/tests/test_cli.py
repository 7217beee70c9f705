import numpy as np
import pytest

from mkldetect import read_feature_csv, read_verdict_csv
from mkldetect.cli import main

FAST_CONFIG = """
seed = 5
mkl.max_iter = 12
m_adapt.max_iter = 4
s_adapt.max_iter = 4
"""


@pytest.fixture
def fast_cfg(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(FAST_CONFIG)
    return str(path)


@pytest.fixture
def small_trace(tmp_path, fast_cfg):
    packets = tmp_path / "packets.csv"
    code = main(["--config", fast_cfg, "synth", "--out", str(packets),
                 "--duration", "40", "--attack-start", "20"])
    assert code == 0
    return packets


@pytest.fixture
def labeled_features(tmp_path, fast_cfg, small_trace):
    features = tmp_path / "features.csv"
    code = main(["--config", fast_cfg, "extract", str(small_trace),
                 "--out", str(features), "--attack-from", "20"])
    assert code == 0
    return features


def test_synth_then_extract_produces_labeled_windows(labeled_features):
    series, labels = read_feature_csv(labeled_features)
    assert len(series) == 40
    assert labels is not None
    assert set(labels.tolist()) == {1, -1}
    assert labels[:20].tolist() == [1] * 20
    assert labels[20:].tolist() == [-1] * 20


def test_extract_without_labels(tmp_path, fast_cfg, small_trace):
    out = tmp_path / "plain.csv"
    assert main(["--config", fast_cfg, "extract", str(small_trace), "--out", str(out)]) == 0
    _, labels = read_feature_csv(out)
    assert labels is None


def test_extract_empty_packet_file(tmp_path):
    packets = tmp_path / "empty.csv"
    packets.write_text("time,src_ip,dst_ip,src_port,dst_port,size,proto\n")
    out = tmp_path / "features.csv"
    assert main(["extract", str(packets), "--out", str(out)]) == 0
    series, _ = read_feature_csv(out)
    assert series == []


def test_extract_missing_header_is_data_error(tmp_path, capsys):
    packets = tmp_path / "bad.csv"
    packets.write_text("0.1,a,b,1,2,3,TCP\n")
    out = tmp_path / "features.csv"
    assert main(["extract", str(packets), "--out", str(out)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_extract_strict_aborts_on_malformed_line(tmp_path):
    packets = tmp_path / "mixed.csv"
    packets.write_text("time,src_ip,dst_ip,src_port,dst_port,size,proto\n"
                       "bad,a,b,1,2,3,TCP\n")
    out = tmp_path / "features.csv"
    assert main(["--strict", "extract", str(packets), "--out", str(out)]) == 2
    assert main(["extract", str(packets), "--out", str(out)]) == 0


def test_train_detect_eval_pipeline(tmp_path, fast_cfg, labeled_features, capsys):
    prefix = tmp_path / "models" / "run"
    code = main(["--config", fast_cfg, "train", str(labeled_features),
                 "--mode", "both", "--out", str(prefix)])
    assert code in (0, 3)  # 3 flags that the corridor test never fired
    for suffix in (".m.json", ".s.json", ".m.telemetry.csv", ".s.telemetry.csv"):
        assert (tmp_path / "models" / ("run" + suffix)).exists()

    verdicts_path = tmp_path / "verdicts.csv"
    code = main(["--config", fast_cfg, "detect", str(labeled_features),
                 "--m-model", str(prefix) + ".m.json",
                 "--s-model", str(prefix) + ".s.json",
                 "--out", str(verdicts_path)])
    assert code == 0
    verdicts = read_verdict_csv(verdicts_path)
    assert len(verdicts) == 40

    code = main(["eval", "--pred", str(verdicts_path), "--truth", str(labeled_features)])
    assert code == 0
    out = capsys.readouterr().out
    assert "DR" in out and "FR" in out and "ER" in out


def test_eval_identical_files_is_perfect(tmp_path, labeled_features, capsys):
    assert main(["eval", "--pred", str(labeled_features),
                 "--truth", str(labeled_features)]) == 0
    out = capsys.readouterr().out
    assert "DR = 100.00%" in out
    assert "FR = 0.00%" in out
    assert "ER = 0.00%" in out


def test_train_rejects_single_class(tmp_path, fast_cfg, small_trace):
    features = tmp_path / "single.csv"
    assert main(["--config", fast_cfg, "extract", str(small_trace),
                 "--out", str(features), "--attack-from", "9999"]) == 0
    assert main(["--config", fast_cfg, "train", str(features),
                 "--out", str(tmp_path / "m")]) == 2


def test_train_telemetry_is_deterministic(tmp_path, fast_cfg, labeled_features):
    a_prefix, b_prefix = tmp_path / "a", tmp_path / "b"
    for prefix in (a_prefix, b_prefix):
        main(["--config", fast_cfg, "train", str(labeled_features),
              "--mode", "m", "--out", str(prefix)])
    a = (tmp_path / "a.m.telemetry.csv").read_bytes()
    b = (tmp_path / "b.m.telemetry.csv").read_bytes()
    assert a == b
    assert (tmp_path / "a.m.json").read_bytes() == (tmp_path / "b.m.json").read_bytes()


def test_perturb_identity_range_copies_file(tmp_path, labeled_features):
    out = tmp_path / "perturbed.csv"
    assert main(["perturb", str(labeled_features), "--lo", "1", "--hi", "1",
                 "--out", str(out)]) == 0
    assert out.read_bytes() == labeled_features.read_bytes()


def test_perturb_requires_labels(tmp_path, fast_cfg, small_trace):
    plain = tmp_path / "plain.csv"
    main(["--config", fast_cfg, "extract", str(small_trace), "--out", str(plain)])
    assert main(["perturb", str(plain), "--lo", "0.5", "--hi", "0.6",
                 "--out", str(tmp_path / "x.csv")]) == 2


def test_detect_stream_of_length_zero(tmp_path, fast_cfg, labeled_features):
    prefix = tmp_path / "run"
    main(["--config", fast_cfg, "train", str(labeled_features), "--mode", "both",
          "--out", str(prefix)])
    empty = tmp_path / "empty_features.csv"
    empty.write_text("window_start,acd,ibf,mff,hiad,ffv\n")
    out = tmp_path / "verdicts.csv"
    assert main(["--config", fast_cfg, "detect", str(empty),
                 "--m-model", str(prefix) + ".m.json",
                 "--s-model", str(prefix) + ".s.json", "--out", str(out)]) == 0
    assert read_verdict_csv(out) == []


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as err:
        main(["landscape"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["perturb", "x.csv", "--lo", "0.5"])  # missing --hi/--out
    assert err.value.code == 1


def test_missing_input_file_is_data_error(tmp_path):
    assert main(["extract", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "out.csv")]) == 2


def test_config_command_round_trips(tmp_path, capsys):
    assert main(["config"]) == 0
    dumped = capsys.readouterr().out
    path = tmp_path / "dumped.cfg"
    path.write_text(dumped)
    assert main(["--config", str(path), "config"]) == 0
    assert capsys.readouterr().out == dumped


def test_experiment_runs_are_byte_identical(tmp_path, fast_cfg, labeled_features):
    out_a, out_b = tmp_path / "exp_a", tmp_path / "exp_b"
    for out in (out_a, out_b):
        code = main(["--config", fast_cfg, "experiment",
                     "--features", str(labeled_features),
                     "--scenario", "1", "--out-dir", str(out)])
        assert code in (0, 3)
    assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()
    assert (out_a / "counts.csv").read_bytes() == (out_b / "counts.csv").read_bytes()
    lines = (out_a / "results.csv").read_text().strip().splitlines()
    assert lines[0] == "table,mode,lo,hi,method,dr,fr,er"
    # 9 ranges x 3 methods
    assert len(lines) == 1 + 27
    methods = {line.split(",")[4] for line in lines[1:]}
    assert methods == {"ensemble", "simple-mkl", "linear-svm"}


def test_experiment_with_explicit_split(tmp_path, fast_cfg, labeled_features):
    out = tmp_path / "exp"
    code = main(["--config", fast_cfg, "experiment",
                 "--train", str(labeled_features), "--test", str(labeled_features),
                 "--scenario", "2", "--out-dir", str(out)])
    assert code in (0, 3)
    lines = (out / "results.csv").read_text().strip().splitlines()
    assert lines[1].split(",")[1] == "attack-only"
    for name in ("m_model.json", "s_model.json", "mkl_model.json", "svm_model.json"):
        assert (out / name).exists()


def test_experiment_requires_some_input(tmp_path, fast_cfg):
    assert main(["--config", fast_cfg, "experiment",
                 "--out-dir", str(tmp_path / "x")]) == 2
