import hashlib
import json
import logging

import pytest

from pathdiv import pipeline
from pathdiv.cli import main
from pathdiv.pipeline import CheckpointMismatch, RunConfig, run, validate
from pathdiv.synth import write_dataset

REPORT_FILES = ["records.csv", "series.csv", "series.json",
                "boxplot_device_country.csv", "boxplot_ep_macro_region.json", "boxplot_diff_position.csv"]


def config(files, out, **kw):
    return RunConfig(links=files["links"], countries=files["countries"], paths=files["paths"],
                     freq=files["freq"], out=str(out), **kw)


def snapshot(out):
    return {name: (out / name).read_bytes() for name in REPORT_FILES}


def test_fixture_run(fixture_files, tmp_path):
    res = run(config(fixture_files, tmp_path / "out"))
    assert res.status == 0
    m = res.manifest
    assert m["records"] == m["expected_records"] == 12
    assert m["source_configurations"] == 3
    assert m["failures"] == 0
    assert m["timing"]["pairs"] == 12
    for rec in res.records:
        assert 0 <= rec.device_count <= rec.ep_count
        assert rec.differential == rec.ep_count - rec.device_count
    lines = (tmp_path / "out" / "records.csv").read_text().splitlines()
    assert lines[0] == "country,provider1,provider2,destination,device,ep,diff"
    assert len(lines) == 13


def test_validate_reports_classes(fixture_files, tmp_path):
    info = validate(config(fixture_files, tmp_path))
    assert info["class_histogram"]["edge_provider"] == 6
    assert info["class_histogram"]["carrier"] == 1
    assert info["pair_count_total"] == 12
    assert info["links"]["stable"] < info["links"]["raw"]


def test_manifest_hashes(fixture_files, tmp_path):
    m = run(config(fixture_files, tmp_path / "out")).manifest
    for key in ("links", "countries", "paths", "freq"):
        with open(fixture_files[key], "rb") as fh:
            assert m["datasets"][key] == hashlib.sha256(fh.read()).hexdigest()


def test_cli_validate_and_run(fixture_files, tmp_path, capsys):
    common = ["--links", fixture_files["links"], "--freq", fixture_files["freq"],
              "--country-map", fixture_files["countries"], "--as-paths", fixture_files["paths"]]
    assert main(["validate", *common]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["pair_count_preview"] == {"BR": 4, "DE": 4, "FR": 4}
    assert main(["run", *common, "--out", str(tmp_path / "o"), "--countries", "FR"]) == 0
    assert "4 records" in capsys.readouterr().out


def test_cli_missing_file(fixture_files, tmp_path, caplog):
    missing = str(tmp_path / "nope.txt")
    with caplog.at_level(logging.ERROR):
        code = main(["run", "--links", missing, "--country-map", fixture_files["countries"],
                     "--as-paths", fixture_files["paths"], "--out", str(tmp_path / "o")])
    assert code == 1
    assert missing in caplog.text


def test_cli_bad_tau(fixture_files, tmp_path):
    code = main(["validate", "--links", fixture_files["links"], "--country-map", fixture_files["countries"],
                 "--as-paths", fixture_files["paths"], "--tau", "0"])
    assert code == 1


def test_checkpoint_resume_matches_fresh_run(fixture_files, tmp_path, monkeypatch):
    fresh = run(config(fixture_files, tmp_path / "fresh"))
    ckpt = tmp_path / "ckpt"
    real = pipeline._evaluate_config
    calls = {"n": 0}

    def flaky(src, dests):
        calls["n"] += 1
        if calls["n"] > 1:
            raise KeyboardInterrupt
        return real(src, dests)

    monkeypatch.setattr(pipeline, "_evaluate_config", flaky)
    with pytest.raises(KeyboardInterrupt):
        run(config(fixture_files, tmp_path / "resumed", checkpoint_dir=str(ckpt)))
    assert len((ckpt / "progress.jsonl").read_text().splitlines()) == 1
    # simulate a torn write at the end of the log
    with open(ckpt / "progress.jsonl", "a") as fh:
        fh.write('{"country": "DE", "provi')
    monkeypatch.setattr(pipeline, "_evaluate_config", real)
    resumed = run(config(fixture_files, tmp_path / "resumed", checkpoint_dir=str(ckpt)))
    assert resumed.records == fresh.records
    assert snapshot(tmp_path / "resumed") == snapshot(tmp_path / "fresh")


def test_checkpoint_refuses_other_config(fixture_files, tmp_path):
    ckpt = str(tmp_path / "ckpt")
    run(config(fixture_files, tmp_path / "a", checkpoint_dir=ckpt))
    with pytest.raises(CheckpointMismatch):
        run(config(fixture_files, tmp_path / "b", checkpoint_dir=ckpt, tau=5))


def test_worker_count_does_not_change_reports(fixture_files, tmp_path):
    run(config(fixture_files, tmp_path / "w1", workers=1))
    run(config(fixture_files, tmp_path / "w2", workers=2))
    assert snapshot(tmp_path / "w1") == snapshot(tmp_path / "w2")


def test_synth_dataset_runs(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "ds"), "--nodes", "300", "--links", "1500",
                 "--n-countries", "4", "--n-paths", "400", "--seed", "1"]) == 0
    files = json.loads(capsys.readouterr().out)
    cfg = RunConfig(links=files["links"], countries=files["countries"], paths=files["paths"],
                    freq=files["freq"], out=str(tmp_path / "out"), sample_size=3)
    per_cc = validate(cfg)["edge_providers_per_country"]
    cfg.country_filter = [min((n, cc) for cc, n in per_cc.items() if n >= 2)[1]]
    res = run(cfg)
    assert res.status == 0
    assert res.manifest["records"] == res.manifest["expected_records"] > 0


def test_synth_graph_size(tmp_path):
    files = write_dataset(tmp_path, n_nodes=500, n_links=2000, n_countries=3, n_paths=200, seed=2)
    info = validate(RunConfig(links=str(files["links"]), countries=str(files["countries"]),
                              paths=str(files["paths"]), freq=str(files["freq"])))
    assert info["graph"]["nodes"] == 500
    assert info["links"]["raw"] == 2000


def test_synth_rejects_too_few_links(tmp_path):
    assert main(["synth", "--out", str(tmp_path), "--nodes", "300", "--links", "10"]) == 1
