import hashlib
import json
import os
from pathlib import Path

import pytest

from floodattrib.bayes import SamplerConfig
from floodattrib.cli import COMMANDS, build_parser, main
from floodattrib.config import RunConfig, config_to_toml

GOLDEN = Path(__file__).parent / "golden" / "five_site_sha256.json"
QUICK = RunConfig(seed=2, sampler=SamplerConfig(iterations=250, warmup=250))


def digests(directory) -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(Path(directory).iterdir())}


@pytest.fixture(scope="module")
def five_sites(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    data = base / "data"
    assert main(["synth", "--out-dir", str(data), "--n-sites", "5", "--seed", "0"]) == 0
    cfg = base / "run.toml"
    cfg.write_text(config_to_toml(QUICK))
    return data, cfg


@pytest.fixture(scope="module")
def five_site_run(five_sites, tmp_path_factory):
    data, cfg = five_sites
    out = tmp_path_factory.mktemp("run")
    code = main(["run", "--data-dir", str(data), "--config", str(cfg), "--out-dir", str(out)])
    return code, out


def test_parser_exposes_subcommands():
    p = build_parser()
    assert set(COMMANDS) == {"ingest-check", "run", "synth", "report"}
    args = p.parse_args(["run", "--data-dir", "d", "--out-dir", "o", "--seed", "4", "--prior-mode", "flat",
                         "--config", "c.toml", "--workers", "2"])
    assert (args.seed, args.prior_mode, args.config, args.workers) == (4, "flat", "c.toml", 2)
    with pytest.raises(SystemExit):
        p.parse_args(["run", "--data-dir", "d", "--out-dir", "o", "--prior-mode", "vague"])
    with pytest.raises(SystemExit):
        p.parse_args([])


def test_ingest_check(five_sites, capsys):
    data, cfg = five_sites
    assert main(["ingest-check", "--data-dir", str(data), "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "5 sites OK" in out and "S000" in out


def test_ingest_errors_exit_two(tmp_path, capsys):
    assert main(["ingest-check", "--data-dir", str(tmp_path)]) == 2
    assert "required file is missing" in capsys.readouterr().err
    bad = tmp_path / "bad.toml"
    bad.write_text("nonsense = 1\n")
    assert main(["ingest-check", "--data-dir", str(tmp_path), "--config", str(bad)]) == 2


def test_run_writes_every_output(five_site_run):
    code, out = five_site_run
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"site_results.jsonl", "failures.jsonl", "occurrence.csv", "sweep_occurrence.csv",
                     "trend_vs_area.csv", "b_posterior_density.csv", "seasonality_polar.csv"}
    lines = (out / "site_results.jsonl").read_text().splitlines()
    assert [json.loads(x)["site_id"] for x in lines[1:]] == [f"S{i:03d}" for i in range(5)]
    assert len((out / "failures.jsonl").read_text().splitlines()) == 1


def test_report_rebuilds_identical_files(five_site_run, tmp_path):
    _, out = five_site_run
    assert main(["report", "--results", str(out / "site_results.jsonl"), "--out-dir", str(tmp_path)]) == 0
    rebuilt = digests(tmp_path)
    original = digests(out)
    original.pop("failures.jsonl")
    assert rebuilt == original


def test_golden_outputs(five_site_run):
    _, out = five_site_run
    got = digests(out)
    if os.environ.get("FLOODATTRIB_REGEN_GOLDEN"):
        GOLDEN.parent.mkdir(exist_ok=True)
        GOLDEN.write_text(json.dumps(got, indent=2, sort_keys=True) + "\n")
    assert got == json.loads(GOLDEN.read_text())


def test_seed_override_changes_fits(five_sites, five_site_run, tmp_path):
    data, cfg = five_sites
    assert main(["run", "--data-dir", str(data), "--config", str(cfg), "--out-dir", str(tmp_path),
                 "--seed", "3"]) == 0
    assert digests(tmp_path)["site_results.jsonl"] != digests(five_site_run[1])["site_results.jsonl"]


def test_run_reports_failures(five_sites, tmp_path):
    data, cfg = five_sites
    text = (data / "annual_maxima.csv").read_text().splitlines()
    short = tmp_path / "data"
    short.mkdir()
    for f in data.iterdir():
        (short / f.name).write_bytes(f.read_bytes())
    kept = [line for line in text if not line.startswith("S001,") or int(line.split(",")[1]) < 1969]
    (short / "annual_maxima.csv").write_text("\n".join(kept) + "\n")
    low = tmp_path / "low.toml"
    low.write_text(cfg.read_text().replace("min_record_length = 40", "min_record_length = 5"))
    out = tmp_path / "out"
    assert main(["run", "--data-dir", str(short), "--config", str(low), "--out-dir", str(out)]) == 1
    failures = [json.loads(x) for x in (out / "failures.jsonl").read_text().splitlines()[1:]]
    assert [f["site_id"] for f in failures] == ["S001"]
    assert len((out / "site_results.jsonl").read_text().splitlines()) == 1 + 4


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "floodattrib", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "ingest-check" in r.stdout
