import hashlib
import json
from collections import Counter

import pytest

from photonapprox.cli import ExperimentConfig, main
from photonapprox.exceptions import ConfigError
from photonapprox.photonics import load_topology
from photonapprox.quality import SweepSurface
from photonapprox.simcore import ComparisonReport, PacketKind, SimReport, read_report, read_trace


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def gen(tmp_path):
    def run(name, *extra):
        out = tmp_path / name
        assert main(["gentrace", "--out", str(out), *extra]) == 0
        return out / "trace.jsonl"

    return run


class TestBudget:
    def test_default_topology(self, tmp_path, capsys):
        assert main(["budget", "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "budget.json").read_text())
        assert sorted(data) == ["ook", "pam4"]
        assert data["ook"]["n_lambda"] == 64 and data["pam4"]["n_lambda"] == 32
        assert len(data["ook"]["sources"]) == 8
        assert "c7" in capsys.readouterr().out

    def test_empty_topology(self, tmp_path):
        topo = tmp_path / "empty.json"
        topo.write_text("[]")
        assert main(["budget", "--topology", str(topo), "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "budget.json").read_text())
        assert data["ook"]["sources"] == {}

    def test_bad_topology_is_config_error(self, tmp_path):
        topo = tmp_path / "bad.txt"
        topo.write_text("c0 c1 nope\n")
        assert main(["budget", "--topology", str(topo), "--out", str(tmp_path)]) == 1


class TestGentrace:
    def test_deterministic(self, gen):
        a = gen("a", "--seed", "5", "--count", "300")
        b = gen("b", "--seed", "5", "--count", "300")
        assert digest(a) == digest(b)
        assert digest(gen("c", "--seed", "6", "--count", "300")) != digest(a)

    def test_zero_float_fraction(self, gen):
        trace = read_trace(gen("z", "--count", "200", "--float-fraction", "0"))
        assert len(trace) == 200 and not any(p.approx for p in trace)

    def test_round_robin_histogram(self, gen):
        trace = read_trace(gen("rr", "--count", "560", "--destinations", "round-robin"))
        hist = Counter(p.dst for p in trace if p.src == "c0")
        assert hist == {f"c{i}": 10 for i in range(1, 8)}

    def test_invalid_fraction(self, tmp_path):
        assert main(["gentrace", "--out", str(tmp_path), "--float-fraction", "1.5"]) == 1


class TestSimulate:
    def test_baseline_leaves_payloads(self, gen, tmp_path):
        src = gen("t", "--count", "300", "--seed", "2")
        out = tmp_path / "sim"
        assert main(["simulate", "--trace", str(src), "--policy", "baseline", "--out", str(out)]) == 0
        assert [p.payload for p in read_trace(out / "trace.jsonl")] == [p.payload for p in read_trace(src)]

    def test_reruns_byte_identical(self, gen, tmp_path):
        src = gen("t", "--count", "300", "--seed", "2")
        args = ["simulate", "--trace", str(src), "--policy", "loss-aware", "--app", "jpeg"]
        assert main(args + ["--out", str(tmp_path / "r1")]) == 0
        assert main(args + ["--out", str(tmp_path / "r2")]) == 0
        for name in ("trace.jsonl", "ledger.json", "packets.csv", "report.json", "report.csv"):
            assert digest(tmp_path / "r1" / name) == digest(tmp_path / "r2" / name)

    def test_far_trace_fully_truncated(self, gen, tmp_path):
        src = gen("far", "--count", "200", "--float-fraction", "1", "--destinations", "farthest")
        out = tmp_path / "sim"
        args = ["simulate", "--trace", str(src), "--policy", "loss-aware-ook", "--bits", "32", "--reduction", "0.8"]
        assert main(args + ["--out", str(out)]) == 0
        report = SimReport.from_dict(read_report(out / "report.json"))
        assert report.mode_histogram["truncated"] == report.approximable_packets == 200

    def test_bad_trace_line(self, gen, tmp_path, caplog):
        src = gen("t", "--count", "10")
        lines = src.read_text().splitlines()
        lines[4] = '{"seq": 4, "src": "c0"'
        src.write_text("\n".join(lines) + "\n")
        assert main(["simulate", "--trace", str(src), "--out", str(tmp_path / "s")]) == 2
        assert "trace.jsonl:5:" in caplog.text

    def test_unknown_destination(self, tmp_path, caplog):
        src = tmp_path / "t.jsonl"
        src.write_text('{"seq":0,"src":"c0","dst":"mars","kind":"int","approx":false,"payload":["0"]}\n')
        assert main(["simulate", "--trace", str(src), "--out", str(tmp_path / "s")]) == 2
        assert "mars" in caplog.text

    def test_missing_trace_file(self, tmp_path):
        assert main(["simulate", "--trace", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path)]) == 2

    def test_policy_without_bits(self, gen, tmp_path):
        src = gen("t", "--count", "10")
        assert main(["simulate", "--trace", str(src), "--policy", "truncation", "--out", str(tmp_path)]) == 1

    def test_csv_columns(self, gen, tmp_path):
        src = gen("t", "--count", "50")
        out = tmp_path / "sim"
        assert main(["simulate", "--trace", str(src), "--policy", "fixed-prior", "--out", str(out)]) == 0
        header = (out / "packets.csv").read_text().splitlines()[0]
        assert "laser_pj" in header
        rows = (out / "report.csv").read_text().splitlines()
        assert len(rows) == 2 and "mode_reduced" in rows[0]


class TestSweep:
    def test_identity_grid(self, tmp_path):
        assert main(["sweep", "--kernel", "identity", "--out", str(tmp_path)]) == 0
        surface = SweepSurface.from_csv((tmp_path / "surface.csv").read_text(), "identity")
        assert surface.pe.size == 88
        selected = json.loads((tmp_path / "selected.json").read_text())
        assert selected["predicted_pe"] < 10.0

    def test_input_file(self, tmp_path):
        data = tmp_path / "v.csv"
        data.write_text("\n".join(str(1.0 + i / 7) for i in range(64)))
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({"sweep": {"kernel": "identity", "input_path": "v.csv", "bits": [8, 32]}}))
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        assert len((tmp_path / "o" / "surface.csv").read_text().splitlines()) == 1 + 2 * 11

    def test_malformed_input(self, tmp_path):
        bad = tmp_path / "x.bin"
        bad.write_bytes(b"abc")
        assert main(["sweep", "--input", str(bad), "--out", str(tmp_path)]) == 2


class TestCompare:
    def test_outputs(self, gen, tmp_path, capsys):
        src = gen("t", "--count", "400", "--seed", "1")
        out = tmp_path / "cmp"
        assert main(["compare", "--trace", str(src), "--app", "blackscholes", "--out", str(out)]) == 0
        rep = ComparisonReport.from_dict(read_report(out / "compare.json"))
        assert set(rep.reports) == {"baseline", "truncation", "fixed-prior", "loss-aware-ook", "loss-aware-pam4"}
        assert rep.reports["loss-aware-pam4"].laser_energy_pj < rep.reports["loss-aware-ook"].laser_energy_pj
        assert (out / "compare.csv").read_text().count("\n") >= 5
        assert "loss-aware-ook" in capsys.readouterr().out

    def test_needs_app(self, gen, tmp_path):
        src = gen("t", "--count", "10")
        assert main(["compare", "--trace", str(src), "--out", str(tmp_path)]) == 1


class TestConfigFile:
    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"polcy": "baseline"}')
        with pytest.raises(ConfigError):
            ExperimentConfig.load(cfg)
        assert main(["budget", "--config", str(cfg)]) == 1

    def test_relative_paths(self, tmp_path):
        cfg = tmp_path / "sub" / "c.json"
        cfg.parent.mkdir()
        cfg.write_text('{"topology_path": "topo.json", "trace_path": "t.jsonl"}')
        loaded = ExperimentConfig.load(cfg)
        assert loaded.topology_path == str(cfg.parent / "topo.json")

    def test_config_drives_gentrace(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 9, "out_dir": str(tmp_path / "o"), "gentrace": {"count": 40, "profile": "fft"}}))
        assert main(["gentrace", "--config", str(cfg)]) == 0
        trace = read_trace(tmp_path / "o" / "trace.jsonl")
        assert len(trace) == 40

    def test_emitted_topology_loads(self, tmp_path):
        from photonapprox.photonics import clos_topology, default_topology_path, dump_topology

        f = tmp_path / "t.json"
        f.write_text(dump_topology(clos_topology()))
        assert load_topology(f) == load_topology(default_topology_path())
