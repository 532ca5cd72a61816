import json
import random

import pytest

from ftdo.cli import main
from ftdo.graph import Graph, format_edge_list, parse_edge_list


@pytest.fixture
def workdir(tmp_path):
    rng = random.Random(7)
    n = 20
    g = Graph(
        n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.7]
    )
    (tmp_path / "g.txt").write_text(format_edge_list(g))
    dels = rng.sample(sorted(g.edge_pairs()), 4)
    (tmp_path / "F.txt").write_text("\n".join(f"{u} {v}" for u, v in dels) + "\n")
    (tmp_path / "pairs.txt").write_text("0 5\n3 17\n2 2\n")
    events = [f"+ {u} {v}" for u, v in g.edge_pairs()]
    events += [f"- {u} {v}" for u, v in dels]
    (tmp_path / "s.txt").write_text("\n".join(events) + "\n")
    return tmp_path, g, dels


def run(args):
    return main([str(a) for a in args])


class TestOracleCli:
    def test_build_and_query(self, workdir, capsys):
        d, g, dels = workdir
        assert run(["oracle", "build", "--graph", d / "g.txt", "--faults", 4, "--out", d / "o.bin"]) == 0
        assert (d / "o.bin").stat().st_size > 0
        assert run([
            "oracle", "query", "--oracle", d / "o.bin", "--delete", d / "F.txt",
            "--pairs", d / "pairs.txt", "--out", d / "ans.txt",
        ]) == 0
        lines = (d / "ans.txt").read_text().splitlines()
        assert len(lines) == 3
        assert lines[2] == "2 2 0"

    def test_missing_file_errors(self, tmp_path):
        code = run([
            "oracle", "query", "--oracle", tmp_path / "x",
            "--delete", tmp_path / "y", "--pairs", tmp_path / "z",
        ])
        assert code == 2


class TestStarsCli:
    def test_build_and_query(self, workdir):
        d, g, dels = workdir
        assert run(["stars", "build", "--graph", d / "g.txt", "--faults", 20, "--out", d / "st.bin"]) == 0
        assert run([
            "stars", "query", "--oracle", d / "st.bin", "--delete", d / "F.txt",
            "--pairs", d / "pairs.txt", "--out", d / "ans.txt",
        ]) == 0
        assert len((d / "ans.txt").read_text().splitlines()) == 3


class TestSpannerCli:
    def test_sketch_and_recover(self, workdir):
        d, g, dels = workdir
        assert run([
            "spanner", "sketch", "--graph", d / "g.txt", "--faults", 4,
            "--seed", 3, "--out", d / "sk.bin",
        ]) == 0
        assert run([
            "spanner", "recover", "--sketch", d / "sk.bin", "--delete", d / "F.txt",
            "--out", d / "sp.txt",
        ]) == 0
        h = parse_edge_list((d / "sp.txt").read_text())
        deleted = {tuple(sorted(p)) for p in dels}
        assert all(tuple(sorted(p)) not in deleted for p in h.edge_pairs())
        assert h.edge_ids <= g.edge_ids


class TestStreamCli:
    def test_run_with_query_and_report(self, workdir, capsys):
        d, g, dels = workdir
        assert run([
            "stream", "run", "--events", d / "s.txt", "--vertices", 20, "--faults", 4,
            "--d-target", 3, "--cap-target", 80, "--force-buffered",
            "--query", d / "pairs.txt", "--report", d / "rep.json",
        ]) == 0
        rep = json.loads((d / "rep.json").read_text())
        assert rep["peak_bits"] > 0 and not rep["capacity_exceeded"]
        assert len(rep["answers"]) == 3

    def test_spanner_mode_recover(self, workdir):
        d, g, dels = workdir
        assert run([
            "stream", "run", "--events", d / "s.txt", "--vertices", 20, "--faults", 4,
            "--mode", "spanner", "--d-target", 3, "--cap-target", 80,
            "--force-buffered", "--recover", d / "hs.txt",
        ]) == 0
        h = parse_edge_list((d / "hs.txt").read_text())
        assert h.edge_ids <= g.edge_ids


class TestVerifyBenchCli:
    def test_verify_preset(self, tmp_path):
        assert run(["verify", "--scenario", "oracle-quick", "--out-dir", tmp_path / "rep"]) == 0
        assert (tmp_path / "rep" / "oracle-quick.jsonl").exists()
        assert (tmp_path / "rep" / "oracle-quick.summary.json").exists()
        assert (tmp_path / "rep" / "oracle-quick.png").stat().st_size > 0

    def test_verify_scenario_file(self, tmp_path):
        sc = {
            "name": "custom",
            "artifact": "oracle",
            "family": "gnp",
            "family_params": {"n": 16, "p": 0.8},
            "f": 3,
            "adversary": "random",
            "seed": 2,
            "trials": 2,
            "overrides": {},
        }
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(sc))
        assert run(["verify", "--scenario", path, "--out-dir", tmp_path / "rep"]) == 0
        assert (tmp_path / "rep" / "custom.png").exists()

    def test_seed_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FTDO_SEED", "123")
        assert run(["verify", "--scenario", "oracle-quick", "--out-dir", tmp_path / "rep"]) == 0
        summary = json.loads((tmp_path / "rep" / "oracle-quick.summary.json").read_text())
        assert summary["hard_ok"]

    def test_bench_outputs(self, tmp_path):
        assert run([
            "bench", "--n", 48, "--f-sweep", "4,16,64", "--seed", 2,
            "--out-dir", tmp_path / "rep",
        ]) == 0
        csv_text = (tmp_path / "rep" / "bench.csv").read_text()
        assert csv_text.startswith("f,") or "oracle_bits" in csv_text.splitlines()[0]
        assert (tmp_path / "rep" / "bench.png").stat().st_size > 0
