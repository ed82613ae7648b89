import csv
import json

import pytest

from txconflict import synth
from txconflict.cli import main
from txconflict.conflict_graph import ConflictGraph, ConflictMode, build_conflict_graph
from txconflict.ingest import read_checkpoint
from txconflict.pipeline import analyze_block
from txconflict.store import StoreLayout, read_records
from txconflict.trace_model import assemble_block

from blockgen import addr, hub_block, make_block, write_fixture_dir

COINBASE = addr(0xC0FFEE)


@pytest.fixture
def store(tmp_path):
    blocks = {
        10: hub_block(12, hub=3, coinbase=COINBASE, block_number=10),
        11: hub_block(20, hub=5, coinbase=COINBASE, block_number=11),
        12: make_block([], block_number=12),
    }
    return write_fixture_dir(tmp_path / "store", blocks)


def run(*argv):
    return main([str(a) for a in argv])


# pipeline ------------------------------------------------------------------------


def test_analyze_block_hub_star():
    rec = analyze_block(assemble_block(10, **hub_block(12, hub=3, coinbase=COINBASE)), mc_starts=50)
    rw = rec.graphs["prestate_rw"]
    # hub 3 writes the pool slot read by the other five odd transactions
    assert rw["max_degree_node"] == 3 and rw["max_degree"] == 5
    assert rw["num_edges"] == 5 and rw["assortativity"] == -1.0
    # everyone pays the coinbase: a write-write clique in ALL mode
    assert rec.graphs["prestate_all"]["clique_number"] == 12
    assert rec.ww_cause_counts["balance"] == 12 * 11 // 2
    assert rec.ww_sources[COINBASE] == {"balance": 66}
    assert rec.value_transfer_ratio == pytest.approx(6 / 12)
    assert set(rec.graphs) == {"prestate_rw", "prestate_all", "calltracer_rw", "calltracer_all"}


def test_analyze_empty_block():
    rec = analyze_block(assemble_block(12, **make_block([])))
    assert rec.tx_count == 0
    for g in rec.graphs.values():
        assert g["greedy_colors"] == 0 and g["ratio_lower"] is None


def test_analyze_missing_tracer_is_recorded():
    docs = hub_block(6)
    rec = analyze_block(assemble_block(1, call=docs["call"]))
    assert "prestate_rw" not in rec.graphs and "calltracer_rw" in rec.graphs
    assert any(e.startswith("prestate") for e in rec.errors)


# analyze -----------------------------------------------------------------------------


def test_analyze_command_deterministic(store, tmp_path):
    out1, out2, out3 = tmp_path / "o1", tmp_path / "o2", tmp_path / "o3"
    assert run("analyze", "--traces", store, "--out", out1, "--mc-starts", 50) == 0
    assert run("analyze", "--traces", store, "--out", out2, "--mc-starts", 50) == 0
    assert run("analyze", "--traces", store, "--out", out3, "--mc-starts", 50, "--jobs", 2) == 0
    a = StoreLayout(out1).metrics_path.read_bytes()
    assert a == StoreLayout(out2).metrics_path.read_bytes() == StoreLayout(out3).metrics_path.read_bytes()
    recs = list(read_records(StoreLayout(out1).metrics_path))
    assert [r.block_number for r in recs] == [10, 11, 12]
    assert recs[2].tx_count == 0 and recs[2].graphs["prestate_rw"]["greedy_colors"] == 0


def test_analyze_method_and_mode_flags(store, tmp_path):
    assert run("analyze", "--traces", store, "--out", tmp_path, "--method", "prestate", "--mode", "rw") == 0
    (r, *_) = read_records(StoreLayout(tmp_path).metrics_path)
    assert set(r.graphs) == {"prestate_rw"}


def test_analyze_logs_missing_tracer(tmp_path):
    root = tmp_path / "s"
    docs = hub_block(6)
    write_fixture_dir(root, {5: {"call": docs["call"]}})
    assert run("analyze", "--traces", root, "--out", root) == 0
    errors = [json.loads(x) for x in (root / "metrics" / "errors.jsonl").read_text().splitlines()]
    assert errors[0]["block"] == 5 and "prestate" in errors[0]["error"]


def test_analyze_nothing_to_do(tmp_path):
    assert run("analyze", "--traces", tmp_path, "--out", tmp_path) == 1


# report / sim / synth -------------------------------------------------------------------


def test_report_command(store, tmp_path, capsys):
    run("analyze", "--traces", store, "--out", store, "--mc-starts", 20)
    assert run("report", "--records", StoreLayout(store).metrics_path, "--out-dir", tmp_path / "rep", "--groups", 2) == 0
    printed = capsys.readouterr().out.split()
    assert any(p.endswith("block_size_histogram.csv") for p in printed)
    assert (tmp_path / "rep" / "ww_causes.csv").exists()


def test_sim_from_traces(store, tmp_path):
    out = tmp_path / "sim.csv"
    assert run("sim", "--traces", store, "--weights", "unit", "--mode", "rw", "--out", out) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["block_number"] for r in rows] == ["10", "11", "12"]
    # tx 1 reads the slot before hub 3 writes it: order path 1 -> 3 -> 5
    assert float(rows[0]["order_makespan"]) == 3 and float(rows[0]["coloring_makespan"]) == 2
    assert rows[2]["coloring_vs_order"] == ""


def test_sim_gas_weights(store, tmp_path):
    out = tmp_path / "sim.csv"
    assert run("sim", "--traces", store, "--out", out) == 0
    rows = list(csv.DictReader(out.open()))
    # ALL mode with a shared coinbase: fully sequential
    assert float(rows[0]["order_makespan"]) == float(rows[0]["sequential_time"])


def test_sim_needs_input():
    with pytest.raises(SystemExit) as info:
        run("sim")
    assert info.value.code == 2


def test_synth_star(capsys):
    assert run("synth", "--kind", "star", "--n", 10) == 0
    g = ConflictGraph.from_edgelist(capsys.readouterr().out)
    assert g.edges == synth.star(10).edges


def test_synth_gnp_zero(capsys):
    assert run("synth", "--kind", "gnp", "--n", 50, "--p", 0) == 0
    g = ConflictGraph.from_edgelist(capsys.readouterr().out)
    assert (g.num_nodes, g.num_edges) == (50, 0)


def test_synth_hotspot(tmp_path):
    out, sets_out = tmp_path / "g.txt", tmp_path / "sets.jsonl"
    assert run("synth", "--kind", "hotspot", "--n", 20, "--hub-degree", 19, "--out", out, "--sets-out", sets_out) == 0
    g = ConflictGraph.from_edgelist(out.read_text())
    assert g.edges == synth.star(20).edges
    sets = synth.sets_from_json(json.loads(x) for x in sets_out.read_text().splitlines())
    assert build_conflict_graph(sets, ConflictMode.RW).edges == g.edges


def test_synth_deterministic(capsys):
    run("synth", "--kind", "gnp", "--n", 30, "--p", 0.2, "--seed", 4)
    a = capsys.readouterr().out
    run("synth", "--kind", "gnp", "--n", 30, "--p", 0.2, "--seed", 4)
    assert capsys.readouterr().out == a


@pytest.mark.parametrize(
    "argv",
    [
        ["synth", "--kind", "gnp", "--n", "5"],
        ["synth", "--kind", "hotspot", "--n", "5", "--hub-degree", "9"],
        ["synth", "--kind", "star", "--n", "0"],
        ["synth", "--kind", "cube", "--n", "3"],
    ],
)
def test_synth_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


# fetch ---------------------------------------------------------------------------


def test_fetch_missing_endpoint(monkeypatch, tmp_path):
    monkeypatch.delenv("ETH_RPC_URL", raising=False)
    with pytest.raises(SystemExit) as info:
        run("fetch", "--from", 1, "--to", 2, "--out", tmp_path)
    assert info.value.code == 2


def test_fetch_offline_and_resume(store, tmp_path):
    out = tmp_path / "fetched"
    assert run("fetch", "--fixtures", store, "--from", 10, "--to", 11, "--tracers", "all", "--out", out) == 0
    assert sorted(p.name for p in (out / "traces").iterdir()) == [
        "10.call.gz",
        "10.prestate.gz",
        "10.prestate_diff.gz",
    ]
    assert read_checkpoint(out / "checkpoint.json") == 11
    assert run("fetch", "--fixtures", store, "--from", 10, "--to", 13, "--out", out) == 0
    assert read_checkpoint(out / "checkpoint.json") == 13
    assert {p.name.split(".")[0] for p in (out / "traces").iterdir()} == {"10", "11", "12"}


def test_fetch_skipped_blocks_still_succeed(store, tmp_path):
    out = tmp_path / "f"
    assert run("fetch", "--fixtures", store, "--from", 12, "--to", 14, "--out", out) == 0
    assert "13" in (out / "failures.jsonl").read_text()


def test_fetched_equals_fixture_analysis(store, tmp_path):
    out = tmp_path / "f"
    run("fetch", "--fixtures", store, "--from", 10, "--to", 13, "--out", out)
    run("analyze", "--traces", out, "--out", tmp_path / "a", "--mc-starts", 20)
    run("analyze", "--traces", store, "--out", tmp_path / "b", "--mc-starts", 20)
    assert (tmp_path / "a" / "metrics" / "records.jsonl.gz").read_bytes() == (
        tmp_path / "b" / "metrics" / "records.jsonl.gz"
    ).read_bytes()


def test_structured_logs(store, tmp_path, capsys):
    run("-v", "analyze", "--traces", store, "--out", tmp_path, "--mc-starts", 10)
    err = capsys.readouterr().err
    assert "level=info" in err and 'msg="wrote 3 record(s)' in err
