import json
import subprocess
import sys

import pytest

from versegraph import cli, io
from versegraph.core import TemporalMultiLayerGraph
from versegraph.errors import ValidationError
from versegraph.scenario import GeneratorConfig, gen_network_layer


def _small_graph():
    g = TemporalMultiLayerGraph()
    net = g.create_layer("network")
    soc = g.create_layer("social")
    a = g.add_vertex({"router"}, {net}, {"region": "eu"}, 0)
    b = g.add_vertex({"server"}, {net}, {}, 0)
    u = g.add_vertex({"user"}, {net, soc}, {}, 1)
    g.add_edge(a, b, net, net, directed=False, weight=2.0, relation="uplink", t_start=0)
    g.add_edge(u, b, soc, net, directed=True, weight=1.0, relation="session", t_start=1)
    g.retire_vertex(a, 10)
    return g


# -- JSON interchange -------------------------------------------------------

def test_round_trip_identity(tmp_path):
    g = _small_graph()
    p1 = tmp_path / "g1.json"
    p2 = tmp_path / "g2.json"
    io.export_graph(g, str(p1))
    g2 = io.import_graph(str(p1))
    io.export_graph(g2, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_round_trip_snapshot_equivalence():
    g = _small_graph()
    g2 = io.graph_from_dict(io.graph_to_dict(g))
    for t in (0, 1, 5, 10, 11):
        s1, s2 = g.snapshot_at(t), g2.snapshot_at(t)
        assert set(s1.vertices) == set(s2.vertices)
        assert [e.id for e in s1.edges] == [e.id for e in s2.edges]


def test_round_trip_generated(tmp_path):
    g = TemporalMultiLayerGraph()
    gen_network_layer(g, GeneratorConfig(seed=7, routers=10, servers=3, devices=4))
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    io.export_graph(g, str(p1))
    io.export_graph(io.import_graph(str(p1)), str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_import_rejects_bad_version():
    with pytest.raises(ValidationError):
        io.graph_from_dict({"version": 99, "layers": [], "vertices": [], "edges": []})


def test_import_rejects_dangling_edge():
    doc = io.graph_to_dict(_small_graph())
    doc["edges"][0]["dst"] = 999
    with pytest.raises(ValidationError, match="dangling endpoint 999"):
        io.graph_from_dict(doc)


def test_import_rejects_negative_weight():
    doc = io.graph_to_dict(_small_graph())
    doc["edges"][1]["weight"] = -1.0
    with pytest.raises(ValidationError, match="edge 1"):
        io.graph_from_dict(doc)


def test_import_rejects_edge_outside_vertex_lifetime():
    doc = io.graph_to_dict(_small_graph())
    doc["edges"][0]["t_start"] = -5
    with pytest.raises(ValidationError, match="inactive"):
        io.graph_from_dict(doc)


def test_import_rejects_layer_membership_violation():
    doc = io.graph_to_dict(_small_graph())
    doc["edges"][0]["layer_src"] = 1
    doc["edges"][0]["layer_dst"] = 1
    with pytest.raises(ValidationError):
        io.graph_from_dict(doc)


def test_import_rejects_duplicate_ids():
    doc = io.graph_to_dict(_small_graph())
    doc["vertices"].append(dict(doc["vertices"][0]))
    with pytest.raises(ValidationError, match="duplicate vertex"):
        io.graph_from_dict(doc)


# -- DOT --------------------------------------------------------------------

def test_dot_clusters_and_edge_styles():
    dot = io.snapshot_to_dot(_small_graph().snapshot_at(2))
    assert dot.startswith("digraph")
    assert "subgraph cluster_0" in dot and "subgraph cluster_1" in dot
    assert 'label="network"' in dot and 'label="social"' in dot
    assert "dir=none" in dot  # undirected uplink
    assert "style=dashed" in dot  # inter-layer session edge
    # the multi-layer user vertex appears in exactly one cluster
    assert dot.count('v2 [label=') == 1


def test_dot_highlights():
    dot = io.snapshot_to_dot(_small_graph().snapshot_at(2), {0: "red"})
    assert 'color="red"' in dot


# -- CLI --------------------------------------------------------------------

def test_cli_gen_analyze_partition(tmp_path):
    gpath = tmp_path / "g.json"
    assert cli.run(["gen", "--scenario", "network", "--seed", "3",
                    "--out", str(gpath)]) == 0
    assert gpath.exists() and (tmp_path / "g.json.manifest.json").exists()

    csv = tmp_path / "m.csv"
    assert cli.run(["analyze", "--in", str(gpath), "--metrics", "degree,components",
                    "--out", str(csv)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "metric,vertex_id,score"
    assert any(l.startswith("degree,") for l in lines[1:])

    part = tmp_path / "p.json"
    assert cli.run(["partition", "--in", str(gpath), "--k", "2",
                    "--out", str(part)]) == 0
    doc = json.loads(part.read_text())
    assert sorted(doc["block_sizes"]) == sorted(doc["block_sizes"]) and sum(doc["block_sizes"]) == len(doc["assignment"])


def test_cli_byte_identical_reruns(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert cli.run(["gen", "--scenario", "multilayer", "--seed", "11",
                        "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_manifest_digests(tmp_path):
    gpath = tmp_path / "g.json"
    cli.run(["gen", "--scenario", "social", "--seed", "1", "--out", str(gpath)])
    csv = tmp_path / "deg.csv"
    cli.run(["analyze", "--in", str(gpath), "--metrics", "degree", "--out", str(csv)])
    manifest = json.loads((tmp_path / "deg.csv.manifest.json").read_text())
    assert manifest["command"] == "analyze"
    assert str(gpath) in manifest["inputs"]
    assert str(csv) in manifest["outputs"]
    assert len(manifest["outputs"][str(csv)]) == 64


def test_cli_optimize_both(tmp_path):
    spath = tmp_path / "s.json"
    spath.write_text(json.dumps({
        "domains": [
            {"id": "compute", "gamma": 2.0, "lambda": 2.0, "r_min": 0.0, "r_max": 4.0},
            {"id": "content", "gamma": 2.2, "lambda": 1.8, "r_min": 0.0, "r_max": 4.0},
        ],
        "links": [{"id": "backbone", "capacity": 4.0,
                   "coeffs": {"compute": 1.0, "content": 1.0}}],
        "coupling": "auto",
    }))
    out = tmp_path / "rep.json"
    assert cli.run(["optimize", "--scenario", str(spath), "--mode", "both",
                    "--seed", "0", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["gap"] > 0
    for tag in ("isolated", "coupled"):
        trace = (tmp_path / f"rep.json.trace_{tag}.csv").read_text().splitlines()
        assert trace[0] == "iter,objective,max_violation"
        assert len(trace) > 1


def test_cli_optimize_infeasible_exit_3(tmp_path):
    spath = tmp_path / "bad.json"
    spath.write_text(json.dumps({
        "domains": [{"id": "a", "gamma": 1.0, "lambda": 0.0, "r_min": 2.0, "r_max": 5.0}],
        "links": [{"id": "l", "capacity": 1.0, "coeffs": {"a": 1.0}}],
        "coupling": "auto",
    }))
    out = tmp_path / "rep.json"
    assert cli.run(["optimize", "--scenario", str(spath), "--mode", "coupled",
                    "--out", str(out)]) == 3


def test_cli_validation_exit_2(tmp_path):
    out = tmp_path / "x.json"
    assert cli.run(["gen", "--scenario", "network", "--seed", "0", "--params",
                    str(_write(tmp_path, "p.json", {"routers": -3})),
                    "--out", str(out)]) == 2
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert cli.run(["analyze", "--in", str(bad), "--metrics", "degree",
                    "--out", str(out)]) == 2
    gpath = tmp_path / "g.json"
    cli.run(["gen", "--scenario", "network", "--seed", "0", "--out", str(gpath)])
    assert cli.run(["analyze", "--in", str(gpath), "--metrics", "nope",
                    "--out", str(out)]) == 2


def _write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_cli_simulate_consensus(tmp_path):
    gpath = tmp_path / "g.json"
    cli.run(["gen", "--scenario", "social", "--seed", "5", "--out", str(gpath)])
    out = tmp_path / "c.json"
    assert cli.run(["simulate", "--kind", "consensus", "--in", str(gpath),
                    "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["rounds"] >= 1
    trace = (out.parent / "c.json.trace.csv").read_text().splitlines()
    assert trace[0] == "round,spread"
    spreads = [float(l.split(",")[1]) for l in trace[1:]]
    assert spreads[-1] <= spreads[0]


def test_cli_simulate_cdn(tmp_path):
    gpath = tmp_path / "g.json"
    cli.run(["gen", "--scenario", "network", "--seed", "2", "--out", str(gpath)])
    out = tmp_path / "cdn.json"
    assert cli.run(["simulate", "--kind", "cdn", "--in", str(gpath), "--params",
                    str(_write(tmp_path, "kp.json", {"k": 3})), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["caches"]) == 3 and doc["expected_hops"] >= 0


def test_cli_export_dot_and_json(tmp_path):
    gpath = tmp_path / "g.json"
    cli.run(["gen", "--scenario", "multilayer", "--seed", "1", "--out", str(gpath)])
    dot = tmp_path / "g.dot"
    assert cli.run(["export", "--in", str(gpath), "--format", "dot",
                    "--out", str(dot)]) == 0
    assert dot.read_text().startswith("digraph")
    re_exported = tmp_path / "g2.json"
    assert cli.run(["export", "--in", str(gpath), "--format", "json",
                    "--out", str(re_exported)]) == 0
    assert re_exported.read_bytes() == gpath.read_bytes()


def test_cli_entry_point_subprocess(tmp_path):
    out = tmp_path / "g.json"
    proc = subprocess.run(
        [sys.executable, "-m", "versegraph.cli", "gen", "--scenario", "network",
         "--seed", "4", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert out.exists()


# -- scenario files ---------------------------------------------------------

def test_scenario_from_dict_explicit_coupling():
    s = io.scenario_from_dict({
        "domains": [
            {"id": "a", "gamma": 1.0, "lambda": 0.5, "r_min": 0.0, "r_max": 2.0},
            {"id": "b", "gamma": 1.0, "lambda": 0.5, "r_min": 0.0, "r_max": 2.0},
        ],
        "coupling": {"edges": [{"m": "a", "n": "b", "utility": True,
                                "weights": [0.5, 0.0, 2.0], "sign": -1.0}]},
    })
    e = s.coupling[0]
    assert (e.w_link, e.w_energy, e.w_util, e.sign) == (0.5, 0.0, 2.0, -1.0)
    assert e.utility


def test_scenario_from_dict_malformed():
    with pytest.raises(ValidationError):
        io.scenario_from_dict({"domains": [{"id": "a"}]})
