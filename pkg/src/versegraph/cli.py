"""Command-line entry point.

Subcommands: gen, analyze, partition, optimize, simulate, export.  Every
command writes its declared outputs plus a run manifest
(``<out>.manifest.json``) with the resolved configuration and input/output
digests; identical invocations produce byte-identical files.

Exit codes: 0 success, 2 input validation failure, 3 infeasible optimization
scenario, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__, analytics, crossopt, io, partition, scenario as scen
from .core import TemporalMultiLayerGraph
from .errors import ConvergenceError, InfeasibleError, ValidationError


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(command: str, config: dict, seed, inputs: list[str], outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {p: _sha256(p) for p in sorted(inputs)},
        "outputs": {p: _sha256(p) for p in sorted(outputs)},
        "tool_version": __version__,
    }
    io.dump_json(manifest, outputs[0] + ".manifest.json")


def _load_params(path: str | None) -> dict:
    if path is None:
        return {}
    doc = io.load_json(path)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: params file must hold a JSON object")
    return doc


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

GEN_DEFAULTS = {
    "network": {"routers": 10, "servers": 4, "devices": 12},
    "social": {"users": 20},
    "cms": {"admins": 3, "items": 10},
    "multilayer": {"routers": 8, "servers": 3, "devices": 6, "users": 10,
                   "admins": 2, "items": 6},
}


def _build_graph(name: str, seed: int, params: dict) -> TemporalMultiLayerGraph:
    if name not in GEN_DEFAULTS:
        raise ValidationError(f"unknown generator scenario {name!r}")
    merged = {**GEN_DEFAULTS[name], **params, "seed": seed}
    cfg = scen.GeneratorConfig(**merged)
    g = TemporalMultiLayerGraph()
    if name == "network":
        scen.gen_network_layer(g, cfg)
    elif name == "social":
        scen.gen_social_layer(g, cfg)
    elif name == "cms":
        scen.gen_cms_bipartite(g, cfg)
    else:
        net = scen.gen_network_layer(g, cfg)
        social = scen.gen_social_layer(g, cfg)
        content = scen.gen_cms_bipartite(g, cfg)
        rng = np.random.default_rng(cfg.seed + 1)
        users = [v for v in g.vertex_records.values() if "user" in v.roles]
        items = [v for v in g.vertex_records.values() if "content-item" in v.roles]
        servers = [v for v in g.vertex_records.values() if "server" in v.roles]
        for u in users:
            if items and rng.random() < 0.5:
                item = items[int(rng.integers(len(items)))]
                g.add_edge(u.id, item.id, social, content, directed=True,
                           weight=1.0, relation="authors", t_start=0)
            if servers and rng.random() < 0.3:
                srv = servers[int(rng.integers(len(servers)))]
                g.add_edge(u.id, srv.id, social, net, directed=True,
                           weight=1.0, relation="session", t_start=0)
    return g


def _cmd_gen(args) -> list[str]:
    params = _load_params(args.params)
    g = _build_graph(args.scenario, args.seed, params)
    io.export_graph(g, args.out)
    return [args.out]


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _view_for(g: TemporalMultiLayerGraph, layer: str | None, at: int):
    snap = g.snapshot_at(at)
    if layer is None or layer == "all":
        return snap.flatten()
    return snap.layer_subgraph(g.layer_id(layer))


def _cmd_analyze(args) -> list[str]:
    g = io.import_graph(args.infile)
    view = _view_for(g, args.layer, args.at)
    rows = []
    for metric in args.metrics.split(","):
        metric = metric.strip()
        if metric == "degree":
            rep = analytics.degree_centrality(view)
            rows += [(metric, v, s) for v, s in rep.sorted_items()]
        elif metric == "betweenness":
            rep = analytics.betweenness_centrality(view)
            rows += [(metric, v, s) for v, s in rep.sorted_items()]
        elif metric == "clustering":
            rows += [(metric, v, analytics.clustering_coefficient(view, v)) for v in view.vertices]
        elif metric == "components":
            lab = analytics.weakly_connected_components(view)
            rows += [(metric, v, float(lab.labels[v])) for v in sorted(lab.labels)]
        else:
            raise ValidationError(f"unknown metric {metric!r}")
    with open(args.out, "w") as fh:
        fh.write("metric,vertex_id,score\n")
        for metric, v, s in rows:
            fh.write(f"{metric},{v},{s!r}\n")
    return [args.out]


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------

def _cmd_partition(args) -> list[str]:
    g = io.import_graph(args.infile)
    view = _view_for(g, args.layer, args.at)
    result = partition.spectral_kway(view, args.k) if args.k > 2 else partition.spectral_bisection(view)
    doc = {
        "assignment": {str(v): b for v, b in sorted(result.assignment.items())},
        "cut_edges": result.cut_edges,
        "block_sizes": list(result.block_sizes),
    }
    io.dump_json(doc, args.out)
    print(f"cut_edges={result.cut_edges} blocks={list(result.block_sizes)}")
    return [args.out]


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def _cmd_optimize(args) -> list[str]:
    s = io.load_scenario(args.scenario)
    outputs = [args.out]
    if args.mode == "both":
        rep = crossopt.compare(s, args.seed)
        io.dump_json(io.report_to_dict(rep), args.out)
        for tag, trace in (("isolated", rep.trace_isolated), ("coupled", rep.trace_coupled)):
            tpath = args.out + f".trace_{tag}.csv"
            with open(tpath, "w") as fh:
                fh.write(io.trace_to_csv(trace))
            outputs.append(tpath)
    else:
        trace: list = []
        r = crossopt.optimize(s, args.mode, args.seed, trace)
        doc = {
            "mode": args.mode,
            "seed": args.seed,
            "allocation": [float(x) for x in r],
            "objective": crossopt.objective(r, s, args.mode),
            "max_violation": crossopt.max_violation(s, r),
        }
        io.dump_json(doc, args.out)
        tpath = args.out + ".trace.csv"
        with open(tpath, "w") as fh:
            fh.write(io.trace_to_csv(trace))
        outputs.append(tpath)
    return outputs


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> list[str]:
    params = _load_params(args.params)
    g = io.import_graph(args.infile)
    view = _view_for(g, params.get("layer"), int(params.get("at", 0)))
    outputs = [args.out]
    if args.kind == "consensus":
        tol = float(params.get("tol", 1e-6))
        values = {v: float(params["values"][str(v)]) if "values" in params else float(v)
                  for v in view.vertices}
        rounds, final = scen.consensus_sim(values, view, tol)
        io.dump_json({"rounds": rounds, "final_value": final, "tol": tol}, args.out)
        # per-round spread trace for plotting
        tpath = args.out + ".trace.csv"
        x = dict(values)
        with open(tpath, "w") as fh:
            fh.write("round,spread\n")
            for rnd in range(rounds + 1):
                spread = max(x.values()) - min(x.values())
                fh.write(f"{rnd},{spread!r}\n")
                if rnd < rounds:
                    x = _consensus_step(view, x)
        outputs.append(tpath)
    elif args.kind == "consistency":
        storage = sorted(v.id for v in g.vertex_records.values()
                         if "storage-node" in v.roles) or list(view.vertices)
        items = list(range(int(params.get("items", 4))))
        r = int(params.get("replication", min(2, len(storage))))
        placement = scen.replicate_items(items, storage, r)
        updates = {int(i): {int(n): int(ver) for n, ver in u.items()}
                   for i, u in params.get("updates", {}).items()}
        if not updates and items and placement.mapping[items[0]]:
            updates = {items[0]: {placement.mapping[items[0]][0]: 1}}
        result = scen.consistency_sim(placement, view, updates)
        io.dump_json(
            {"rounds": {str(i): r for i, r in sorted(result.rounds.items())},
             "divergent": sorted(result.divergent)},
            args.out,
        )
    elif args.kind == "cdn":
        k = int(params.get("k", 2))
        demand = None
        if "demand" in params:
            demand = {int(v): float(w) for v, w in params["demand"].items()}
        caches, cost = scen.cdn_place_caches(view, k, demand)
        io.dump_json({"caches": caches, "expected_hops": cost, "k": k}, args.out)
    else:
        raise ValidationError(f"unknown simulation kind {args.kind!r}")
    return outputs


def _consensus_step(view, values: dict[int, float]) -> dict[int, float]:
    pairs = sorted({(min(e.src, e.dst), max(e.src, e.dst)) for e in view.edges if e.src != e.dst})
    nxt = dict(values)
    for a, b in pairs:
        w = 1.0 / (1.0 + max(view.degree(a), view.degree(b)))
        d = w * (values[b] - values[a])
        nxt[a] += d
        nxt[b] -= d
    return nxt


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _cmd_export(args) -> list[str]:
    g = io.import_graph(args.infile)
    if args.format == "json":
        io.export_graph(g, args.out)
    elif args.format == "dot":
        with open(args.out, "w") as fh:
            fh.write(io.snapshot_to_dot(g.snapshot_at(args.at)))
    else:
        raise ValidationError(f"unknown format {args.format!r}")
    return [args.out]


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="versegraph")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded multilayer graph")
    g.add_argument("--scenario", required=True, choices=sorted(GEN_DEFAULTS))
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--params", default=None)
    g.add_argument("--out", required=True)

    a = sub.add_parser("analyze", help="per-layer structural metrics to CSV")
    a.add_argument("--in", dest="infile", required=True)
    a.add_argument("--layer", default=None)
    a.add_argument("--metrics", required=True)
    a.add_argument("--at", type=int, default=0)
    a.add_argument("--out", required=True)

    q = sub.add_parser("partition", help="spectral partition of a layer")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--layer", default=None)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--at", type=int, default=0)
    q.add_argument("--out", required=True)

    o = sub.add_parser("optimize", help="cross-domain allocation optimization")
    o.add_argument("--scenario", required=True)
    o.add_argument("--mode", required=True, choices=["isolated", "coupled", "both"])
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="consensus / consistency / cdn simulations")
    s.add_argument("--kind", required=True, choices=["consensus", "consistency", "cdn"])
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--params", default=None)
    s.add_argument("--out", required=True)

    e = sub.add_parser("export", help="re-export a graph as json or dot")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--format", required=True, choices=["json", "dot"])
    e.add_argument("--at", type=int, default=0)
    e.add_argument("--out", required=True)
    return p


_COMMANDS = {
    "gen": (_cmd_gen, ["params"]),
    "analyze": (_cmd_analyze, ["infile"]),
    "partition": (_cmd_partition, ["infile"]),
    "optimize": (_cmd_optimize, ["scenario"]),
    "simulate": (_cmd_simulate, ["infile", "params"]),
    "export": (_cmd_export, ["infile"]),
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler, input_attrs = _COMMANDS[args.command]
    try:
        outputs = handler(args)
        inputs = [p for attr in input_attrs if (p := getattr(args, attr, None))]
        config = {k: v for k, v in sorted(vars(args).items()) if k != "command"}
        _write_manifest(args.command, config, getattr(args, "seed", None), inputs, outputs)
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
