"""Command-line entry point for reproducible experiments.

Subcommands: gen-topology (write a constrained random graph), run (full
training/convergence experiment from a JSON config, one metrics CSV per
strategy plus a summary), netmodel (analytical throughput table).
All randomness flows from config seeds; thread count never changes output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .aggregation import IntegrationStrategy, LambdaSchedule, STRATEGY_KINDS
from .dataset import DatasetShard, ShardPlan, load_idx, synth_classification
from .gossipsim import Forwarding, SimConfig, SimSchedule, run_simulation
from .metrics import accuracy_drop_ratio, aggregate_across_nodes, export_csv
from .model import ModelConfig
from .netmodel import fedavg_rate, scenario_table
from .topology import (
    TopologyConstraints,
    generate_semi_random,
    read_edge_list,
    stats,
    validate,
    write_descriptor,
    write_edge_list,
)

THREADS_ENV = "DELTAGOSSIP_THREADS"


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing {key!r} in {where}")
    return mapping[key]


def _load_dataset(spec: dict, default_seed: int):
    """Build (dataset, global_val_or_None, class_count) from a config block."""
    kind = _require(spec, "kind", "dataset")
    if kind == "synthetic":
        data = synth_classification(
            classes=_require(spec, "classes", "dataset"),
            dim=_require(spec, "dim", "dataset"),
            per_class=_require(spec, "per_class", "dataset"),
            seed=spec.get("seed", default_seed),
            noise_sigma=spec.get("noise_sigma", 0.05),
        )
        return data, None, int(data.labels.max()) + 1
    if kind == "idx":
        for key in ("train_images", "train_labels"):
            path = _require(spec, key, "dataset")
            if not Path(path).exists():
                raise ConfigError(f"dataset file not found: {path}")
        downsample = spec.get("downsample", 1)
        data = load_idx(spec["train_images"], spec["train_labels"], downsample)
        global_val = None
        if "test_images" in spec or "test_labels" in spec:
            for key in ("test_images", "test_labels"):
                path = _require(spec, key, "dataset")
                if not Path(path).exists():
                    raise ConfigError(f"dataset file not found: {path}")
            test = load_idx(spec["test_images"], spec["test_labels"], downsample)
            global_val = DatasetShard(test.inputs, test.labels, origin="global_val")
        labels_max = int(data.labels.max())
        if global_val is not None:
            labels_max = max(labels_max, int(global_val.labels.max()))
        return data, global_val, labels_max + 1
    raise ConfigError(f"unknown dataset kind {kind!r}")


def _load_topology(spec: dict, default_seed: int):
    """One topology entry: inline generation or an edge-list file."""
    if "path" in spec:
        path = spec["path"]
        if not Path(path).exists():
            raise ConfigError(f"topology file not found: {path}")
        return read_edge_list(path)
    constraints = TopologyConstraints(
        min_degree=spec.get("min_degree", 1),
        max_degree=spec.get("max_degree", 8),
        target_avg_degree=_require(spec, "target_avg_degree", "topology"),
    )
    return generate_semi_random(
        _require(spec, "nodes", "topology"),
        constraints,
        seed=spec.get("seed", default_seed),
    )


def _build_experiment(config: dict, seed_override: int | None):
    seed = config.get("seed", 0)
    if seed_override is not None:
        seed = seed_override

    dataset, global_val, class_count = _load_dataset(
        _require(config, "dataset", "config"), default_seed=seed + 1
    )

    topo_specs = config.get("topologies")
    if topo_specs is None and "topology" in config:
        topo_specs = [config["topology"]]
    if not topo_specs:
        raise ConfigError("config needs a 'topologies' list or a 'topology' entry")
    topologies = [
        _load_topology(spec, default_seed=seed + 2 + i)
        for i, spec in enumerate(topo_specs)
    ]

    strategies = config.get("strategies", [])
    if not strategies:
        raise ConfigError("config needs a non-empty 'strategies' list")
    for name in strategies:
        if name not in STRATEGY_KINDS:
            raise ConfigError(f"unknown strategy {name!r}; choose from {STRATEGY_KINDS}")

    lam = config.get("lambda_schedule", {})
    schedule_obj = LambdaSchedule(
        offset=lam.get("offset", 0.15),
        slope_divisor=lam.get("slope_divisor", 1000.0),
        cap=lam.get("cap", 0.35),
    )

    model_spec = config.get("model", {})
    model_config = ModelConfig(
        input_dim=dataset.dim,
        class_count=class_count,
        hidden_dim=model_spec.get("hidden_dim", 0),
        learning_rate=model_spec.get("learning_rate", 0.05),
        seed=model_spec.get("seed", seed),
    )

    sched_spec = config.get("schedule", {})
    sim_schedule = SimSchedule(
        train_epochs=sched_spec.get("train_epochs", 200),
        integrate_every=sched_spec.get("integrate_every", 20),
        convergence_until_round=sched_spec.get("convergence_until_round", 235),
        batch_size=sched_spec.get("batch_size", 32),
    )

    shard_spec = config.get("shards", {})
    fwd_spec = config.get("forwarding", {})
    forwarding = Forwarding(
        mode=fwd_spec.get("mode", "first_hop"),
        max_hops=fwd_spec.get("max_hops", 1),
    )

    runs = []
    for graph in topologies:
        plan = ShardPlan(
            node_count=graph.node_count,
            train_fraction=shard_spec.get("train_fraction", 0.8),
            seed=shard_spec.get("seed", seed + 3),
        )
        for name in strategies:
            strategy = IntegrationStrategy(
                kind=name,
                schedule=schedule_obj if name == "delta_sum" else None,
            )
            runs.append(
                SimConfig(
                    topology=graph,
                    strategy=strategy,
                    schedule=sim_schedule,
                    model_config=model_config,
                    shard_plan=plan,
                    seed=seed,
                    forwarding=forwarding,
                )
            )
    return dataset, global_val, runs


def cmd_run(args) -> int:
    try:
        with open(args.config) as f:
            config = json.load(f)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as err:
        print(f"error: config is not valid JSON: {err}", file=sys.stderr)
        return 1

    if args.strategy:
        config["strategies"] = args.strategy

    try:
        dataset, global_val, runs = _build_experiment(config, args.seed)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    out_dir = Path(args.out or config.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = _resolve_threads(args.threads)

    summary = {"runs": [], "drop_ratios": {}}
    final_by_strategy: dict[str, dict[int, float]] = {}
    for sim in runs:
        n = sim.topology.node_count
        name = sim.strategy.kind
        records = run_simulation(sim, dataset, global_val=global_val, threads=threads)
        rows = aggregate_across_nodes(records)
        csv_path = out_dir / f"{n}nodes_{name}.csv"
        export_csv(rows, csv_path)
        last = rows[-1]
        final_by_strategy.setdefault(name, {})[n] = last.test_acc_median
        summary["runs"].append(
            {
                "nodes": n,
                "strategy": name,
                "csv": str(csv_path),
                "final": {
                    "min": last.test_acc_min,
                    "median": last.test_acc_median,
                    "max": last.test_acc_max,
                },
            }
        )
        print(
            f"{n:>3} nodes  {name:<20} final global acc "
            f"median={last.test_acc_median:.4f} "
            f"range=[{last.test_acc_min:.4f}, {last.test_acc_max:.4f}]"
        )

    sizes = {run["nodes"] for run in summary["runs"]}
    if len(sizes) >= 2 and "delta_sum" in final_by_strategy:
        for name, series in final_by_strategy.items():
            if name == "delta_sum" or len(series) < 2:
                continue
            try:
                ratio = accuracy_drop_ratio(series, final_by_strategy["delta_sum"])
            except ValueError:
                continue
            summary["drop_ratios"][f"delta_sum_vs_{name}"] = ratio
            print(f"accuracy-drop ratio (delta_sum vs {name}): {ratio:.3f}")

    summary_path = out_dir / "summary.json"
    with open(summary_path, "w", newline="") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {summary_path}")
    return 0


def cmd_gen_topology(args) -> int:
    constraints = TopologyConstraints(
        min_degree=args.min_degree,
        max_degree=args.max_degree,
        target_avg_degree=args.target_avg_degree,
    )
    try:
        graph = generate_semi_random(args.nodes, constraints, args.seed)
    except (ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    edge_path = Path(str(args.out) + ".edges")
    json_path = Path(str(args.out) + ".json")
    edge_path.parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(graph, edge_path)
    write_descriptor(json_path, graph, args.seed, constraints, str(edge_path))
    info = stats(graph)
    report = validate(graph, constraints)
    print(f"wrote {edge_path} and {json_path}")
    print(
        f"nodes={graph.node_count} edges={graph.edge_count} "
        f"avg_degree={info.avg_degree:.2f} diameter={info.diameter} "
        f"bridges={info.bridge_count} connected={report.connected}"
    )
    return 0


def cmd_netmodel(args) -> int:
    node_counts = args.nodes or [10, 25, 50]
    conns = args.conn or [3.3, 3.2, 4.2]
    if len(node_counts) != len(conns):
        print("error: need one --conn per --nodes value", file=sys.stderr)
        return 1
    rows = scenario_table(
        baseline=args.baseline,
        ref_n=args.ref_n,
        ref_conn=args.ref_conn,
        node_counts=node_counts,
        conns=conns,
        density_exponent=args.density_exponent,
        update_interval_s=args.fedavg_interval,
        sync_every_updates=args.fedavg_sync_every,
    )
    header = f"{'N':>5} {'conn':>6} {'expected':>10} {'const_conn':>10} {'conn_incr':>10} {'fedavg':>8}"
    print(header)
    for row in rows:
        print(
            f"{row['n']:>5} {row['conn']:>6.2f} {row['expected']:>10.5f} "
            f"{row['constant_connectivity']:>10.5f} "
            f"{row['connectivity_increase']:>10.5f} {row['fedavg']:>8.3f}"
        )
    ratio = args.baseline / fedavg_rate(args.fedavg_interval, args.fedavg_sync_every)
    print(
        f"gossip/federated per-node rate at reference point: {ratio:.2f}x "
        "(nominal cluster-wide traffic multiple: ~5x)"
    )
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            f.write("n,conn,expected,constant_connectivity,connectivity_increase,fedavg\n")
            for row in rows:
                f.write(
                    f"{row['n']},{row['conn']:.6f},{row['expected']:.6f},"
                    f"{row['constant_connectivity']:.6f},"
                    f"{row['connectivity_increase']:.6f},{row['fedavg']:.6f}\n"
                )
        print(f"wrote {args.csv}")
    return 0


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltagossip",
        description="Deterministic gossip-learning experiments and throughput models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_topo = sub.add_parser("gen-topology", help="generate a constrained random topology")
    p_topo.add_argument("--nodes", type=int, required=True)
    p_topo.add_argument("--target-avg-degree", type=float, required=True)
    p_topo.add_argument("--seed", type=int, default=0)
    p_topo.add_argument("--min-degree", type=int, default=1)
    p_topo.add_argument("--max-degree", type=int, default=8)
    p_topo.add_argument("--out", required=True, help="output prefix (.edges/.json)")
    p_topo.set_defaults(func=cmd_gen_topology)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.add_argument(
        "--strategy",
        action="append",
        help="strategy to run (repeatable; overrides config list)",
    )
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument(
        "--threads",
        type=int,
        help=f"worker threads for node training (default ${THREADS_ENV} or 1); "
        "never changes results",
    )
    p_run.set_defaults(func=cmd_run)

    p_net = sub.add_parser("netmodel", help="print analytical throughput scenarios")
    p_net.add_argument("--baseline", type=float, default=1.77065882205598)
    p_net.add_argument("--ref-n", type=int, default=10)
    p_net.add_argument("--ref-conn", type=float, default=3.3)
    p_net.add_argument("--nodes", action="append", type=int)
    p_net.add_argument("--conn", action="append", type=float)
    p_net.add_argument("--density-exponent", type=float, default=1.0)
    p_net.add_argument("--fedavg-interval", type=float, default=5.0)
    p_net.add_argument("--fedavg-sync-every", type=float, default=20.0)
    p_net.add_argument("--csv", help="also export the grid as CSV")
    p_net.set_defaults(func=cmd_netmodel)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
