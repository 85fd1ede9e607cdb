"""Synchronous round simulation of gossip training over a topology.

Every node trains one epoch per round from an identical starting model. At
each integration point all nodes package a (base, delta) update against
their last snapshot, updates travel to topology neighbors (optionally
flooded further), and every node merges its inbox with the configured
strategy. After training, convergence rounds average full models with
neighbors until the cluster agrees.

Rounds are barriers: all sends are computed from pre-round state, and
integration happens in ascending node order, so runs are bit-reproducible
regardless of how much intra-epoch training runs in parallel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .aggregation import (
    IntegrationStrategy,
    ModelUpdate,
    average_full_models,
    delta_sum_integrate,
    fedavg_integrate,
    sample_weighted_integrate,
    variance_corrected_average,
)
from .dataset import DatasetShard, ShardPlan, shard_equal
from .metrics import MetricsRecord
from .model import ModelConfig, TrainableModel, evaluate, init_weights, train_epochs
from .params import ParameterVector
from .topology import TopologyConstraints, TopologyGraph, validate as validate_topology


class SimulationError(RuntimeError):
    """Simulation aborted; the message carries node/epoch context."""


@dataclass(frozen=True)
class SimSchedule:
    train_epochs: int = 200
    integrate_every: int = 20
    convergence_until_round: int = 235
    batch_size: int = 32

    def __post_init__(self):
        if self.train_epochs < 1 or self.integrate_every < 1 or self.batch_size < 1:
            raise ValueError("schedule fields must be positive")
        if self.train_epochs % self.integrate_every != 0:
            raise ValueError("integrate_every must divide train_epochs")
        if self.convergence_until_round < self.train_epochs:
            raise ValueError("convergence_until_round must be >= train_epochs")


@dataclass(frozen=True)
class Forwarding:
    mode: str = "first_hop"  # first_hop | multi_hop
    max_hops: int = 1

    def __post_init__(self):
        if self.mode == "first_hop_only":  # accepted spelling
            object.__setattr__(self, "mode", "first_hop")
        if self.mode not in ("first_hop", "multi_hop"):
            raise ValueError(f"unknown forwarding mode {self.mode!r}")
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


@dataclass(frozen=True)
class GossipMessage:
    key: str
    update: ModelUpdate
    hop_count: int = 1

    def __post_init__(self):
        if self.hop_count < 1:
            raise ValueError("hop_count must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    topology: TopologyGraph
    strategy: IntegrationStrategy
    schedule: SimSchedule
    model_config: ModelConfig
    shard_plan: ShardPlan
    seed: int = 0
    forwarding: Forwarding = field(default_factory=Forwarding)
    gossip_key: str = "model"

    def __post_init__(self):
        if self.topology.node_count < 2:
            raise ValueError("simulation needs at least 2 nodes")
        if self.shard_plan.node_count != self.topology.node_count:
            raise ValueError("shard plan and topology disagree on node count")


class NodeState:
    """One simulated node: model, data, snapshot, and this round's inbox."""

    def __init__(self, node_id: int, model: TrainableModel,
                 train_shard: DatasetShard, local_val: DatasetShard):
        self.node_id = node_id
        self.model = model
        self.train_shard = train_shard
        self.local_val = local_val
        self.epoch_counter = 0
        self.base_snapshot = model.weights
        self.snapshot_epoch = 0
        self.inbox: dict[tuple[int, int], ModelUpdate] = {}
        self.seen: set[tuple[int, int]] = set()

    def train_one_epoch(self, batch_size: int) -> None:
        train_epochs(
            self.model, self.train_shard, 1, batch_size, start_epoch=self.epoch_counter
        )
        self.epoch_counter += 1

    def package_update(self, round_index: int) -> ModelUpdate:
        """Base snapshot plus everything learned since it was taken.

        The model is recomposed as base + delta so that receivers
        reconstruct this node's weights bitwise.
        """
        epochs_done = self.epoch_counter - self.snapshot_epoch
        delta = self.model.weights - self.base_snapshot
        self.model.weights = self.base_snapshot + delta
        return ModelUpdate(
            node_id=self.node_id,
            round=round_index,
            base=self.base_snapshot,
            delta=delta,
            sample_count=self.train_shard.size * epochs_done,
            epochs=epochs_done,
        )

    def receive(self, update: ModelUpdate) -> None:
        key = (update.node_id, update.round)
        if key in self.seen:
            raise SimulationError(
                f"node {self.node_id} received duplicate update {key}"
            )
        self.seen.add(key)
        self.inbox[key] = update


def disseminate(graph: TopologyGraph, sender: int, message: GossipMessage,
                forwarding: Forwarding) -> set[int]:
    """Which nodes receive the message; the sender never delivers to itself.

    first_hop reaches exactly the sender's neighbors. multi_hop floods out
    to max_hops, with each node accepting a given (sender, round) once no
    matter how many paths reach it.
    """
    if not 0 <= sender < graph.node_count:
        raise ValueError(f"unknown sender {sender}")
    if forwarding.mode == "first_hop":
        return set(graph.adjacency[sender])
    delivered: set[int] = set()
    accepted = {sender}
    frontier = [sender]
    for _ in range(forwarding.max_hops):
        nxt = []
        for node in frontier:
            for neighbor in graph.adjacency[node]:
                if neighbor not in accepted:
                    accepted.add(neighbor)
                    delivered.add(neighbor)
                    nxt.append(neighbor)
        frontier = nxt
    return delivered


def node_train_phase(state: NodeState, epochs: int, batch_size: int,
                     round_index: int) -> ModelUpdate:
    """Train the given number of epochs, then package the resulting update."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    for _ in range(epochs):
        state.train_one_epoch(batch_size)
    return state.package_update(round_index)


def integration_step(
    state: NodeState,
    strategy: IntegrationStrategy,
    t: int,
    local_update: ModelUpdate | None = None,
) -> ParameterVector:
    """Merge the node's inbox with its own progress under one strategy.

    For delta_sum the local node contributes its own base and delta
    alongside the remote updates. The averaging baselines reconstruct full
    models (base + delta) and average those. FedAvg-style strategies apply
    sample-weighted deltas on top of the node's base snapshot. Afterwards
    the merged weights become the new base snapshot and the inbox is
    cleared.
    """
    if local_update is None:
        local_update = state.package_update(round_index=-1)
    remotes = sorted(state.inbox.values(), key=lambda u: u.node_id)

    kind = strategy.kind
    if kind == "delta_sum":
        new_weights = delta_sum_integrate(local_update, remotes, strategy.schedule, t)
    elif kind in ("standard_averaging", "variance_corrected"):
        models = [u.full_model() for u in sorted([local_update, *remotes],
                                                 key=lambda u: u.node_id)]
        if kind == "standard_averaging":
            new_weights = average_full_models(models)
        else:
            new_weights = variance_corrected_average(models)
    elif kind == "fedavg":
        new_weights = fedavg_integrate(state.base_snapshot, [local_update, *remotes])
    elif kind == "sample_weighted":
        new_weights = sample_weighted_integrate(
            state.base_snapshot, [local_update, *remotes]
        )
    else:  # pragma: no cover - IntegrationStrategy already validated
        raise ValueError(f"unknown strategy {kind!r}")

    state.model.weights = new_weights
    state.base_snapshot = new_weights
    state.snapshot_epoch = state.epoch_counter
    state.inbox.clear()
    return new_weights


def convergence_round(states, graph: TopologyGraph) -> None:
    """One synchronous round of plain full-model neighborhood averaging."""
    snapshot = [s.model.weights for s in states]
    for i, state in enumerate(states):
        group = [snapshot[i]] + [snapshot[j] for j in graph.adjacency[i]]
        state.model.weights = average_full_models(group)


def _for_each(states, fn, pool):
    if pool is None:
        return [fn(s) for s in states]
    return list(pool.map(fn, states))


def run_simulation(
    config: SimConfig,
    dataset: DatasetShard,
    global_val: DatasetShard | None = None,
    threads: int = 1,
    observer=None,
) -> list[MetricsRecord]:
    """Full training + convergence schedule; one record per node per index.

    ``observer(phase, index, states)``, when given, is called after every
    completed epoch/round; results are independent of ``threads``.
    """
    graph = config.topology
    report = validate_topology(
        graph, TopologyConstraints(min_degree=1, max_degree=max(1, graph.node_count - 1))
    )
    if not report.connected:
        raise ValueError("topology must be connected")

    per_node, gval = shard_equal(dataset, config.shard_plan, global_val=global_val)
    start = init_weights(config.model_config)
    states = [
        NodeState(i, TrainableModel(config.model_config, start.copy()), train, lval)
        for i, (train, lval) in enumerate(per_node)
    ]

    schedule = config.schedule
    records: list[MetricsRecord] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def record_all(index: int, phase: str) -> None:
        results = _for_each(
            states,
            lambda s: (evaluate(s.model, s.local_val), evaluate(s.model, gval)),
            pool,
        )
        for state, ((lacc, lloss), (gacc, gloss)) in zip(states, results):
            records.append(
                MetricsRecord(
                    node_id=state.node_id,
                    index=index,
                    local_acc=lacc,
                    local_loss=lloss,
                    global_acc=gacc,
                    global_loss=gloss,
                    phase=phase,
                )
            )

    try:
        for epoch in range(1, schedule.train_epochs + 1):

            def train_one(state):
                try:
                    state.train_one_epoch(schedule.batch_size)
                except (ValueError, FloatingPointError) as err:
                    raise SimulationError(
                        f"node {state.node_id} epoch {epoch}: {err}"
                    ) from err

            _for_each(states, train_one, pool)

            if epoch % schedule.integrate_every == 0:
                round_index = epoch // schedule.integrate_every
                updates = [s.package_update(round_index) for s in states]
                for state, update in zip(states, updates):
                    message = GossipMessage(key=config.gossip_key, update=update)
                    for receiver in sorted(
                        disseminate(graph, state.node_id, message, config.forwarding)
                    ):
                        states[receiver].receive(update)
                for state, update in zip(states, updates):
                    integration_step(
                        state, config.strategy, t=state.epoch_counter, local_update=update
                    )

            record_all(epoch, "train")
            if observer is not None:
                observer("train", epoch, states)

        for rnd in range(schedule.train_epochs + 1, schedule.convergence_until_round + 1):
            convergence_round(states, graph)
            record_all(rnd, "convergence")
            if observer is not None:
                observer("convergence", rnd, states)
    finally:
        if pool is not None:
            pool.shutdown()

    return records
