"""Analytical per-node throughput scenarios, in model updates per second.

Gossip traffic scales with how many neighbors each node talks to, so the
scenarios extrapolate a measured baseline rate by average connectivity
(physically growing topology), hold it constant, or grow it with node
density. The federated baseline is periodic updates plus a synchronization
every fixed number of updates.
"""

from __future__ import annotations

from dataclasses import dataclass

SCENARIO_KINDS = ("expected", "constant_connectivity", "connectivity_increase", "fedavg")


@dataclass(frozen=True)
class ThroughputScenario:
    baseline_rate: float
    reference_n: int
    reference_avg_conn: float
    kind: str
    update_interval_s: float = 5.0
    sync_every_updates: float = 20.0

    def __post_init__(self):
        if self.baseline_rate <= 0:
            raise ValueError("baseline_rate must be positive")
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.update_interval_s <= 0 or self.sync_every_updates <= 0:
            raise ValueError("intervals must be positive")


def fedavg_rate(update_interval_s: float, sync_every_updates: float) -> float:
    """Updates/s for periodic updates plus one sync every sync_every updates."""
    if update_interval_s <= 0 or sync_every_updates <= 0:
        raise ValueError("intervals must be positive")
    # Single division keeps round numbers exact: 1/i + 1/(i*s) == (s+1)/(i*s).
    return (sync_every_updates + 1.0) / (update_interval_s * sync_every_updates)


def expected_rate(baseline: float, ref_conn: float, conn_at_n: float) -> float:
    """Baseline scaled by average connectivity (physically growing topology)."""
    if baseline <= 0 or ref_conn <= 0 or conn_at_n <= 0:
        raise ValueError("rates and connectivities must be positive")
    return baseline * conn_at_n / ref_conn


def constant_connectivity_rate(baseline: float) -> float:
    """Flat series: connectivity pinned at the reference value."""
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    return baseline


def connectivity_increase_rate(
    baseline: float,
    ref_n: int,
    n: int,
    density_exponent: float = 1.0,
) -> float:
    """Node density grows in a fixed-size area: baseline * (n/ref_n)^exponent."""
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    if n < ref_n:
        raise ValueError("n must be >= the reference node count")
    if density_exponent < 0:
        raise ValueError("density_exponent must be non-negative")
    return baseline * (n / ref_n) ** density_exponent


def scenario_table(
    baseline: float,
    ref_n: int,
    ref_conn: float,
    node_counts,
    conns,
    density_exponent: float = 1.0,
    update_interval_s: float = 5.0,
    sync_every_updates: float = 20.0,
):
    """All scenario series over a (node count, connectivity) grid.

    Returns a list of dict rows keyed n, conn, expected,
    constant_connectivity, connectivity_increase, fedavg.
    """
    node_counts = list(node_counts)
    conns = list(conns)
    if len(node_counts) != len(conns):
        raise ValueError("need one connectivity value per node count")
    rows = []
    for n, conn in zip(node_counts, conns):
        rows.append(
            {
                "n": n,
                "conn": conn,
                "expected": expected_rate(baseline, ref_conn, conn),
                "constant_connectivity": constant_connectivity_rate(baseline),
                "connectivity_increase": connectivity_increase_rate(
                    baseline, ref_n, n, density_exponent
                ),
                "fedavg": fedavg_rate(update_interval_s, sync_every_updates),
            }
        )
    return rows
