"""Per-node metric records, cross-node aggregation, and CSV export."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricsRecord:
    node_id: int
    index: int  # epoch during training, round during convergence
    local_acc: float
    local_loss: float
    global_acc: float
    global_loss: float
    phase: str  # train | convergence

    def __post_init__(self):
        if self.phase not in ("train", "convergence"):
            raise ValueError(f"unknown phase {self.phase!r}")
        for name in ("local_acc", "global_acc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class AggregateRow:
    index: int
    test_acc_min: float
    test_acc_median: float
    test_acc_max: float
    test_acc_p05: float | None = None
    test_acc_p95: float | None = None


def _lower_median(values: np.ndarray) -> float:
    # Fixed tie rule: lower-middle element, no interpolation for even counts.
    ordered = np.sort(values)
    return float(ordered[(ordered.size - 1) // 2])


def aggregate_across_nodes(records, include_percentiles: bool = False):
    """Per-index min/median/max of global accuracy across all nodes.

    Every node must report at every index. Raw min/max are always exported;
    optional 5th/95th percentile columns give an outlier-insensitive band
    without trimming any data.
    """
    by_index: dict[int, dict[int, float]] = {}
    node_ids = set()
    for rec in records:
        by_index.setdefault(rec.index, {})
        if rec.node_id in by_index[rec.index]:
            raise ValueError(f"duplicate record for node {rec.node_id} at index {rec.index}")
        by_index[rec.index][rec.node_id] = rec.global_acc
        node_ids.add(rec.node_id)

    rows = []
    for index in sorted(by_index):
        entry = by_index[index]
        missing = node_ids - set(entry)
        if missing:
            raise ValueError(f"missing nodes {sorted(missing)} at index {index}")
        accs = np.array([entry[n] for n in sorted(entry)])
        row = AggregateRow(
            index=index,
            test_acc_min=float(accs.min()),
            test_acc_median=_lower_median(accs),
            test_acc_max=float(accs.max()),
        )
        if include_percentiles:
            row = AggregateRow(
                index=row.index,
                test_acc_min=row.test_acc_min,
                test_acc_median=row.test_acc_median,
                test_acc_max=row.test_acc_max,
                test_acc_p05=float(np.percentile(accs, 5)),
                test_acc_p95=float(np.percentile(accs, 95)),
            )
        rows.append(row)
    return rows


def export_csv(rows, path) -> None:
    """Write aggregate rows with fixed 6-decimal formatting (bit-stable)."""
    rows = list(rows)
    with_pct = bool(rows) and rows[0].test_acc_p05 is not None
    header = "index,test_acc_min,test_acc_median,test_acc_max"
    if with_pct:
        header += ",test_acc_p05,test_acc_p95"
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for row in rows:
            line = (
                f"{row.index},{row.test_acc_min:.6f},"
                f"{row.test_acc_median:.6f},{row.test_acc_max:.6f}"
            )
            if with_pct:
                line += f",{row.test_acc_p05:.6f},{row.test_acc_p95:.6f}"
            f.write(line + "\n")


def read_csv(path):
    """Parse a file written by export_csv back into AggregateRow objects."""
    rows = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        for line in f:
            parts = line.strip().split(",")
            values = dict(zip(header, parts))
            rows.append(
                AggregateRow(
                    index=int(values["index"]),
                    test_acc_min=float(values["test_acc_min"]),
                    test_acc_median=float(values["test_acc_median"]),
                    test_acc_max=float(values["test_acc_max"]),
                    test_acc_p05=(
                        float(values["test_acc_p05"]) if "test_acc_p05" in values else None
                    ),
                    test_acc_p95=(
                        float(values["test_acc_p95"]) if "test_acc_p95" in values else None
                    ),
                )
            )
    return rows


def accuracy_drop_ratio(
    baseline_final_by_n: dict[int, float],
    candidate_final_by_n: dict[int, float],
) -> float:
    """How much less accuracy the candidate loses when the topology grows.

    Drop = accuracy at the smallest node count minus accuracy at the
    largest. Returns 1 - drop_candidate / drop_baseline, so 0 means equal
    scaling loss and 1 means the candidate loses nothing.
    """
    n_small, n_large = min(baseline_final_by_n), max(baseline_final_by_n)
    for series, name in ((baseline_final_by_n, "baseline"), (candidate_final_by_n, "candidate")):
        if n_small not in series or n_large not in series:
            raise ValueError(f"{name} series missing node count {n_small} or {n_large}")
    drop_baseline = baseline_final_by_n[n_small] - baseline_final_by_n[n_large]
    drop_candidate = candidate_final_by_n[n_small] - candidate_final_by_n[n_large]
    if drop_baseline == 0.0:
        raise ValueError("baseline accuracy drop is zero; ratio undefined")
    return 1.0 - drop_candidate / drop_baseline
