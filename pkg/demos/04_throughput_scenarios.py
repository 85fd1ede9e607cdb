"""Analytical per-node network throughput for gossip vs federated setups.

Extrapolates a measured 10-node baseline across topology sizes under three
connectivity assumptions, next to the periodic federated-update rate.
"""

from deltagossip.netmodel import fedavg_rate, scenario_table

BASELINE = 1.77065882205598  # measured updates/s on the 10-node reference
rows = scenario_table(
    baseline=BASELINE,
    ref_n=10,
    ref_conn=3.3,
    node_counts=[10, 25, 50],
    conns=[3.3, 3.2, 4.2],
)

print(f"{'N':>4} {'conn':>5} {'expected':>9} {'constant':>9} {'densify':>9} {'fedavg':>7}")
for row in rows:
    print(
        f"{row['n']:>4} {row['conn']:>5.2f} {row['expected']:>9.4f} "
        f"{row['constant_connectivity']:>9.4f} "
        f"{row['connectivity_increase']:>9.4f} {row['fedavg']:>7.3f}"
    )

ratio = BASELINE / fedavg_rate(5, 20)
print(f"\nper-node gossip-to-federated rate ratio at the reference point: {ratio:.1f}x")
print("gossip pays for decentralization with traffic; it scales with connectivity")
