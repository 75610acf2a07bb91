"""Kernel latency on a LiDAR-sized cloud, with a doubling check.

Equivalent to ``vesselnav bench --scaling`` but prints a short table.
"""

from vesselnav.bench import run_bench

rows = [run_bench(n, 100, 30) for n in (14_400, 28_800, 57_600, 115_200)]
print(f"threads: {rows[0]['threads']}   cpus: {rows[0]['cpu_count']}")
print(f"{'points':>8} {'cbf ms':>8} {'needles ms':>11} {'Mpts/s':>7}")
for r in rows:
    print(f"{r['n_points']:>8} {r['evaluate_cbf']['median_ms']:>8.2f} {r['mariner']['median_ms']:>11.2f} "
          f"{r['evaluate_cbf']['points_per_s'] / 1e6:>7.1f}")
