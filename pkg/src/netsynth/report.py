"""Benchmark sweeps written as CSV, with matplotlib figures saved next to the table."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .bench import BenchParams, generate
from .synth import ALGORITHMS, SynthOptions

COLUMNS = [
    "nodes", "updating", "impossible", "seed", "algorithm", "cex_learning", "result",
    "model_check_calls", "loop_check_calls", "configs_visited", "configs_pruned_by_cex",
    "backtracks", "wall_time_ms",
]


@dataclass(frozen=True)
class SweepPoint:
    nodes: int
    updating: int
    impossible: bool
    seed: int
    algorithm: str
    cex_learning: bool = True


def run_point(pt: SweepPoint, max_visited: int | None = None) -> dict:
    inst = generate(BenchParams(pt.nodes, pt.updating, impossible=pt.impossible, seed=pt.seed))
    algo = ALGORITHMS[pt.algorithm]
    result, stats = algo(inst.topology, inst.initial, inst.final, inst.spec, inst.space,
                         SynthOptions(cex_learning=pt.cex_learning, max_visited=max_visited))
    row = {
        "nodes": pt.nodes, "updating": pt.updating, "impossible": int(pt.impossible),
        "seed": pt.seed, "algorithm": pt.algorithm, "cex_learning": int(pt.cex_learning),
        "result": type(result).__name__.lower(),
    }
    row.update(stats.to_json())
    return row


def sweep(points, max_visited=None, progress=None) -> list[dict]:
    rows = []
    for pt in points:
        rows.append(run_point(pt, max_visited))
        if progress is not None:
            progress(rows[-1])
    return rows


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in COLUMNS})


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _series(rows, metric):
    """Group rows into (label -> sorted [(nodes, mean metric)])."""
    acc: dict[str, dict[int, list[float]]] = {}
    for r in rows:
        learn = "" if int(r["cex_learning"]) else " (no learning)"
        label = f"{r['algorithm']}{learn}, M={r['updating']}" + (" impossible" if int(r["impossible"]) else "")
        acc.setdefault(label, {}).setdefault(int(r["nodes"]), []).append(float(r[metric]))
    return {label: sorted((n, sum(v) / len(v)) for n, v in pts.items()) for label, pts in acc.items()}


def plot(rows, out_dir, stem: str = "sweep") -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    written = []
    for metric, ylabel in (("model_check_calls", "model checker calls"),
                           ("wall_time_ms", "wall time (ms)")):
        fig, ax = plt.subplots(figsize=(6, 6 / 1.6))
        for label, pts in sorted(_series(rows, metric).items()):
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel("switches in network (N)")
        ax.set_ylabel(ylabel)
        ax.legend(loc="best", fontsize="small")
        ax.grid(alpha=0.3)
        path = out_dir / f"{stem}_{metric}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def report(points, out_dir, stem: str = "sweep", max_visited=None, progress=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = sweep(points, max_visited, progress)
    csv_path = out_dir / f"{stem}.csv"
    write_csv(rows, csv_path)
    return csv_path, plot(rows, out_dir, stem)
