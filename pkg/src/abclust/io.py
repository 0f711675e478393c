"""File formats: data and chain CSVs, graph bundles, JSON sidecars.

Chain CSV layout is one row per kept iteration:

    iteration, label_0..label_{n-1}, distance, attempts, epsilon, cost

where `cost` is the raw optimal transport objective (sum of c^q terms) and
`distance` the normalized W_q; Gibbs chains leave the distance fields NaN.
Rows where an ABC chain held its state repeat the standing acceptance
record, with `attempts` counting the running rejection streak. Attempt logs
audit the threshold schedule one proposal at a time. Graph datasets are
directories of whitespace edge lists plus a manifest carrying the node
count.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .abc_sampler import ChainSample
from .kernels.graphs import Graph
from .partitions import Partition

__all__ = [
    "write_data",
    "read_data",
    "write_labels",
    "read_labels",
    "write_chain_csv",
    "read_chain_csv",
    "write_attempts_csv",
    "write_json",
    "read_json",
    "write_graph_dir",
    "read_graph_dir",
]


def write_data(path, data):
    """Numeric dataset to CSV (1 or 2 columns); graph lists go via directories."""
    path = Path(path)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    header = ["value"] if arr.shape[1] == 1 else [f"x{d+1}" for d in range(arr.shape[1])]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in arr:
            w.writerow([repr(float(v)) for v in row])


def read_data(path):
    """Load a numeric dataset; 1-column files come back as flat arrays."""
    path = Path(path)
    if path.is_dir():
        return read_graph_dir(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    body = np.asarray([[float(v) for v in row] for row in rows[1:]])
    return body[:, 0] if body.shape[1] == 1 else body


def write_labels(path, partition: Partition):
    """One CSV row of integer labels."""
    with Path(path).open("w", newline="") as fh:
        csv.writer(fh).writerow(partition.labels.tolist())


def read_labels(path) -> Partition:
    with Path(path).open(newline="") as fh:
        row = next(csv.reader(fh))
    return Partition(np.asarray([int(v) for v in row], dtype=np.int64))


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_chain_csv(path, samples, n: int):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["iteration"]
            + [f"label_{i}" for i in range(n)]
            + ["distance", "attempts", "epsilon", "cost"]
        )
        for s in samples:
            w.writerow(
                [s.iteration]
                + s.partition.labels.tolist()
                + [_fmt(s.distance), s.attempts, _fmt(s.epsilon), _fmt(s.cost)]
            )


def read_chain_csv(path) -> list:
    samples = []
    with Path(path).open(newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        n = sum(1 for h in header if h.startswith("label_"))
        for row in rows:
            part = Partition(np.asarray([int(v) for v in row[1 : 1 + n]], dtype=np.int64))
            dist, att, eps, cost = row[1 + n : 5 + n]
            samples.append(
                ChainSample(
                    iteration=int(row[0]),
                    partition=part,
                    raw_partition=part,
                    distance=float(dist) if dist else math.nan,
                    attempts=int(att),
                    epsilon=float(eps) if eps else math.nan,
                    cost=float(cost) if cost else math.nan,
                )
            )
    return samples


def write_attempts_csv(path, run):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["attempt", "iteration", "distance", "epsilon", "accepted"])
        for t in range(run.total_attempts):
            w.writerow(
                [
                    t,
                    int(run.attempt_iteration[t]),
                    repr(float(run.attempt_distance[t])),
                    repr(float(run.attempt_epsilon[t])),
                    int(run.attempt_accepted[t]),
                ]
            )


def write_json(path, payload: dict):
    with Path(path).open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)


def write_graph_dir(path, graphs: list, manifest_extra: dict | None = None):
    """Graph dataset: one whitespace edge list per graph plus manifest.json."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    files = []
    for t, g in enumerate(graphs):
        name = f"g{t:04d}.txt"
        files.append(name)
        with (path / name).open("w") as fh:
            for i, j in g.edges():
                fh.write(f"{i} {j}\n")
    manifest = {"n_nodes": graphs[0].n_nodes, "files": files}
    if manifest_extra:
        manifest.update(manifest_extra)
    write_json(path / "manifest.json", manifest)


def read_graph_dir(path) -> list:
    path = Path(path)
    manifest = read_json(path / "manifest.json")
    n_nodes = int(manifest["n_nodes"])
    graphs = []
    for name in manifest["files"]:
        edges = []
        with (path / name).open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                i, j = line.split()
                edges.append((int(i), int(j)))
        graphs.append(Graph.from_edges(edges, n_nodes))
    return graphs
