#!/usr/bin/env python3
"""Convert the LINQS citation-network distribution (cora.content / cora.cites)
into the data directory layout the CLI consumes:

    graph.edges   undirected edge list, one "u v" pair per line
    features.csv  one row per node
    labels.txt    one integer class id per line
    split.json    {"train": [...], "val": [...], "test": [...]}

The raw distribution has no canonical split, so one is generated here:
20 nodes per class for train, then 500 val and 1000 test drawn from the
remainder with a fixed seed.

Usage: convert_cora.py <extracted-dir> <out-dir> [--seed N]
"""

import argparse
import json
import random
from collections import defaultdict
from pathlib import Path


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", type=Path, help="directory containing cora.content and cora.cites")
    ap.add_argument("out", type=Path, help="output data directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--name", default="cora", help="basename of the .content/.cites pair")
    args = ap.parse_args()

    content = args.src / f"{args.name}.content"
    cites = args.src / f"{args.name}.cites"

    node_id = {}
    rows = []
    class_names = {}
    labels = []
    for line in content.read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        paper, feats, cls = parts[0], parts[1:-1], parts[-1]
        node_id[paper] = len(rows)
        rows.append([float(x) for x in feats])
        labels.append(class_names.setdefault(cls, len(class_names)))

    edges = set()
    skipped = 0
    for line in cites.read_text().splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        a, b = parts
        if a not in node_id or b not in node_id:
            skipped += 1
            continue
        u, v = node_id[a], node_id[b]
        if u == v:
            continue
        edges.add((min(u, v), max(u, v)))

    rng = random.Random(args.seed)
    by_class = defaultdict(list)
    for i, y in enumerate(labels):
        by_class[y].append(i)
    train = []
    for members in by_class.values():
        rng.shuffle(members)
        train.extend(members[:20])
    rest = sorted(set(range(len(rows))) - set(train))
    rng.shuffle(rest)
    val, test = rest[:500], rest[500:1500]

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "graph.edges", "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u} {v}\n")
    with open(args.out / "features.csv", "w") as f:
        for row in rows:
            f.write(",".join(repr(x) for x in row) + "\n")
    with open(args.out / "labels.txt", "w") as f:
        for y in labels:
            f.write(f"{y}\n")
    with open(args.out / "split.json", "w") as f:
        json.dump({"train": sorted(train), "val": sorted(val), "test": sorted(test)}, f)

    print(f"nodes={len(rows)} features={len(rows[0])} classes={len(class_names)} "
          f"edges={len(edges)} (skipped {skipped} citations to unknown ids)")
    print(f"split: train={len(train)} val={len(val)} test={len(test)}")


if __name__ == "__main__":
    main()
