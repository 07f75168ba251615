#!/usr/bin/env python3
"""Certificate degrees and timings for random ideal members.

For every (family, n, d) cell, draws random members of degree d, derives a
certificate with each method and records the certificate degree next to the
2d-1 bound. Writes one JSON record per cell.
"""

import argparse
import json
import random
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from matchideal.certificate import verify_certificate  # noqa: E402
from matchideal.matching import derive_zero  # noqa: E402
from matchideal.tour import tour_derive_zero  # noqa: E402
from support import random_member  # noqa: E402


@dataclass
class BenchConfig:
    samples: int = 20
    seed: int = 0
    match_sizes: tuple = (4, 6, 8)
    tour_sizes: tuple = (3, 4)
    degrees: tuple = (1, 2, 3)
    methods: tuple = ("direct", "inductive")


@dataclass
class Cell:
    family: str
    n: int
    d: int
    method: str
    samples: int
    verified: int = 0
    max_degree: int = -1
    bound: int = 0
    seconds: float = 0.0
    degrees: list = field(default_factory=list)


def run_cell(cfg: BenchConfig, family: str, n: int, d: int, method: str) -> Cell:
    rng = random.Random(f"{cfg.seed}-{family}-{n}-{d}")
    derive = derive_zero if family == "match" else tour_derive_zero
    cell = Cell(family, n, d, method, cfg.samples, bound=2 * d - 1)
    start = time.perf_counter()
    for _ in range(cfg.samples):
        F = random_member(family, n, d, rng)
        cert = derive(F, n, method=method)
        cell.verified += bool(verify_certificate(cert))
        deg = cert.actual_degree()
        cell.degrees.append(int(deg) if deg != float("-inf") else -1)
    cell.seconds = round(time.perf_counter() - start, 3)
    cell.max_degree = max(cell.degrees)
    return cell


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=BenchConfig.samples)
    ap.add_argument("--seed", type=int, default=BenchConfig.seed)
    ap.add_argument("--out", type=Path, default=Path("results/derivation_benchmark.json"))
    args = ap.parse_args()
    cfg = BenchConfig(samples=args.samples, seed=args.seed)

    plan = [("match", n, d) for n in cfg.match_sizes for d in cfg.degrees]
    plan += [("tour", n, d) for n in cfg.tour_sizes for d in cfg.degrees if d <= 2]
    cells = []
    print(f"{'family':6} {'n':>2} {'d':>2} {'method':9} {'ok':>4} {'deg':>4} {'bound':>5} {'sec':>7}")
    for family, n, d in plan:
        for method in cfg.methods:
            cell = run_cell(cfg, family, n, d, method)
            cells.append(cell)
            print(f"{family:6} {n:>2} {d:>2} {method:9} {cell.verified:>4} {cell.max_degree:>4} "
                  f"{cell.bound:>5} {cell.seconds:>7.3f}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps({"config": asdict(cfg), "cells": [asdict(c) for c in cells]}, indent=1) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
