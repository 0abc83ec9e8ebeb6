"""Benchmark campaigns: width, time and memory averaged over seeded random networks."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .activations import UnsupportedActivation
from . import activations
from .interval import warmup
from .esip import DEFAULT_BUDGET_BYTES, ResourceRefusal, admit, analyze_esip, forecast
from .mm import analyze_mm
from .network import random_network

CSV_COLUMNS = ["engine", "L", "n", "runs", "seed", "mean_width", "mean_time_s", "mean_mem_bytes", "refused"]


@dataclass
class CampaignConfig:
    engines: list = field(default_factory=lambda: ["mm", "esip"])
    L: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    n: list = field(default_factory=lambda: [5, 10, 20])
    N: int = 10
    seed: int = 0
    activation: str = "relu"
    bound_range: tuple = (-1.0, 1.0)
    esip_budget_bytes: int = DEFAULT_BUDGET_BYTES
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown campaign fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.bound_range = tuple(cfg.bound_range)
        for e in cfg.engines:
            if e not in ("mm", "esip"):
                raise ValueError(f"unknown engine {e!r}")
        return cfg

    @classmethod
    def load(cls, path) -> "CampaignConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.N)]


# larger preset grids: ReLU at n=20 for both engines, SiLU timing grid for mm only
TABLE2 = CampaignConfig(engines=["mm", "esip"], L=[1, 2, 3, 4, 5, 6, 10], n=[20], activation="relu")
TABLE34 = CampaignConfig(engines=["mm"], L=list(range(1, 11)), n=[20, 40, 60, 80, 100], activation="silu")


@dataclass
class BenchRecord:
    engine: str
    L: int
    n: int
    runs: int
    seeds: list
    seed: int = 0
    mean_width: float = math.nan
    mean_time_s: float = math.nan
    mean_mem_bytes: int = 0
    refused: bool = False
    reason: str = ""
    widths: list = field(default_factory=list)

    def csv_row(self) -> dict:
        row = {
            "engine": self.engine,
            "L": self.L,
            "n": self.n,
            "runs": self.runs,
            "seed": self.seed,
            "mean_width": "" if self.refused else repr(self.mean_width),
            "mean_time_s": "" if self.refused else repr(self.mean_time_s),
            "mean_mem_bytes": self.mean_mem_bytes,
            "refused": "true" if self.refused else "false",
        }
        return row


def _run_one(engine, L, n, s, cfg):
    net = random_network(L, n, cfg.bound_range, seed=s, activation=cfg.activation)
    if engine == "mm":
        r = analyze_mm(net)
    else:
        r = analyze_esip(net, budget_bytes=cfg.esip_budget_bytes)
    return r.width, r.stats["time_s"], r.stats["mem_bytes"]


def _record(engine, L, n, cfg, outcomes) -> BenchRecord:
    seeds = cfg.seeds()
    widths = [o[0] for o in outcomes]
    return BenchRecord(
        engine, L, n, len(seeds), seeds, cfg.seed,
        mean_width=float(np.mean(widths)),
        mean_time_s=float(np.mean([o[1] for o in outcomes])),
        mean_mem_bytes=int(round(np.mean([o[2] for o in outcomes]))),
        widths=widths,
    )


def _refusal(engine, L, n, cfg, reason, mem=0) -> BenchRecord:
    seeds = cfg.seeds()
    return BenchRecord(engine, L, n, len(seeds), seeds, cfg.seed, mean_mem_bytes=mem, refused=True, reason=reason)


def run_campaign(cfg: CampaignConfig) -> list[BenchRecord]:
    """Analyse N seeded networks per (engine, L, n); ESIP refusals become records.

    Both engines see the same networks for a given (L, n). Records come back
    ordered by (engine, L, n) regardless of ``workers``.
    """
    jobs, records = [], {}
    for engine in cfg.engines:
        for L in cfg.L:
            for n in cfg.n:
                key = (engine, L, n)
                if engine == "esip":
                    fc = forecast([n] * (L + 1))
                    act = activations.builtin(cfg.activation)
                    if not (act.monotone_increasing and act.has_relaxer):
                        records[key] = _refusal(engine, L, n, cfg, f"activation unsupported by ESIP: {cfg.activation}")
                        continue
                    try:
                        admit(fc.dims, cfg.esip_budget_bytes)
                    except ResourceRefusal as e:
                        records[key] = _refusal(engine, L, n, cfg, str(e), fc.peak_bytes)
                        continue
                jobs.append(key)

    def run_key(pool, key):
        engine, L, n = key
        args = [(engine, L, n, s, cfg) for s in cfg.seeds()]
        if pool is None:
            return [_run_one(*a) for a in args]
        return list(pool.map(_run_one, *zip(*args)))

    warmup()
    pool = ProcessPoolExecutor(cfg.workers, initializer=warmup) if cfg.workers > 1 else None
    try:
        for key in jobs:
            try:
                records[key] = _record(*key, cfg, run_key(pool, key))
            except (ResourceRefusal, UnsupportedActivation, MemoryError) as e:
                records[key] = _refusal(*key, cfg, str(e) or type(e).__name__)
    finally:
        if pool is not None:
            pool.shutdown()
    return [records[k] for k in sorted(records)]


def emit(records, format: str, path=None) -> str:
    """Render records as CSV or a markdown table; write to ``path`` if given."""
    if format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(r.csv_row())
        text = buf.getvalue()
    elif format == "markdown":
        text = to_markdown(records)
    else:
        raise ValueError(f"unknown format {format!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _fmt(x, refused, digits=3):
    if refused:
        return "-"
    return f"{x:.{digits}g}"


def to_markdown(records) -> str:
    """One block per (L, n) with Width / Time / Memory rows and one column per engine."""
    engines = sorted({r.engine for r in records}, key=lambda e: ("mm", "esip").index(e))
    by_key = {(r.engine, r.L, r.n): r for r in records}
    names = {"mm": "Mixed-monotonicity", "esip": "ESIP"}
    lines = ["| n | L | | " + " | ".join(names[e] for e in engines) + " |",
             "|---|---|---|" + "---|" * len(engines)]
    for n in sorted({r.n for r in records}):
        for L in sorted({r.L for r in records if r.n == n}):
            rows = {"Width": [], "Time (s)": [], "Memory (MB)": []}
            for e in engines:
                r = by_key.get((e, L, n))
                if r is None:
                    for v in rows.values():
                        v.append("")
                    continue
                rows["Width"].append(_fmt(r.mean_width, r.refused))
                rows["Time (s)"].append(_fmt(r.mean_time_s, r.refused, 2))
                mb = r.mean_mem_bytes / 1e6
                rows["Memory (MB)"].append(f">{mb:.0f}" if r.refused and mb else _fmt(mb, r.refused and not mb, 2))
            for i, (label, vals) in enumerate(rows.items()):
                head = f"| {n} | {L} |" if i == 0 else "| | |"
                lines.append(f"{head} {label} | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def records_to_json(records) -> str:
    return json.dumps([asdict(r) for r in records], indent=1)
