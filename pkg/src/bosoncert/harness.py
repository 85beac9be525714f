"""Certification campaigns: many runs, several target samplers, one report.

Per run r the construction sample comes from the stream (master_seed, r,
"s1"); every target role draws from its own stream (master_seed, r, role).
Bubbles are rebuilt from each run's construction sample (a fixed partition
from run 0 is available behind a flag), every requested partition size is
built from the same construction sample, and each role is tested against it.

Exact tables are computed once per campaign and written in the binary table
format next to the report.  Noisy devices are perturbed once per campaign
with the fixed stream (master_seed, 0, "noise-device:<role>"), never per
run.  Runs are independent, so they can execute across processes; results
are keyed by run index and identical for any worker count.
"""

from __future__ import annotations

import csv
import json
import math
import multiprocessing as mp
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fock, sampling, stats
from .coarsegrain import BubblePartition, build_bubbles, coarse_grain, save_partition, load_partition
from .distributions import (
    OutcomeDistribution,
    boson_distribution,
    distinguishable_distribution,
    load_distribution,
    save_distribution,
)
from .fock import ProblemShape
from .interferometer import (
    Interferometer,
    evolve,
    haar_unitary,
    ion_chain,
    perturb_hamiltonian,
    perturb_timing,
    random_phase_unitary,
    save_interferometer,
)
from .sampling import SampleSet, draw_from_table, draw_uniform, load_sample, save_sample
from .stats import TestReport, campaign_summary, certify

_TABLE_ROLES = ("quantum2", "distinguishable")


def parse_role(role: str) -> dict:
    """Validate a target-role token and split it into its pieces.

    Grammar: quantum2 | distinguishable | uniform | noisy:phase |
    noisy:hamiltonian:<eta> | noisy:timing:<eps>
    """
    parts = role.split(":")
    if parts == ["quantum2"] or parts == ["distinguishable"] or parts == ["uniform"]:
        return {"kind": parts[0]}
    if parts[0] == "noisy" and len(parts) >= 2:
        model = parts[1]
        if model == "phase" and len(parts) == 2:
            return {"kind": "noisy", "model": "phase"}
        if model in ("hamiltonian", "timing") and len(parts) == 3:
            try:
                strength = float(parts[2])
            except ValueError:
                raise ValueError(f"bad noise strength in role {role!r}") from None
            return {"kind": "noisy", "model": model, "strength": strength}
    raise ValueError(
        f"unknown target role {role!r}; expected quantum2, distinguishable, uniform, "
        "noisy:phase, noisy:hamiltonian:<eta> or noisy:timing:<eps>"
    )


@dataclass
class CampaignConfig:
    """Everything a campaign needs; JSON round-trippable, flat-overridable."""

    system: dict
    n: int
    n_m: int = 10000
    n_s: int = 100
    targets: list = field(default_factory=lambda: ["quantum2"])
    target_n_b: list = field(default_factory=lambda: [41])
    alpha: float = 0.01
    master_seed: int = 0
    min_count: int = 10
    input_state: list | None = None
    fixed_partition: bool = False
    workers: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "system" not in d or "n" not in d:
            raise ValueError("config needs at least 'system' and 'n'")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        sys_ = self.system
        if not isinstance(sys_, dict) or "kind" not in sys_:
            raise ValueError("system must be a mapping with a 'kind'")
        kind = sys_["kind"]
        if kind == "haar":
            missing = {"m", "seed"} - set(sys_)
            if missing:
                raise ValueError(f"haar system is missing {sorted(missing)}")
        elif kind == "ion":
            missing = {"m", "freq_z_hz", "freq_x_hz", "tau_s"} - set(sys_)
            if missing:
                raise ValueError(f"ion system is missing {sorted(missing)}")
            if float(sys_["freq_z_hz"]) <= 0 or float(sys_["freq_x_hz"]) <= 0:
                raise ValueError("trap frequencies must be positive")
            if float(sys_["tau_s"]) < 0:
                raise ValueError("evolution time must be nonnegative")
        else:
            raise ValueError(f"unknown system kind {kind!r}")
        m = int(sys_["m"])
        if m < 1:
            raise ValueError(f"system needs m >= 1 modes, got {m}")
        if self.n < 1:
            raise ValueError(f"need n >= 1 particles, got {self.n}")
        if self.input_state is None and self.n > m:
            raise ValueError(f"default input packs one particle per mode; n={self.n} > m={m}")
        if self.input_state is not None:
            fock.check_state(self.input_state, m=m, n=self.n)
        if self.n_m < 1 or self.n_s < 1:
            raise ValueError("n_m and n_s must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if not self.targets:
            raise ValueError("at least one target role is required")
        for role in self.targets:
            spec_ = parse_role(role)
            if spec_.get("model") in ("timing", "phase") and kind != "ion":
                raise ValueError(f"role {role!r} needs an ion system (a generator and a time)")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("duplicate target roles")
        if not self.target_n_b:
            raise ValueError("at least one target_n_b is required")
        for t in self.target_n_b:
            if int(t) < 2:
                raise ValueError(f"target_n_b entries must be >= 2, got {t}")
        if self.workers is not None and int(self.workers) < 1:
            raise ValueError("workers must be >= 1 when given")


def resolved_input(cfg: CampaignConfig) -> np.ndarray:
    m = int(cfg.system["m"])
    if cfg.input_state is not None:
        return fock.check_state(cfg.input_state, m=m, n=cfg.n)
    s = np.zeros(m, dtype=np.int64)
    s[: cfg.n] = 1
    return s


def build_system(system: dict):
    """Instantiate the device: (interferometer, generator or None, tau or None)."""
    if system["kind"] == "haar":
        return haar_unitary(int(system["m"]), int(system["seed"])), None, None
    chain = ion_chain(
        int(system["m"]),
        2.0 * np.pi * float(system["freq_z_hz"]),
        2.0 * np.pi * float(system["freq_x_hz"]),
        species=system.get("species", "171Yb+"),
        mass_amu=system.get("mass_amu"),
    )
    tau = float(system["tau_s"])
    return evolve(chain.hopping, tau, label=chain.label), chain.hopping, tau


def _noisy_interferometer(
    role: str, base: Interferometer, hgen, tau, master_seed: int
) -> Interferometer:
    spec_ = parse_role(role)
    model = spec_["model"]
    if model == "hamiltonian":
        rng = sampling.stream(master_seed, 0, f"noise-device:{role}")
        return perturb_hamiltonian(base, spec_["strength"], rng)
    if model == "timing":
        return perturb_timing(hgen, tau, spec_["strength"], label=base.provenance)
    rng = sampling.stream(master_seed, 0, f"noise-device:{role}")
    return random_phase_unitary(hgen, rng)


def build_tables(cfg: CampaignConfig, base: Interferometer, hgen, tau, s) -> dict:
    """One exact table per distinct sampling law used by the campaign."""
    tables = {"quantum": boson_distribution(base, s)}
    for role in cfg.targets:
        kind = parse_role(role)["kind"]
        if kind == "distinguishable" and "distinguishable" not in tables:
            tables["distinguishable"] = distinguishable_distribution(base, s)
        elif kind == "noisy":
            noisy = _noisy_interferometer(role, base, hgen, tau, cfg.master_seed)
            tables[role] = boson_distribution(noisy, s)
    return tables


def sanitize(token: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.@=-]", "-", token)


def _draw_role(role: str, r: int, cfg_ms: int, n_m: int, tables: dict, shape: ProblemShape) -> SampleSet:
    rng = sampling.stream(cfg_ms, r, role)
    label = f"({cfg_ms}, {r}, {role!r})"
    kind = parse_role(role)["kind"]
    if kind == "quantum2":
        return draw_from_table(tables["quantum"], n_m, rng, seed_label=label)
    if kind == "uniform":
        return draw_uniform(shape, n_m, rng, seed_label=label)
    if kind == "distinguishable":
        return draw_from_table(tables["distinguishable"], n_m, rng, seed_label=label)
    return draw_from_table(tables[role], n_m, rng, seed_label=label)


def _run_once(r: int, cfg: CampaignConfig, tables: dict, fixed: dict | None) -> list:
    shape = tables["quantum"].shape
    s1 = draw_from_table(
        tables["quantum"],
        cfg.n_m,
        sampling.stream(cfg.master_seed, r, "s1"),
        seed_label=f"({cfg.master_seed}, {r}, 's1')",
    )
    role_samples = {
        role: _draw_role(role, r, cfg.master_seed, cfg.n_m, tables, shape)
        for role in cfg.targets
    }
    records = []
    for t in cfg.target_n_b:
        partition = fixed[int(t)] if fixed is not None else build_bubbles(
            s1, int(t), min_count=cfg.min_count
        )
        c1 = coarse_grain(partition, s1)
        for role in cfg.targets:
            rep = certify(c1, coarse_grain(partition, role_samples[role]), cfg.alpha)
            records.append((role, int(t), rep))
    return records


_WORK: dict | None = None


def _init_worker(payload: dict) -> None:
    global _WORK
    _WORK = payload


def _execute_run(r: int) -> list:
    return _run_once(r, _WORK["cfg"], _WORK["tables"], _WORK["fixed"])


@dataclass(frozen=True, eq=False)
class CampaignResult:
    config: CampaignConfig
    cells: dict  # (role, target_n_b) -> [TestReport, ...] in run order
    summaries: dict  # (role, target_n_b) -> campaign_summary dict
    outdir: Path


def run_campaign(cfg: CampaignConfig, outdir, workers: int | None = None) -> CampaignResult:
    """Execute the whole campaign and leave a self-describing output tree.

    outdir gets: unitary.json, table_<law>.bsd, report.json,
    stats/<role>@<target>.csv with the per-run records, and artifacts/ with
    run 0's samples and partition for figure emission.
    """
    cfg.validate()
    outdir = Path(outdir)
    (outdir / "stats").mkdir(parents=True, exist_ok=True)
    (outdir / "artifacts").mkdir(parents=True, exist_ok=True)

    base, hgen, tau = build_system(cfg.system)
    s = resolved_input(cfg)
    save_interferometer(outdir / "unitary.json", base)
    tables = build_tables(cfg, base, hgen, tau, s)
    for key, table in tables.items():
        save_distribution(outdir / f"table_{sanitize(key)}.bsd", table)

    fixed = None
    if cfg.fixed_partition:
        s1_0 = draw_from_table(
            tables["quantum"],
            cfg.n_m,
            sampling.stream(cfg.master_seed, 0, "s1"),
            seed_label=f"({cfg.master_seed}, 0, 's1')",
        )
        fixed = {int(t): build_bubbles(s1_0, int(t), min_count=cfg.min_count) for t in cfg.target_n_b}

    payload = {"cfg": cfg, "tables": tables, "fixed": fixed}
    nworkers = workers or cfg.workers or os.cpu_count() or 1
    nworkers = min(nworkers, cfg.n_s)
    if nworkers > 1:
        ctx = mp.get_context("fork")
        chunk = max(1, cfg.n_s // (nworkers * 4))
        with ProcessPoolExecutor(
            max_workers=nworkers, mp_context=ctx, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            per_run = list(pool.map(_execute_run, range(cfg.n_s), chunksize=chunk))
    else:
        per_run = [_run_once(r, cfg, tables, fixed) for r in range(cfg.n_s)]

    cells: dict = {(role, int(t)): [] for t in cfg.target_n_b for role in cfg.targets}
    for records in per_run:
        for role, t, rep in records:
            cells[(role, t)].append(rep)
    summaries = {cell: campaign_summary(reps) for cell, reps in cells.items()}

    for (role, t), reps in sorted(cells.items()):
        path = outdir / "stats" / f"{sanitize(role)}@{t}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run", "chi2", "df", "p_value", "pass", "n_b", "p_underflow"])
            for r, rep in enumerate(reps):
                writer.writerow(
                    [r, rep.chi2, rep.df, rep.p_value, int(rep.passed), rep.n_b, int(rep.p_underflow)]
                )

    _write_run_zero_artifacts(cfg, tables, fixed, outdir / "artifacts")

    report = {
        "config": cfg.to_dict(),
        "cells": [
            {"role": role, "target_n_b": t, **summaries[(role, t)]}
            for (role, t) in sorted(cells)
        ],
    }
    with open(outdir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return CampaignResult(config=cfg, cells=cells, summaries=summaries, outdir=outdir)


def _write_run_zero_artifacts(cfg: CampaignConfig, tables: dict, fixed: dict | None, artdir: Path) -> None:
    shape = tables["quantum"].shape
    s1 = draw_from_table(
        tables["quantum"],
        cfg.n_m,
        sampling.stream(cfg.master_seed, 0, "s1"),
        seed_label=f"({cfg.master_seed}, 0, 's1')",
    )
    save_sample(artdir / "run0_sample_s1.csv", s1)
    for role in cfg.targets:
        sample = _draw_role(role, 0, cfg.master_seed, cfg.n_m, tables, shape)
        save_sample(artdir / f"run0_sample_{sanitize(role)}.csv", sample)
    t0 = int(cfg.target_n_b[0])
    partition = fixed[t0] if fixed is not None else build_bubbles(s1, t0, min_count=cfg.min_count)
    save_partition(artdir / "run0_partition.json", partition)


def emit_figure_data(outdir) -> list[Path]:
    """Turn a campaign output tree into plot-ready CSV tables.

    figures/coarse_bins.csv   bin probabilities per series with sampling errors
    figures/chi2_hist.csv     statistic histogram per cell with the chi-square density
    figures/pvalue_hist.csv   p-value histogram per cell
    """
    outdir = Path(outdir)
    with open(outdir / "report.json", "r", encoding="utf-8") as fh:
        report = json.load(fh)
    cfg = CampaignConfig.from_dict(report["config"])
    figdir = outdir / "figures"
    figdir.mkdir(exist_ok=True)
    written = []

    partition = load_partition(outdir / "artifacts" / "run0_partition.json")
    quantum = load_distribution(outdir / f"table_{sanitize('quantum')}.bsd")
    series = [("exact", coarse_grain(partition, quantum), None)]
    s1 = load_sample(outdir / "artifacts" / "run0_sample_s1.csv")
    series.append(("s1", coarse_grain(partition, s1), s1.n_m))
    for role in cfg.targets:
        sample = load_sample(outdir / "artifacts" / f"run0_sample_{sanitize(role)}.csv")
        series.append((role, coarse_grain(partition, sample), sample.n_m))

    path = figdir / "coarse_bins.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "series", "probability", "sigma"])
        for name, coarse, n_m in series:
            probs = coarse.probabilities()
            for b, p in enumerate(probs):
                # multinomial error bar on an empirical bin frequency
                sigma = 0.0 if n_m is None else math.sqrt(max(p * (1.0 - p), 0.0) / n_m)
                writer.writerow([b, name, float(p), sigma])
    written.append(path)

    cellrows = []
    for cell in report["cells"]:
        tag = f"{sanitize(cell['role'])}@{cell['target_n_b']}"
        recs = _read_cell_csv(outdir / "stats" / f"{tag}.csv")
        cellrows.append((tag, cell, recs))

    path = figdir / "chi2_hist.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "bin_left", "bin_right", "count", "chi2_density"])
        for tag, cell, recs in cellrows:
            values = np.array([r["chi2"] for r in recs])
            df = max(1, int(round(cell["n_b_mean"])) - 1)
            edges = np.linspace(0.0, float(values.max()) * 1.02 + 1e-9, 41)
            hist, _ = np.histogram(values, bins=edges)
            for i, count in enumerate(hist):
                mid = 0.5 * (edges[i] + edges[i + 1])
                writer.writerow(
                    [tag, float(edges[i]), float(edges[i + 1]), int(count), stats.chi2_pdf(mid, df)]
                )
    written.append(path)

    path = figdir / "pvalue_hist.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "bin_left", "bin_right", "count"])
        edges = np.linspace(0.0, 1.0, 21)
        for tag, cell, recs in cellrows:
            values = np.array([r["p_value"] for r in recs])
            hist, _ = np.histogram(values, bins=edges)
            for i, count in enumerate(hist):
                writer.writerow([tag, float(edges[i]), float(edges[i + 1]), int(count)])
    written.append(path)
    return written


def _read_cell_csv(path: Path) -> list[dict]:
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "run": int(row["run"]),
                    "chi2": float(row["chi2"]),
                    "df": int(row["df"]),
                    "p_value": float(row["p_value"]),
                    "pass": bool(int(row["pass"])),
                    "n_b": int(row["n_b"]),
                }
            )
    return rows
