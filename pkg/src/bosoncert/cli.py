"""Command line front end.

Exit codes: 0 on success, 2 for validation problems (bad arguments, malformed
files, inconsistent shapes), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fock, harness, sampling, stats
from .coarsegrain import build_bubbles, coarse_grain, load_partition, save_partition
from .distributions import (
    boson_distribution,
    distinguishable_distribution,
    load_distribution,
    save_distribution,
    uniform_distribution,
)
from .fock import ProblemShape
from .interferometer import haar_unitary, ion_chain, evolve, load_interferometer, save_interferometer


def _parse_occupations(text: str, m: int) -> list[int]:
    try:
        occ = [int(tok) for tok in text.split(",")]
    except ValueError:
        raise ValueError(f"input state must be comma-separated integers, got {text!r}") from None
    if len(occ) != m:
        raise ValueError(f"input state has {len(occ)} modes, interferometer has {m}")
    return occ


def _input_state(args, m: int) -> np.ndarray:
    if args.input is not None:
        return fock.check_state(_parse_occupations(args.input, m), m=m)
    if args.n is None:
        raise ValueError("give either --input or --n")
    if args.n > m:
        raise ValueError(f"default input packs one particle per mode; n={args.n} > m={m}")
    s = np.zeros(m, dtype=np.int64)
    s[: args.n] = 1
    return s


def _cmd_gen_unitary(args) -> int:
    interf = haar_unitary(args.m, args.seed)
    save_interferometer(args.out, interf)
    print(f"wrote {args.out}: {interf.provenance}")
    return 0


def _cmd_ion_chain(args) -> int:
    chain = ion_chain(
        args.m,
        2.0 * np.pi * args.freq_z_hz,
        2.0 * np.pi * args.freq_x_hz,
        species=args.species,
        mass_amu=args.mass_amu,
    )
    interf = evolve(chain.hopping, args.tau_s, label=chain.label)
    save_interferometer(args.out, interf)
    if args.positions_out:
        np.savetxt(args.positions_out, chain.positions, header="axial position / m")
    mean_gap = float(np.diff(chain.positions).mean())
    print(f"wrote {args.out}: {interf.provenance}")
    print(f"{args.m} ions, mean spacing {mean_gap:.3e} m")
    return 0


def _cmd_simulate(args) -> int:
    interf = load_interferometer(args.unitary)
    s = _input_state(args, interf.m)
    if args.law == "quantum":
        dist = boson_distribution(interf, s)
    elif args.law == "distinguishable":
        dist = distinguishable_distribution(interf, s)
    else:
        dist = uniform_distribution(interf.m, int(s.sum()))
    save_distribution(args.out, dist)
    print(f"wrote {args.out}: {dist.provenance} over {dist.shape.dim} states")
    return 0


def _cmd_sample(args) -> int:
    rng = sampling.stream(args.master_seed, args.run, args.role)
    label = f"({args.master_seed}, {args.run}, {args.role!r})"
    if args.uniform:
        if args.m is None or args.n is None:
            raise ValueError("--uniform needs --m and --n")
        shape = ProblemShape.create(args.m, args.n)
        sample = sampling.draw_uniform(shape, args.n_m, rng, seed_label=label)
    else:
        if args.table is None:
            raise ValueError("give --table FILE or --uniform")
        dist = load_distribution(args.table)
        sample = sampling.draw_from_table(dist, args.n_m, rng, seed_label=label)
    sampling.save_sample(args.out, sample)
    print(f"wrote {args.out}: {sample.n_m} events on {sample.ranks.size} states")
    return 0


def _cmd_coarsegrain(args) -> int:
    sample = sampling.load_sample(args.sample)
    partition = build_bubbles(sample, args.target_n_b, min_count=args.min_count)
    save_partition(args.out, partition)
    print(
        f"wrote {args.out}: {partition.n_bins} bins "
        f"({partition.n_bubbles} bubbles, {len(partition.merges)} merges)"
    )
    return 0


def _cmd_certify(args) -> int:
    s1 = sampling.load_sample(args.sample1)
    s2 = sampling.load_sample(args.sample2)
    if args.partition:
        partition = load_partition(args.partition)
    else:
        partition = build_bubbles(s1, args.target_n_b, min_count=args.min_count)
    report = stats.certify(
        coarse_grain(partition, s1), coarse_grain(partition, s2), args.alpha
    )
    if args.out:
        stats.save_report(args.out, report)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def _cmd_campaign(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    for name in ("n", "n_m", "n_s", "alpha", "master_seed", "min_count", "workers"):
        value = getattr(args, name)
        if value is not None:
            raw[name] = value
    if args.targets is not None:
        raw["targets"] = args.targets.split(",")
    if args.target_n_b is not None:
        raw["target_n_b"] = [int(t) for t in args.target_n_b.split(",")]
    if args.input_state is not None:
        raw["input_state"] = [int(x) for x in args.input_state.split(",")]
    if args.fixed_partition:
        raw["fixed_partition"] = True
    if args.system_seed is not None:
        raw.setdefault("system", {})["seed"] = args.system_seed
    cfg = harness.CampaignConfig.from_dict(raw)
    result = harness.run_campaign(cfg, args.outdir, workers=args.workers)
    for (role, t), summary in sorted(result.summaries.items()):
        print(
            f"{role}@{t}: pass {100.0 * summary['pass_rate']:.1f}%  "
            f"p mean {summary['p_mean']:.3f}  bins {summary['n_b_mean']:.1f}"
        )
    print(f"report: {result.outdir / 'report.json'}")
    return 0


def _cmd_emit_plots(args) -> int:
    for path in harness.emit_figure_data(args.outdir):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bosoncert",
        description="Simulate boson sampling devices and certify them by coarse-grained tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-unitary", help="draw a Haar-random interferometer")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_unitary)

    p = sub.add_parser("ion-chain", help="trapped-ion chain evolution unitary")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--freq-z-hz", type=float, required=True, help="axial trap frequency, Hz")
    p.add_argument("--freq-x-hz", type=float, required=True, help="transverse trap frequency, Hz")
    p.add_argument("--tau-s", type=float, required=True, help="evolution time, s")
    p.add_argument("--species", default="171Yb+")
    p.add_argument("--mass-amu", type=float, default=None)
    p.add_argument("--positions-out", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ion_chain)

    p = sub.add_parser("simulate", help="exact outcome table for an input state")
    p.add_argument("--unitary", required=True)
    p.add_argument("--law", choices=["quantum", "distinguishable", "uniform"], default="quantum")
    p.add_argument("--input", default=None, help="comma-separated occupations")
    p.add_argument("--n", type=int, default=None, help="one particle in each of the first n modes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sample", help="draw a finite sample from a table")
    p.add_argument("--table", default=None)
    p.add_argument("--uniform", action="store_true", help="uniform law, no table needed")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--n-m", type=int, required=True, help="number of events")
    p.add_argument("--master-seed", type=int, required=True)
    p.add_argument("--run", type=int, default=0)
    p.add_argument("--role", default="s1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("coarsegrain", help="build the bubble partition from a sample")
    p.add_argument("--sample", required=True)
    p.add_argument("--target-n-b", type=int, required=True)
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_coarsegrain)

    p = sub.add_parser("certify", help="two-sample test on a shared partition")
    p.add_argument("--sample1", required=True)
    p.add_argument("--sample2", required=True)
    p.add_argument("--partition", default=None, help="reuse a stored partition")
    p.add_argument("--target-n-b", type=int, default=41)
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("campaign", help="run a full certification campaign")
    p.add_argument("--config", required=True, help="JSON file with the campaign fields")
    p.add_argument("--outdir", required=True)
    for name in ("n", "n_m", "n_s", "master_seed", "min_count", "workers"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--targets", default=None, help="comma-separated role list")
    p.add_argument("--target-n-b", dest="target_n_b", default=None, help="comma-separated bubble targets")
    p.add_argument("--input-state", dest="input_state", default=None)
    p.add_argument("--fixed-partition", dest="fixed_partition", action="store_true")
    p.add_argument("--system-seed", dest="system_seed", type=int, default=None)
    p.set_defaults(func=_cmd_campaign)

    p = sub.add_parser("emit-plots", help="plot-ready CSV tables from campaign output")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_emit_plots)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OverflowError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
