"""Command-line entry point: ``physdrift <subcommand> --config FILE``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from physdrift import bounds as bnd
from physdrift import harness as hn
from physdrift import numerics as nm
from physdrift.fermion import particle_number
from physdrift.gadgets import synthesize_sequence, tally
from physdrift.pauli import set_dense_limit


def _single(cfg: hn.ExperimentConfig, seed: int):
    system = hn.load_system(cfg.systems[0], cfg.base_dir)
    protocol, t, n = cfg.protocols[0], cfg.t[0], cfg.n_grid[0]
    units = hn.units_for(protocol, system, n, cfg.grid_mode)
    return system, hn.compile_for(protocol, system, t, units, seed, cfg.protection)


def cmd_compile(cfg, seed, out: Path) -> None:
    _, seq = _single(cfg, seed)
    (out / "sequence.json").write_text(seq.dumps() + "\n")
    counts = tally(synthesize_sequence(seq)).as_dict()
    (out / "tally.json").write_text(json.dumps(counts, indent=2) + "\n")
    print(json.dumps(counts))


def cmd_qasm(cfg, seed, out: Path) -> None:
    _, seq = _single(cfg, seed)
    path = out / "circuit.qasm"
    path.write_text(synthesize_sequence(seq).to_qasm())
    print(path)


def cmd_simulate(cfg, seed, out: Path) -> None:
    system = hn.load_system(cfg.systems[0], cfg.base_dir)
    psi0 = hn.initial_state(system, cfg.initial_state)
    pn = particle_number(system.n_qubits)
    observables = {"H": system.hamiltonian, "N": pn.pauli_form}
    observables.update({f"N{i}": op for i, op in enumerate(pn.per_orbital)})
    for protocol in cfg.protocols:
        for t in cfg.t:
            units = hn.units_for(protocol, system, cfg.n_grid[0], cfg.grid_mode)
            seq = hn.compile_for(protocol, system, t, units, seed, cfg.protection)
            kind = hn.CHECKPOINTS.get(protocol, "trotter_step_end")
            series = nm.track_observables(seq, psi0, observables, kind, t)
            path = out / f"timeseries_{system.name}_{protocol}_t{t:g}.csv"
            path.write_text(series.to_csv())
            print(path)


def cmd_sweep(cfg, seed, out: Path) -> None:
    cfg.base_seed = seed
    rows = hn.run(cfg, out)
    column = "spectral_error" if "spectral_error" in cfg.metrics else "state_error"
    for key, (mean, se, count) in hn.summarize(rows, column).items():
        print(",".join(map(str, key)), f"{mean:.6g}", f"{se:.2g}", count)
    print(out / "results.csv")


def cmd_histogram(cfg, seed, out: Path) -> None:
    draws = int(cfg.extra.get("draws", cfg.n_grid[0]))
    rows = hn.histogram(cfg, cfg.protocols[0], draws, seed)
    path = out / "histogram.csv"
    path.write_text(hn.table_csv(rows))
    print(path)


def cmd_bounds(cfg, seed, out: Path) -> None:
    query = cfg.extra.get("query")
    if query is None:
        system = hn.load_system(cfg.systems[0], cfg.base_dir)
        h = system.hamiltonian
        query = {"t": cfg.t[0], "L": len(h), "lambda_max": h.lambda_max, "lambda_one": h.lambda_one_norm,
                 "epsilon": cfg.extra.get("epsilon", 0.01), "N": cfg.n_grid[0], "k": cfg.extra.get("k", 1)}
    q = bnd.BoundQuery(**query)
    rows = [{"protocol": p, "formula": f, "value": v, "kind": k} for p, f, v, k in bnd.bound_table(q)]
    text = hn.table_csv(rows)
    (out / "bounds.csv").write_text(text)
    sys.stdout.write(text)


def cmd_compare_bounds(cfg, seed, out: Path) -> None:
    text = hn.table_csv(hn.compare_bounds(cfg))
    (out / "compare_bounds.csv").write_text(text)
    sys.stdout.write(text)


COMMANDS = {
    "compile": (cmd_compile, "compile one protocol to a gate sequence and tally it"),
    "simulate": (cmd_simulate, "track energy and particle number along compiled sequences"),
    "sweep": (cmd_sweep, "error sweep over protocols, times, grid points and trials"),
    "histogram": (cmd_histogram, "draw counts of a randomized sampler"),
    "bounds": (cmd_bounds, "closed-form step counts and error bounds"),
    "qasm-export": (cmd_qasm, "write the compiled circuit as OpenQASM 2"),
    "compare-bounds": (cmd_compare_bounds, "measured mean-channel error against bounds"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="physdrift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--dense-limit", type=int, default=None, help="largest dense register in qubits")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.dense_limit is not None:
        set_dense_limit(args.dense_limit)
    try:
        cfg = hn.ExperimentConfig.load(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    seed = cfg.base_seed if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    handler = COMMANDS[args.command][0]
    try:
        handler(cfg, seed, out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
