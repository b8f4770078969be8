"""Configuration-driven experiments.

A config is a YAML mapping; see ``configs/`` for one example per
subcommand. Keys::

    system:      {fcidump: h2_sto3g | path} | {hubbard: {sites, t_hop, u}}
                 | {pauli_json: path, n_electrons: int}
    systems:     list of the above, each optionally with ``name``
    protocols:   [trotter1, trotter2, suzuki4, qdrift, physdrift_abs,
                  physdrift_mean, random_permutation, sparsto]
    t:           number or list
    n_grid:      list of positive integers, ascending
    grid_mode:   exponential_count (default) | steps
    protection:  false | true | discrete
    permutations: physDrift copies with shuffled group interiors, averaged
    noise:       {depol_p, shot_alpha}
    trials:      repeat count (default 20); trial i uses base_seed + i
    base_seed:   integer
    metrics:     subset of [spectral_error, mixing_bound, state_error,
                  observables, tallies]
    initial_state: hartree_fock (default) | ground
    plot:        write SVG line plots (needs matplotlib)
    workers:     process-pool size (default 1)
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from physdrift import bounds as bnd
from physdrift import numerics as nm
from physdrift import scheduler as sch
from physdrift.fermion import (
    PhysicalGroup,
    build_hubbard,
    group_pauli_terms,
    hartree_fock_state,
    jordan_wigner,
    load_fcidump,
    particle_number,
    sector_ground_state,
)
from physdrift.gadgets import synthesize_sequence, tally
from physdrift.pauli import PauliHamiltonian

RESULT_COLUMNS = [
    "system",
    "protocol",
    "seed",
    "t",
    "N",
    "exponential_count",
    "cnot_count",
    "spectral_error",
    "mixing_bound",
    "state_error",
    "energy_deviation",
    "number_deviation",
]
METRICS = ("spectral_error", "mixing_bound", "state_error", "observables", "tallies")
CHECKPOINTS = {"qdrift": sch.SAMPLE_STEP_END, "physdrift_abs": sch.GROUP_END,
               "physdrift_mean": sch.GROUP_END}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# systems


@dataclass
class System:
    name: str
    hamiltonian: PauliHamiltonian
    groups: list[PhysicalGroup] | None
    n_electrons: int | None

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits


def bundled_fixture(name: str) -> Path:
    path = resources.files("physdrift") / "data" / f"{name}.fcidump"
    if not path.is_file():
        raise ConfigError(f"no bundled fixture named {name!r}")
    return Path(str(path))


def reference_energies() -> dict[str, Any]:
    return json.loads((resources.files("physdrift") / "data" / "references.json").read_text())


def _resolve(path: str, base_dir: Path) -> Path:
    p = Path(path)
    if not p.is_absolute():
        p = base_dir / p
    if not p.is_file():
        raise ConfigError(f"file not found: {p}")
    return p


def load_system(spec: Mapping, base_dir: Path = Path(".")) -> System:
    if "fcidump" in spec:
        src = str(spec["fcidump"])
        path = _resolve(src, base_dir) if src.endswith(".fcidump") or os.sep in src else bundled_fixture(src)
        sq = load_fcidump(path)
        h = jordan_wigner(sq)
        return System(spec.get("name", Path(src).stem), h, group_pauli_terms(h), sq.n_electrons)
    if "hubbard" in spec:
        hp = spec["hubbard"]
        sq = build_hubbard(int(hp["sites"]), float(hp.get("t_hop", 1.0)), float(hp.get("u", 4.0)))
        h = jordan_wigner(sq)
        return System(spec.get("name", f"hubbard{hp['sites']}"), h, group_pauli_terms(h), sq.n_electrons)
    if "pauli_json" in spec:
        path = _resolve(str(spec["pauli_json"]), base_dir)
        h = PauliHamiltonian.from_json(json.loads(path.read_text()))
        try:
            groups = group_pauli_terms(h)
        except ValueError:
            groups = None
        n_e = spec.get("n_electrons")
        return System(spec.get("name", path.stem), h, groups, None if n_e is None else int(n_e))
    raise ConfigError("system needs one of fcidump, hubbard or pauli_json")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    systems: list[dict]
    protocols: list[str] = field(default_factory=lambda: ["trotter1", "qdrift", "physdrift_mean"])
    t: list[float] = field(default_factory=lambda: [1.0])
    n_grid: list[int] = field(default_factory=lambda: [100])
    grid_mode: str = "exponential_count"
    protection: bool | str = False
    permutations: int = 1
    noise: nm.NoiseConfig = field(default_factory=lambda: nm.NoiseConfig(depol_p=0.0))
    trials: int = 20
    base_seed: int = 0
    metrics: list[str] = field(default_factory=lambda: ["spectral_error", "mixing_bound", "tallies"])
    initial_state: str = "hartree_fock"
    plot: bool = False
    workers: int = 1
    base_dir: Path = Path(".")
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.systems:
            raise ConfigError("no system given")
        for p in self.protocols:
            if p not in sch.PROTOCOLS:
                raise ConfigError(f"unknown protocol {p!r}; choose from {', '.join(sch.PROTOCOLS)}")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be non-empty and strictly ascending")
        if any(int(n) != n or n < 1 for n in self.n_grid):
            raise ConfigError("n_grid entries must be positive integers")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.grid_mode not in ("exponential_count", "steps"):
            raise ConfigError("grid_mode must be exponential_count or steps")
        if self.protection not in (False, True, "discrete"):
            raise ConfigError("protection must be false, true or discrete")
        if self.permutations < 1:
            raise ConfigError("permutations must be at least 1")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r}")
        if self.initial_state not in ("hartree_fock", "ground"):
            raise ConfigError("initial_state must be hartree_fock or ground")

    @classmethod
    def from_mapping(cls, data: Mapping, base_dir: Path = Path(".")) -> ExperimentConfig:
        data = dict(data)
        if "systems" in data:
            systems = list(data.pop("systems"))
        elif "system" in data:
            systems = [data.pop("system")]
        else:
            raise ConfigError("config needs a system or systems key")
        kw: dict[str, Any] = {"systems": systems, "base_dir": base_dir}
        t = data.pop("t", 1.0)
        kw["t"] = [float(x) for x in (t if isinstance(t, list) else [t])]
        if "n_grid" in data:
            kw["n_grid"] = [int(x) for x in data.pop("n_grid")]
        if "noise" in data:
            kw["noise"] = nm.NoiseConfig(**data.pop("noise"))
        for key in ("protocols", "grid_mode", "protection", "permutations", "trials", "base_seed",
                    "metrics", "initial_state", "plot", "workers"):
            if key in data:
                kw[key] = data.pop(key)
        kw["extra"] = data
        return cls(**kw)

    @classmethod
    def load(cls, path: str | os.PathLike) -> ExperimentConfig:
        path = Path(path)
        data = yaml.safe_load(path.read_text())
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path} does not hold a mapping")
        return cls.from_mapping(data, path.parent)


# ---------------------------------------------------------------------------
# single runs


def initial_state(system: System, kind: str = "hartree_fock") -> np.ndarray:
    n_e = system.n_electrons if system.n_electrons is not None else system.n_qubits // 2
    if kind == "ground":
        return sector_ground_state(system.hamiltonian, n_e)[1]
    return hartree_fock_state(system.n_qubits, n_e)


def units_for(protocol: str, system: System, n: int, grid_mode: str) -> int:
    if grid_mode == "steps":
        return n
    return sch.units_for_count(protocol, system.hamiltonian, n, system.groups)


def compile_for(protocol: str, system: System, t: float, units: int, seed: int,
                protection: bool | str = False) -> sch.GateSequence:
    if protocol.startswith("physdrift_") and system.groups is None:
        raise ConfigError(f"{system.name} has no physical groups for {protocol}")
    seq = sch.compile_protocol(protocol, system.hamiltonian, t, units, seed, system.groups)
    if protection and protocol in sch.DETERMINISTIC:
        seq = sch.apply_symmetric_protection(seq, seed, discrete=protection == "discrete")
    return seq


def _protocol_unitary(protocol, system, t, units, seed, cfg) -> tuple[sch.GateSequence, np.ndarray]:
    seq = compile_for(protocol, system, t, units, seed, cfg.protection)
    u = nm.sequence_unitary(seq)
    if protocol.startswith("physdrift_") and cfg.permutations > 1:
        for k in range(1, cfg.permutations):
            u = u + nm.sequence_unitary(sch.permute_within_blocks(seq, [seed, k]))
        u = u / cfg.permutations
    return seq, u


@dataclass
class _Task:
    system: System
    protocol: str
    t: float
    n: int
    seed: int
    mixing: float


def _run_task(task: _Task, cfg: ExperimentConfig) -> dict:
    system, protocol, t = task.system, task.protocol, task.t
    units = units_for(protocol, system, task.n, cfg.grid_mode)
    seq, v = _protocol_unitary(protocol, system, t, units, task.seed, cfg)
    exact = nm.exact_unitary(system.hamiltonian, t)
    row = {c: "" for c in RESULT_COLUMNS}
    row.update(system=system.name, protocol=protocol, seed=task.seed, t=t, N=task.n,
               exponential_count=len(seq), mixing_bound=task.mixing)
    if "tallies" in cfg.metrics:
        row["cnot_count"] = tally(synthesize_sequence(seq)).cnot_count
    if "spectral_error" in cfg.metrics:
        row["spectral_error"] = nm.spectral_error(exact, v, aligned=True)
    if "state_error" in cfg.metrics:
        psi0 = initial_state(system, cfg.initial_state)
        if cfg.noise.depol_p > 0:
            rng = np.random.default_rng([task.seed, 1])
            out = nm.run_statevector(synthesize_sequence(seq), psi0, cfg.noise, rng)
        else:
            out = nm.apply_entries(psi0, seq.entries)
        row["state_error"] = nm.state_error(exact @ psi0, out)
    if "observables" in cfg.metrics:
        psi0 = initial_state(system, cfg.initial_state)
        number = particle_number(system.n_qubits).pauli_form
        kind = CHECKPOINTS.get(protocol, sch.TROTTER_STEP_END)
        series = nm.track_observables(seq, psi0, {"H": system.hamiltonian, "N": number}, kind, t)
        energy, count = series.column("H"), series.column("N")
        row["energy_deviation"] = float(np.mean(np.abs(energy[1:] - energy[0])))
        row["number_deviation"] = float(np.max(np.abs(count - count[0])))
    return row


def mean_channel_bound(protocol: str, system: System, t: float, units: int, cfg: ExperimentConfig,
                       samples: int = 32) -> float:
    """``2 ||U - E[V]||`` with the analytic mean when one exists."""
    exact = nm.exact_unitary(system.hamiltonian, t)
    if protocol in sch.DETERMINISTIC and not cfg.protection:
        mean = nm.sequence_unitary(compile_for(protocol, system, t, units, 0))
    elif protocol in sch.DETERMINISTIC or protocol == "sparsto":
        mean = sum(nm.sequence_unitary(compile_for(protocol, system, t, units, cfg.base_seed + r,
                                                   cfg.protection))
                   for r in range(samples)) / samples
    else:
        mean = nm.channel_mean_unitary(protocol, system.hamiltonian, t, units, groups=system.groups)
    return nm.mixing_bound(exact, mean)


def _format(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def rows_to_csv(rows: list[dict], columns=RESULT_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_format(r.get(c, "")) for c in columns])
    return buf.getvalue()


def run(cfg: ExperimentConfig, out_dir: str | os.PathLike | None = None) -> list[dict]:
    """One row per (system, protocol, t, N, trial); rows sorted deterministically."""
    systems = [load_system(s, cfg.base_dir) for s in cfg.systems]
    tasks = []
    for system in systems:
        for protocol in cfg.protocols:
            for t in cfg.t:
                for n in cfg.n_grid:
                    mixing = ""
                    if "mixing_bound" in cfg.metrics:
                        units = units_for(protocol, system, n, cfg.grid_mode)
                        mixing = mean_channel_bound(protocol, system, t, units, cfg)
                    for i in range(cfg.trials):
                        tasks.append(_Task(system, protocol, t, n, cfg.base_seed + i, mixing))
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_run_task, tasks, [cfg] * len(tasks)))
    else:
        rows = [_run_task(task, cfg) for task in tasks]
    order = {(s.name, p): k for k, (s, p) in enumerate((s, p) for s in systems for p in cfg.protocols)}
    rows.sort(key=lambda r: (order[(r["system"], r["protocol"])], r["t"], r["N"], r["seed"]))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(rows_to_csv(rows))
        if cfg.plot:
            plot_rows(rows, out, "spectral_error" if "spectral_error" in cfg.metrics else "state_error")
    return rows


def summarize(rows: list[dict], column: str = "spectral_error") -> dict[tuple, tuple[float, float, int]]:
    """``(system, protocol, t, N) -> (mean, standard error, count)``."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r.get(column, "") == "":
            continue
        groups.setdefault((r["system"], r["protocol"], r["t"], r["N"]), []).append(float(r[column]))
    out = {}
    for k, v in groups.items():
        a = np.array(v)
        se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
        out[k] = (float(a.mean()), se, a.size)
    return out


def plot_rows(rows: list[dict], out_dir: Path, column: str = "spectral_error") -> list[Path]:
    """Log-scale line chart of the trial mean of ``column`` against N, per (system, t)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stats = summarize(rows, column)
    panels = sorted({(k[0], k[2]) for k in stats})
    written = []
    for system, t in panels:
        fig, ax = plt.subplots(figsize=(5, 4))
        for protocol in sorted({k[1] for k in stats if k[0] == system and k[2] == t}):
            pts = sorted((k[3], v[0], v[1]) for k, v in stats.items()
                         if k[0] == system and k[1] == protocol and k[2] == t)
            xs, ys, es = zip(*pts)
            ax.errorbar(xs, ys, yerr=es, marker="o", label=protocol)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel(column)
        ax.set_title(f"{system}, t={t:g}")
        ax.legend()
        path = out_dir / f"{column}_{system}_t{t:g}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# histogram and bound comparison


def histogram(cfg: ExperimentConfig, protocol: str, draws: int, seed: int) -> list[dict]:
    """Per-index draw counts with the expectation ``N p_j``.

    For physDrift each row is a group and ``qdrift_expected`` holds ``N``
    times the summed qDrift probability of the group's strings.
    """
    system = load_system(cfg.systems[0], cfg.base_dir)
    h = system.hamiltonian
    p_term = np.abs(h.coeffs) / h.lambda_one_norm
    if protocol == "qdrift":
        idx = np.random.default_rng(seed).choice(len(h), size=draws, p=p_term)
        counts = np.bincount(idx, minlength=len(h))
        return [{"index": j, "label": str(term.string), "count": int(counts[j]),
                 "expected": draws * p_term[j]} for j, term in enumerate(h.terms)]
    if protocol.startswith("physdrift_"):
        scheme = protocol.split("_", 1)[1]
        groups = system.groups
        seq = sch.sample_physdrift(groups, 1.0, draws, scheme, seed)
        counts = np.bincount(seq.params["draws"], minlength=len(groups))
        p = sch.physdrift_distribution(groups, scheme).weights
        position = {term.string: k for k, term in enumerate(h.terms)}
        rows = []
        for j, g in enumerate(groups):
            q = sum(p_term[position[term.string]] for term in g.terms)
            label = f"{g.class_tag.value}{list(g.orbital_indices)}"
            rows.append({"index": j, "label": label, "count": int(counts[j]),
                         "expected": draws * p[j], "qdrift_expected": draws * q})
        return rows
    raise ConfigError(f"histogram needs a randomized sampling protocol, got {protocol!r}")


def compare_bounds(cfg: ExperimentConfig) -> list[dict]:
    """Measured ``2 ||U - E[V]||`` against the matching closed-form bound."""
    rows = []
    for spec in cfg.systems:
        system = load_system(spec, cfg.base_dir)
        h = system.hamiltonian
        for protocol in cfg.protocols:
            if protocol not in ("qdrift", "random_permutation", "trotter1"):
                raise ConfigError(f"no bound comparison for {protocol!r}")
            for t in cfg.t:
                exact = nm.exact_unitary(h, t)
                for n in cfg.n_grid:
                    mean = nm.channel_mean_unitary(protocol, h, t, n, groups=system.groups)
                    measured = nm.mixing_bound(exact, mean)
                    if protocol == "qdrift":
                        bound = bnd.qdrift_error(h.lambda_one_norm, t, n, pre_asymptotic=True)
                        kind = bnd.INEQUALITY
                    elif protocol == "random_permutation":
                        bound = bnd.random_perm_bound(h.lambda_max, t, len(h), n)
                        kind = bnd.INEQUALITY
                    else:
                        bound = (t * len(h) * h.lambda_max) ** 2 / n
                        kind = bnd.UP_TO_CONSTANT
                    rows.append({"system": system.name, "protocol": protocol, "t": t, "N": n,
                                 "measured": measured, "bound": bound, "ratio": measured / bound,
                                 "kind": kind,
                                 "within_bound": measured <= bound if kind == bnd.INEQUALITY else ""})
    return rows


def table_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    return rows_to_csv(rows, list(rows[0]))
