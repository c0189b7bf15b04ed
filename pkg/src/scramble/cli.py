"""Experiment runner: validates JSON configs, dispatches runs, writes CSV+JSON.

Exit codes: 0 success, 2 config error, 3 numerical assertion violation.
CSV output is bitwise deterministic for a given config (including across
worker counts); wall-clock runtime lives only in the JSON summary.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .liouville import DEFAULT_DELTA, bound8_report, regularize
from .models import (
    CircuitSpec,
    SykConfig,
    circuit_unitary_family,
    entangler2_preset,
    parse_circuit_json,
    scrambler_preset,
    syk_trajectory,
)
from .qdense import SIGMA_X, SIGMA_Z, Bipartition, kron_all, seeded_rng, random_hermitian
from .scrambling import OtocConfig, ScramblingReport, bound_report

SLACK_TOL = -1e-9
OBAR_T0_TOL = 1e-12

KINDS = ("syk", "circuit", "bound8", "otoc-sweep")
BUILTIN_CIRCUITS = {"scrambler3": scrambler_preset, "entangler2": entangler2_preset}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class AssertionViolation(RuntimeError):
    """A hard numerical assertion failed; the message names the first sample."""


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _field(data: dict, name: str, kind: type, where: str = "", required: bool = True, default=None):
    path = f"{where}.{name}" if where else name
    if name not in data:
        _expect(not required, f"{path}: missing required field")
        return default
    value = data[name]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    _expect(isinstance(value, kind) and not isinstance(value, bool), f"{path}: expected {kind.__name__}")
    return value


@dataclass
class ExperimentConfig:
    kind: str
    partition: Bipartition
    times: np.ndarray
    otoc: OtocConfig
    output: str
    seed: int
    workers: int
    raw: dict
    syk: SykConfig | None = None
    circuit: CircuitSpec | None = None
    circuit_ref: str = ""
    modified: bool = False
    model: dict = field(default_factory=dict)
    delta: float = DEFAULT_DELTA


def _parse_time_grid(data: dict) -> np.ndarray:
    grid = data.get("time_grid")
    _expect(isinstance(grid, dict), "time_grid: missing or not an object")
    start = _field(grid, "start", float, "time_grid")
    stop = _field(grid, "stop", float, "time_grid")
    samples = _field(grid, "samples", int, "time_grid")
    _expect(start == 0.0, "time_grid.start: first sample must be at t = 0")
    _expect(samples >= 2, "time_grid.samples: need at least 2 samples")
    _expect(stop > start, "time_grid.stop: grid must be strictly increasing")
    return np.linspace(start, stop, samples)


def _parse_otoc(data: dict) -> OtocConfig:
    block = data.get("otoc", {})
    _expect(isinstance(block, dict), "otoc: expected an object")
    kwargs = {}
    if "expectation_state" in block:
        kwargs["expectation_state"] = _field(block, "expectation_state", str, "otoc")
    if "averaging" in block:
        kwargs["averaging"] = _field(block, "averaging", str, "otoc")
    if "samples" in block:
        kwargs["samples"] = _field(block, "samples", int, "otoc")
    if "seed" in block:
        kwargs["seed"] = _field(block, "seed", int, "otoc")
    try:
        return OtocConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"otoc: {exc}") from None


def _resolve_circuit(ref, base_dir: str) -> tuple[CircuitSpec, str]:
    _expect(isinstance(ref, str), "circuit: expected a string reference")
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        _expect(name in BUILTIN_CIRCUITS, f"circuit: unknown builtin {name!r}")
        return BUILTIN_CIRCUITS[name](), ref
    path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
    _expect(os.path.isfile(path), f"circuit: file not found: {ref}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_circuit_json(text), ref
    except ValueError as exc:
        raise ConfigError(f"circuit ({ref}): {exc}") from None


def load_config(path: str) -> ExperimentConfig:
    _expect(os.path.isfile(path), f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    _expect(isinstance(data, dict), "top level: expected an object")

    kind = _field(data, "kind", str)
    _expect(kind in KINDS, f"kind: must be one of {list(KINDS)}")
    part_block = data.get("partition")
    _expect(isinstance(part_block, dict), "partition: missing or not an object")
    n_a = _field(part_block, "n_a", int, "partition")
    n_b = _field(part_block, "n_b", int, "partition")
    try:
        partition = Bipartition(n_a, n_b)
    except ValueError as exc:
        raise ConfigError(f"partition: {exc}") from None

    times = _parse_time_grid(data)
    otoc = _parse_otoc(data)
    output = _field(data, "output", str)
    seed = _field(data, "seed", int)
    workers = _field(data, "workers", int, required=False, default=1)
    _expect(workers >= 1, "workers: must be at least 1")

    cfg = ExperimentConfig(
        kind=kind, partition=partition, times=times, otoc=otoc,
        output=output, seed=seed, workers=workers, raw=data,
    )
    base_dir = os.path.dirname(os.path.abspath(path))

    if kind == "syk":
        block = data.get("syk")
        _expect(isinstance(block, dict), "syk: missing or not an object")
        n_majorana = _field(block, "n_majorana", int, "syk")
        q = _field(block, "q", int, "syk")
        j_squared = _field(block, "j_squared", float, "syk")
        realizations = _field(block, "realizations", int, "syk", required=False, default=300)
        try:
            cfg.syk = SykConfig(n_majorana=n_majorana, q=q, j_squared=j_squared,
                                seed=seed, realizations=realizations, time_grid=times)
        except ValueError as exc:
            raise ConfigError(f"syk: {exc}") from None
        _expect(partition.n_qubits == cfg.syk.n_qubits,
                f"partition: n_a + n_b = {partition.n_qubits} does not match "
                f"the {cfg.syk.n_qubits}-qubit SYK register")
    elif kind in ("circuit", "otoc-sweep"):
        _expect("circuit" in data, "circuit: missing required field")
        cfg.circuit, cfg.circuit_ref = _resolve_circuit(data["circuit"], base_dir)
        _expect(partition.n_qubits == cfg.circuit.n_qubits,
                f"partition: n_a + n_b = {partition.n_qubits} does not match "
                f"the {cfg.circuit.n_qubits}-qubit circuit")
        if "modified_otoc" in data:
            _expect(isinstance(data["modified_otoc"], bool), "modified_otoc: expected a boolean")
            cfg.modified = data["modified_otoc"]
        else:
            cfg.modified = kind == "circuit" and partition.n_a == 1
        _expect(not (cfg.modified and partition.n_a != 1),
                "modified_otoc: requires a single-qubit A subsystem")
    elif kind == "bound8":
        block = data.get("model")
        _expect(isinstance(block, dict), "model: missing or not an object")
        mtype = _field(block, "type", str, "model")
        _expect(mtype in ("random", "ising_chain"), "model.type: must be 'random' or 'ising_chain'")
        cfg.model = dict(block)
        if mtype == "ising_chain":
            cfg.model.setdefault("j", 1.0)
            cfg.model.setdefault("hx", 0.7)
        cfg.delta = _field(data, "delta", float, required=False, default=DEFAULT_DELTA)
        _expect(0.0 < cfg.delta < 1.0, "delta: must be in (0, 1)")
    return cfg


def _zero_state(n_qubits: int) -> np.ndarray:
    d = 2**n_qubits
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _ising_chain(n_qubits: int, j: float, hx: float) -> np.ndarray:
    d = 2**n_qubits
    h = np.zeros((d, d), dtype=complex)
    for i in range(n_qubits - 1):
        factors = [np.eye(2)] * n_qubits
        factors[i] = SIGMA_Z
        factors[i + 1] = SIGMA_Z
        h += j * kron_all(*factors)
    for i in range(n_qubits):
        factors = [np.eye(2)] * n_qubits
        factors[i] = SIGMA_X
        h += hx * kron_all(*factors)
    return h


def _bound8_hamiltonian(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.model["type"] == "random":
        return random_hermitian(cfg.partition.dim, seeded_rng(cfg.seed, 8))
    return _ising_chain(cfg.partition.n_qubits, cfg.model["j"], cfg.model["hx"])


def _format_row(values) -> str:
    return ",".join(f"{v:.16e}" for v in values)


def write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    lines = [",".join(header)]
    for i in range(len(columns[0])):
        lines.append(_format_row(col[i] for col in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _scrambling_columns(rep: ScramblingReport, include_modified: bool):
    header = ["t", "I", "I2", "Obar", "deltaO"]
    cols = [rep.times, rep.mutual_info, rep.renyi2_mi, rep.obar, rep.delta_obar]
    if include_modified:
        header.append("deltaMO")
        cols.append(rep.delta_modified)
    return header, cols


def _check_obar_origin(rep: ScramblingReport, exact: bool) -> None:
    if exact and abs(rep.obar[0] - 1.0) > OBAR_T0_TOL:
        raise AssertionViolation(
            f"Obar(0) = {rep.obar[0]:.17g} deviates from 1 beyond {OBAR_T0_TOL}"
        )


def _check_scrambling_assertions(rep: ScramblingReport, exact: bool) -> None:
    idx = rep.first_slack_violation(SLACK_TOL)
    if idx is not None:
        raise AssertionViolation(
            f"slack9 = {rep.slack[idx]:.3e} below {SLACK_TOL} first at t = {rep.times[idx]!r}"
        )
    _check_obar_origin(rep, exact)


def run_experiment(cfg: ExperimentConfig) -> tuple[dict, str]:
    """Execute one experiment; returns (summary dict, csv path)."""
    started = time.perf_counter()
    out_dir = os.path.dirname(cfg.output)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    csv_path = cfg.output + ".csv"
    exact = cfg.otoc.averaging == "exact_enumeration"
    summary: dict = {
        "kind": cfg.kind,
        "config": cfg.raw,
        "version": __version__,
        "csv": csv_path,
        "seeds": {"base": cfg.seed},
        "violations": {},
    }

    if cfg.kind == "syk":
        workers = cfg.workers
        env = os.environ.get("SCRAMBLE_WORKERS")
        if env is not None:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError(f"SCRAMBLE_WORKERS: not an integer: {env!r}") from None
            _expect(workers >= 1, "SCRAMBLE_WORKERS: must be at least 1")
        initial = _zero_state(cfg.syk.n_qubits)
        reports, avg = syk_trajectory(cfg.syk, cfg.partition, initial,
                                      otoc_cfg=cfg.otoc, workers=workers)
        summary["seeds"]["disorder_streams"] = "(base, realization_index)"
        summary["workers"] = workers
        summary["violations"]["per_realization_slack9"] = int(
            sum(np.count_nonzero(r.slack < SLACK_TOL) for r in reports)
        )
        header, cols = _scrambling_columns(avg, False)
        header.append("slack9")
        cols.append(avg.slack)
        write_csv(csv_path, header, cols)
        summary["violations"]["slack9"] = int(np.count_nonzero(avg.slack < SLACK_TOL))
        summary["runtime_seconds"] = time.perf_counter() - started
        _check_scrambling_assertions(avg, exact)
        return summary, csv_path

    if cfg.kind in ("circuit", "otoc-sweep"):
        initial = _zero_state(cfg.partition.n_qubits)
        family = circuit_unitary_family(cfg.circuit)
        rep = bound_report(family, cfg.partition, initial, cfg.times,
                           cfg=cfg.otoc, include_modified=cfg.modified)
        header, cols = _scrambling_columns(rep, cfg.modified)
        header.append("slack9")
        cols.append(rep.slack)
        write_csv(csv_path, header, cols)
        summary["circuit"] = cfg.circuit_ref
        summary["violations"]["slack9"] = int(np.count_nonzero(rep.slack < SLACK_TOL))
        if cfg.kind == "otoc-sweep":
            gap = np.abs(np.exp(-rep.renyi2_mi) - rep.obar)
            summary["exp_neg_i2_vs_obar"] = {"max": float(gap.max()), "mean": float(gap.mean())}
        summary["runtime_seconds"] = time.perf_counter() - started
        _check_scrambling_assertions(rep, exact)
        return summary, csv_path

    # bound8: scrambling channels from the pure start, rate channels from the
    # delta-regularized twin of the same trajectory.
    h = _bound8_hamiltonian(cfg)
    initial = _zero_state(cfg.partition.n_qubits)
    rep = bound_report(h, cfg.partition, initial, cfg.times, cfg=cfg.otoc)
    rates = bound8_report(h, regularize(initial, cfg.delta), cfg.partition, cfg.times)
    header = ["t", "I", "I2", "Obar", "deltaO", "Idot", "SdotA", "SdotB", "SdotE",
              "slack9", "slack8"]
    cols = [rep.times, rep.mutual_info, rep.renyi2_mi, rep.obar, rep.delta_obar,
            rates.i_dot, rates.s_dot_a, rates.s_dot_b, rates.s_dot_e,
            rep.slack, rates.slack]
    write_csv(csv_path, header, cols)
    summary["model"] = cfg.model
    summary["delta"] = cfg.delta
    # The mutual-information bound is a scrambling-trajectory statement; on a
    # generic Hamiltonian trajectory the slack9 channel is diagnostic only.
    summary["violations"]["slack9"] = int(np.count_nonzero(rep.slack < SLACK_TOL))
    summary["violations"]["slack8"] = rates.violations
    summary["runtime_seconds"] = time.perf_counter() - started
    _check_obar_origin(rep, exact)
    idx = rates.first_slack_violation(SLACK_TOL)
    if idx is not None:
        raise AssertionViolation(
            f"slack8 = {rates.slack[idx]:.3e} below {SLACK_TOL} first at t = {rates.times[idx]!r}"
        )
    return summary, csv_path


def preset_dir():
    return resources.files("scramble") / "presets"


def preset_names() -> list[str]:
    return sorted(p.name[: -len(".json")] for p in preset_dir().iterdir()
                  if p.name.endswith(".json"))


def resolve_config_path(ref: str) -> str:
    """A filesystem path, or the name of a shipped preset config."""
    if os.path.isfile(ref):
        return ref
    if ref in preset_names():
        return str(preset_dir() / f"{ref}.json")
    raise ConfigError(f"config file not found: {ref}")


def cmd_run(ref: str) -> int:
    try:
        cfg = load_config(resolve_config_path(ref))
        summary, csv_path = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AssertionViolation as exc:
        print(f"assertion violation: {exc}", file=sys.stderr)
        return 3
    with open(cfg.output + ".json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {csv_path} and {cfg.output}.json")
    return 0


def cmd_validate(ref: str) -> int:
    try:
        load_config(resolve_config_path(ref))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print("ok")
    return 0


def cmd_presets_list() -> int:
    for name in preset_names():
        path = preset_dir() / f"{name}.json"
        with path.open(encoding="utf-8") as fh:
            kind = json.load(fh).get("kind", "?")
        print(f"{name:18s} {kind:10s} {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="scramble",
        description="Scrambling diagnostics and entropy-production bound checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config (path or preset name)")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    p_pre = sub.add_parser("presets", help="shipped experiment configs")
    pre_sub = p_pre.add_subparsers(dest="presets_command", required=True)
    pre_sub.add_parser("list", help="list shipped configs")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "validate":
        return cmd_validate(args.config)
    return cmd_presets_list()


if __name__ == "__main__":
    sys.exit(main())
