"""Command-line harness: generate instances, estimate acceptance, run the lemma
suites, and sweep amplification curves.

Reports go to stdout, logs to stderr. Exit codes: 0 ok, 2 usage or
incompatible input, 3 a checked invariant failed.
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import logging
import math
import secrets
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import fiat_shamir, lemmas, protocol_qsp, qsim
from .dual_mode import BINDING, HIDING, dm_run
from .hamiltonian import (
    HANDCRAFTED_KINDS,
    Instance,
    InstanceError,
    ToyCircuit,
    energy,
    load_instance,
    make_circuit_instance,
    make_handcrafted_instance,
    save_instance,
)
from .montecarlo import THREADS_ENV, estimate_acceptance
from .subsets import dilution_factor

log = logging.getLogger("qmanizk")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3
MAX_TRIALS = 10**9
EXACT_MAX_QUBITS = 10
SIGMA_BAND = 4.0

RUNNERS = {
    "qsp": protocol_qsp.original_run,
    "qsp-prime": protocol_qsp.prime_run,
    "nip": protocol_qsp.nip_run,
    "sigma": fiat_shamir.sigma_run,
    "fs": fiat_shamir.fs_run,
    "bell-fs": fiat_shamir.shared_bell_run,
    "dual": None,
}
CHEATS = ("ground", "random")
CSV_FIELDS = ("reps", "completeness_err", "soundness_err", "hoeffding_bound")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunReport:
    protocol: str
    instance: str
    trials: int
    accepts: int
    estimate: float
    analytic: float | None
    sigma: float
    seed: int
    wall_ms: int

    def __post_init__(self):
        if not 0 <= self.accepts <= self.trials:
            raise ValueError("accepts must lie in [0, trials]")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _trial(protocol: str, instance: Instance, strategy: str, mode: str | None, rng: np.random.Generator) -> bool:
    if protocol == "dual":
        return dm_run(instance, strategy, mode, rng)[0]
    return RUNNERS[protocol](instance, strategy, rng)[0]


def _amplified_trial(protocol, instance, strategy, mode, reps, threshold, rng) -> bool:
    accepts = sum(_trial(protocol, instance, strategy, mode, rng) for _ in range(reps))
    return accepts > threshold


def _check_compatible(protocol: str, instance: Instance, strategy: str) -> None:
    if protocol not in RUNNERS:
        raise UsageError(f"unknown protocol {protocol!r}")
    if protocol == "nip":
        try:
            protocol_qsp.xxzz_pairs(instance.hamiltonian)
        except InstanceError as exc:
            raise UsageError(f"nip needs a paired XX/ZZ hamiltonian: {exc}") from exc
    if strategy == "honest" and instance.witness is None:
        raise UsageError("instance has no witness; pass --cheat ground or --cheat random")


def _mode(protocol: str, mode: str | None) -> str | None:
    if protocol == "dual":
        return mode or BINDING
    if mode is not None:
        raise UsageError("--mode applies only to the dual protocol")
    return None


def _strategy_state(instance: Instance, strategy: str):
    if strategy == "random":
        return qsim.DensityMatrix.maximally_mixed(instance.num_qubits)
    return protocol_qsp.resolve_strategy(strategy, instance).state


def analytic_acceptance(protocol: str, instance: Instance, strategy: str) -> float | None:
    """Exact acceptance for teleport-a-state provers; ``None`` above ``EXACT_MAX_QUBITS`` qubits."""
    if instance.num_qubits > EXACT_MAX_QUBITS:
        return None
    state = _strategy_state(instance, strategy)
    if protocol == "nip":
        return 1.0 - energy(state, instance.hamiltonian)
    return protocol_qsp.acceptance_probability_exact(state, instance)


def _pick_seed(seed: int | None) -> int:
    if seed is None:
        seed = secrets.randbits(32)
        log.info("seed %d", seed)
    return seed


def _load(path: str) -> Instance:
    try:
        return load_instance(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def cmd_gen(args) -> int:
    if args.circuit:
        circuit = ToyCircuit.parse(args.circuit, args.n)
        instance = make_circuit_instance(circuit, qsim.product_state([np.array([1, 0])] * circuit.num_qubits))
        kind = "circuit"
    else:
        if args.kind is None:
            raise UsageError("pass --kind or --circuit")
        if args.n is None:
            raise UsageError("--kind needs --n")
        instance = make_handcrafted_instance(args.kind, args.n, args.seed or 0)
        kind = args.kind
    save_instance(instance, args.out)
    summary = {
        "kind": kind,
        "out": str(args.out),
        "num_qubits": instance.num_qubits,
        "label": instance.label,
        "alpha": instance.alpha,
        "beta": instance.beta,
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def run_report(protocol, path, instance, trials, seed, strategy, mode) -> RunReport:
    if not 1 <= trials <= MAX_TRIALS:
        raise UsageError(f"--trials must lie in [1, {MAX_TRIALS}]")
    mode = _mode(protocol, mode)
    _check_compatible(protocol, instance, strategy)
    start = time.perf_counter()
    trial = functools.partial(_trial, protocol, instance, strategy, mode)
    est = estimate_acceptance(trial, trials, seed)
    wall_ms = int((time.perf_counter() - start) * 1000)
    return RunReport(
        protocol, str(path), trials, est.accepts, est.rate, analytic_acceptance(protocol, instance, strategy),
        est.sigma, seed, wall_ms,
    )


def cmd_run(args) -> int:
    seed = _pick_seed(args.seed)
    instance = _load(args.instance)
    strategy = args.cheat or "honest"
    report = run_report(args.protocol, args.instance, instance, args.trials, seed, strategy, args.mode)
    log.info("%s: %d/%d accepted", args.protocol, report.accepts, report.trials)
    print(report.to_json())
    return EXIT_OK


def cmd_lemmas(args) -> int:
    seed = _pick_seed(args.seed)
    names = list(lemmas.SUITES) if args.suite == "all" else [args.suite]
    failed = 0
    for name in names:
        start = time.perf_counter()
        rows = lemmas.run_suites([name], seed)
        log.info("suite %s took %.1f s", name, time.perf_counter() - start)
        for row in rows:
            failed += not row.passed
            print(f"{'PASS' if row.passed else 'FAIL'}  {row.suite:<9} {row.name}  ({row.detail})")
    return EXIT_INVARIANT if failed else EXIT_OK


def _gap(protocol: str, instances: list[Instance]) -> tuple[float, float]:
    """Completeness and soundness of one copy, from the loosest promise in the set."""
    alpha = max(i.alpha for i in instances)
    beta = min(i.beta for i in instances)
    if protocol == "nip":
        return 1 - alpha, 1 - beta
    sizes = {i.num_qubits for i in instances}
    if len(sizes) != 1:
        raise UsageError("every instance in a sweep must have the same qubit count")
    scale = dilution_factor(sizes.pop())
    return 1 - alpha / scale, 1 - beta / scale


def sweep_rows(protocol, instances, reps_list, trials, seed, mode=None):
    """One row per ``reps``: pooled error rates of the threshold test and the Hoeffding bound.

    Instance ``i`` (in file-name order) is estimated with seed ``seed + i``,
    so a one-repetition row reproduces ``run`` on the first instance.
    """
    yes = [(i, inst) for i, inst in enumerate(instances) if inst.label == "yes"]
    no = [(i, inst) for i, inst in enumerate(instances) if inst.label == "no"]
    if not yes or not no:
        raise UsageError("a sweep needs at least one yes-instance and one no-instance")
    mode = _mode(protocol, mode)
    for _, inst in yes:
        _check_compatible(protocol, inst, "honest")
    for _, inst in no:
        _check_compatible(protocol, inst, "ground")
    c, s = _gap(protocol, instances)
    rows = []
    for reps in reps_list:
        threshold = reps * (c + s) / 2
        misses = sum(
            trials - estimate_acceptance(
                functools.partial(_amplified_trial, protocol, inst, "honest", mode, reps, threshold), trials, seed + i
            ).accepts
            for i, inst in yes
        )
        fooled = sum(
            estimate_acceptance(
                functools.partial(_amplified_trial, protocol, inst, "ground", mode, reps, threshold), trials, seed + i
            ).accepts
            for i, inst in no
        )
        rows.append(
            {
                "reps": reps,
                "completeness_err": misses / (trials * len(yes)),
                "soundness_err": fooled / (trials * len(no)),
                "hoeffding_bound": protocol_qsp.hoeffding_bound(reps, c, s),
            }
        )
    return rows


def _parse_reps(text: str) -> list[int]:
    try:
        reps = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--reps must be a comma-separated list of integers, got {text!r}") from None
    if not reps or min(reps) < 1:
        raise UsageError("--reps needs positive integers")
    return reps


def cmd_sweep(args) -> int:
    seed = _pick_seed(args.seed)
    files = sorted(Path(args.instances).glob("*.json"))
    if not files:
        raise UsageError(f"no instance files in {args.instances}")
    instances = [_load(str(f)) for f in files]
    rows = sweep_rows(args.protocol, instances, _parse_reps(args.reps), args.trials, seed, args.mode)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    violations = 0
    for row in rows:
        for key, pool in (("completeness_err", "yes"), ("soundness_err", "no")):
            p = row[key]
            band = SIGMA_BAND * math.sqrt(max(p * (1 - p), 1e-12) / args.trials)
            if p > row["hoeffding_bound"] + band:
                violations += 1
                log.warning("reps=%d: %s %.4f above bound %.4f", row["reps"], key, p, row["hoeffding_bound"])
    print(json.dumps({"out": str(args.out), "rows": len(rows), "violations": violations}, sort_keys=True))
    return EXIT_INVARIANT if violations else EXIT_OK


SWEEP_EPILOG = """\
CSV columns:
  reps              copies per amplified proof
  completeness_err  fraction of amplified honest runs rejected, pooled over yes-instances
  soundness_err     fraction of amplified ground-state cheats accepted, pooled over no-instances
  hoeffding_bound   exp(-reps (c - s)^2 / 2) for the single-copy gap c - s
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmanizk",
        description="Classically verifiable zero-knowledge proofs for local Hamiltonians, simulated.",
        epilog=f"{THREADS_ENV} caps the number of worker processes.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write an instance file")
    gen.add_argument("--kind", choices=HANDCRAFTED_KINDS)
    gen.add_argument("--circuit", help='toy circuit such as "H:0,CNOT:0-1"; the witness is |0...0>')
    gen.add_argument("--n", type=int, help="qubit count (data qubits for --circuit)")
    gen.add_argument("--seed", type=int, help="seed for randomized kinds")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="estimate acceptance; prints a JSON report")
    run.add_argument("--protocol", required=True, choices=list(RUNNERS))
    run.add_argument("--instance", required=True)
    run.add_argument("--trials", type=int, default=10_000)
    run.add_argument("--seed", type=int)
    run.add_argument("--cheat", choices=CHEATS, help="teleport a ground state or send random bits")
    run.add_argument("--mode", choices=(BINDING, HIDING), help="CRS mode of the dual protocol")
    run.set_defaults(func=cmd_run)

    lem = sub.add_parser("lemmas", help="run the self-check suites")
    lem.add_argument("--suite", default="all", choices=["all", *lemmas.SUITES])
    lem.add_argument("--seed", type=int)
    lem.set_defaults(func=cmd_lemmas)

    sweep = sub.add_parser(
        "sweep", help="amplification curves as CSV", epilog=SWEEP_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sweep.add_argument("--protocol", required=True, choices=list(RUNNERS))
    sweep.add_argument("--instances", required=True, help="directory of instance files")
    sweep.add_argument("--reps", required=True, help="comma-separated repetition counts")
    sweep.add_argument("--trials", type=int, default=200, help="amplified runs per instance and row")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--mode", choices=(BINDING, HIDING))
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except (UsageError, InstanceError, qsim.QubitLimitError) as exc:
        print(f"qmanizk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
