"""Command line entry point: ``timebin <command> ...``.

Exit codes: 0 success, 2 input error, 3 numerical-validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import harness
from .compiler import mesh_decompose, reconstruct
from .dsl import TbcError, format_unitary, parse_document, parse_unitary, serialize_circuit
from .elements import CircuitError
from .modespace import max_phase_deviation, unitarity_error
from .photonics import HardwareConfig, NoiseModel, control_schedule
from .simulator import matrix_to_csv

EXIT_INPUT = 2
EXIT_NUMERIC = 3
ROUNDTRIP_TOL = 1e-9
NOISELESS_TOL = 1e-12
ORACLE_TOL = 1e-10


class ValidationFailure(RuntimeError):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(args, payload: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _json(obj) -> str:
    return json.dumps(harness._jsonable(obj), indent=2) + "\n"


def _noise(args, base: NoiseModel = None) -> NoiseModel:
    base = base or NoiseModel.noiseless(args.seed)
    kw = base.as_dict()
    kw["seed"] = args.seed
    if getattr(args, "noise", None) is not None:
        kw["theta_rel_jitter"] = args.noise
    if getattr(args, "drift", None) is not None:
        kw["phase_drift_rate"] = args.drift
    if getattr(args, "dark_rate", None) is not None:
        kw["dark_rate"] = args.dark_rate
    return NoiseModel(**kw)


def nearest_unitary(M: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(M)
    return W @ Vh


# -- commands -------------------------------------------------------------------------


def cmd_compile(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        U = parse_unitary(_read(args.unitary))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    projected = unitarity_error(U) > 1e-10
    if projected:
        U = nearest_unitary(U)
    if U.shape[0] % 2:
        raise ValueError(f"mesh compilation needs an even dimension, got {U.shape[0]}")
    spec = mesh_decompose(U)
    err = max_phase_deviation(reconstruct(spec), U)
    text = serialize_circuit(spec)
    stored = max_phase_deviation(reconstruct(parse_document(text).spec), U)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    report = {
        "spec_hash": harness.spec_hash(spec),
        "N": spec.n_logical,
        "n_couplers": len(spec.couplers),
        "projected_to_unitary": projected,
        "roundtrip_error": err,
        "serialized_error": stored,
    }
    if not args.output:
        report["circuit"] = text
    _emit(args, _json(report))
    if err > ROUNDTRIP_TOL:
        raise ValidationFailure(f"round-trip error {err:.3g} exceeds {ROUNDTRIP_TOL:g}")


def cmd_simulate(args):
    doc = parse_document(_read(args.circuit))
    noise = _noise(args, doc.noise)
    loss = args.loss_db
    if loss is None:
        loss = doc.hardware.system_loss_db if doc.hardware and doc.hardware.system_loss_db else 0.0
    rep = harness.simulate(doc.spec, noise, args.shots, args.seed, loss_db=loss,
                           t_hours=args.t_hours, basis=args.basis)
    if args.csv:
        _emit(args, matrix_to_csv(rep.matrix))
    else:
        _emit(args, _json(rep.to_dict()))
    if noise.is_noiseless and not args.shots and abs(rep.fidelity - 1) > NOISELESS_TOL:
        raise ValidationFailure(f"noiseless fidelity {rep.fidelity!r} differs from 1")


def cmd_sweep(args):
    res = harness.theta_sweep(args.points)
    if args.csv:
        lines = ["theta,fidelity_identity,fidelity_swap"]
        for t, a, b in zip(res["theta"], res["fidelity_identity"], res["fidelity_swap"]):
            lines.append(f"{t:.12g},{a:.12g},{b:.12g}")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, _json(res))
    if abs(res["fidelity_identity"][0] - 1) > NOISELESS_TOL or abs(res["fidelity_swap"][-1] - 1) > NOISELESS_TOL:
        raise ValidationFailure("sweep endpoints are not exact")


def cmd_perms(args):
    if args.n is None:
        sizes = None
    else:
        if not 2 <= args.n <= 8:
            raise ValueError("--n must lie in 2..8")
        total = math.factorial(args.n)
        k = args.samples if args.samples is not None else min(total, harness.DEFAULT_SUITE_SIZES[args.n])
        sizes = {args.n: k}
    rep = harness.permutation_suite(sizes, _noise(args), args.seed, args.shots)
    if args.csv:
        lines = ["index,N,sigma,fidelity"]
        for i, (item, f) in enumerate(zip(rep.extra["suite"], rep.extra["fidelities"])):
            lines.append(f"{i},{item['N']},{' '.join(map(str, item['sigma']))},{f:.12g}")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, _json(rep.to_dict()))


def cmd_stability(args):
    spec = parse_document(_read(args.circuit)).spec if args.circuit else None
    noise = _noise(args, NoiseModel(seed=args.seed))
    rep = harness.stability_run(spec, noise, args.hours, args.step, args.shots or None, args.seed)
    if args.csv:
        lines = ["t_hours,fidelity"]
        lines += [f"{t:.6g},{f:.12g}" for t, f in zip(rep.extra["times_h"], rep.extra["series"])]
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, _json(rep.to_dict()))


def cmd_walk(args):
    rep = harness.walk_experiment(args.depth, args.theta, shots=args.shots, seed=args.seed)
    if args.csv:
        lines = ["depth,pol,mode,probability"]
        for e in rep.extra["depths"]:
            for pol in ("H", "V"):
                lines += [f"{e['depth']},{pol},{m},{p:.12g}" for m, p in enumerate(e[pol]["exact"])]
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, _json(rep.to_dict()))
    for e in rep.extra["depths"]:
        for pol in ("H", "V"):
            if abs(e[pol]["sum"] - 1) > NOISELESS_TOL or e[pol]["oracle_max_dev"] > ORACLE_TOL:
                raise ValidationFailure(f"depth {e['depth']} input {pol} fails the oracle check")


def cmd_schedule(args):
    doc = parse_document(_read(args.circuit))
    hw = doc.hardware or HardwareConfig()
    sched = control_schedule(doc.spec, hw, args.kappa)
    if args.csv:
        _emit(args, sched.to_csv())
    else:
        pulses = [p.__dict__ for p in sched]
        n_bins = doc.spec.mode_space().n_bins_padded
        _emit(args, _json({
            "spec_hash": harness.spec_hash(doc.spec),
            "bin_separation_ps": hw.bin_separation_ps,
            "frame_fits": hw.frame_fits(n_bins),
            "pulses": pulses,
        }))


def cmd_export_unitary(args):
    doc = parse_document(_read(args.circuit))
    _emit(args, format_unitary(reconstruct(doc.spec)))


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timebin", description="Time-bin photonic circuit tools")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, csv=True):
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--seed", type=int, default=0)
        if csv:
            sp.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")
        return sp

    sp = common(sub.add_parser("compile", help="decompose a unitary CSV into a .tbc circuit"), csv=False)
    sp.add_argument("unitary")
    sp.add_argument("-o", "--output", help="circuit file to write")
    sp.set_defaults(func=cmd_compile)

    sp = common(sub.add_parser("simulate", help="detection matrix and fidelity of a circuit"))
    sp.add_argument("circuit")
    sp.add_argument("--noise", type=float, help="relative theta jitter")
    sp.add_argument("--drift", type=float, help="phase drift, rad/hour")
    sp.add_argument("--dark-rate", type=float)
    sp.add_argument("--shots", type=int)
    sp.add_argument("--loss-db", type=float)
    sp.add_argument("--t-hours", type=float, default=0.0)
    sp.add_argument("--basis", choices=["computational", "dft", "xi", "zeta"])
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("sweep", help="single-coupler theta sweep"))
    sp.add_argument("--points", type=int, default=33)
    sp.set_defaults(func=cmd_sweep)

    sp = common(sub.add_parser("perms", help="permutation suite"))
    sp.add_argument("--n", type=int, help="single dimension (default: the 362-item suite)")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--shots", type=int)
    sp.set_defaults(func=cmd_perms)

    sp = common(sub.add_parser("stability", help="fidelity time series under the noise model"))
    sp.add_argument("--hours", type=float, default=108.0)
    sp.add_argument("--step", type=float, default=1.0)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--drift", type=float)
    sp.add_argument("--shots", type=int, default=10_000)
    sp.add_argument("--circuit", help=".tbc file (default: the middle-coupler swap)")
    sp.set_defaults(func=cmd_stability)

    sp = common(sub.add_parser("walk", help="Galton-board walk up to a depth"))
    sp.add_argument("--depth", type=int, default=18)
    sp.add_argument("--theta", type=float, default=math.pi / 4)
    sp.add_argument("--shots", type=int)
    sp.set_defaults(func=cmd_walk)

    sp = common(sub.add_parser("schedule", help="control-pulse timing for a circuit"))
    sp.add_argument("circuit")
    sp.add_argument("--kappa", type=float, default=math.pi / 2)
    sp.set_defaults(func=cmd_schedule)

    sp = common(sub.add_parser("unitary", help="export the logical unitary of a circuit as CSV"),
                csv=False)
    sp.add_argument("circuit")
    sp.set_defaults(func=cmd_export_unitary)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    try:
        args.func(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TbcError, CircuitError, ValueError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
