"""``fockline`` command line: check, simulate, explain, probs, oracle.

Exit codes: 0 success, 1 syntax error, 2 validation error, 3 runtime
(binding, backend, dimension cap, failed oracle comparison).
"""

from __future__ import annotations

import argparse
import cmath
import json
import os
import random
import sys
from importlib import resources

from . import dsl
from .algebra import DEFAULT_PRUNE_EPS, FockPolyState, ModeId, modes_of, norm
from .elements import CIRCULAR_CONVENTIONS, CoherentState
from .engine import (evolve_coherent, evolve_fock, live_paths, mode_label,
                     path_bases)
from .errors import CircuitSyntaxError, FocklineError
from .measurement import DetectorSpec, report
from .oracle import (PASS_TOLERANCE, compare, compare_coherent, dim_cap,
                     oracle_simulate)
from .randcircuit import random_circuit

EXIT_OK, EXIT_SYNTAX, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3
BACKENDS = ("engine", "coherent", "oracle")


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


def resolve_circuit(path: str) -> str:
    """Use the file if it exists, else a shipped circuit with the same name."""
    if os.path.exists(path):
        return path
    name = os.path.basename(path)
    shipped = resources.files("fockline") / "circuits" / name
    if name.endswith(".opt") and shipped.is_file():
        return str(shipped)
    return path


def _load(path: str) -> dsl.Circuit:
    try:
        with open(resolve_circuit(path), "rb") as fh:
            data = fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        raise _Exit(EXIT_RUNTIME)
    try:
        return dsl.parse(data)
    except CircuitSyntaxError as exc:
        print(f"{path}:{exc}", file=sys.stderr)
        raise _Exit(EXIT_SYNTAX)


def _load_valid(path: str) -> dsl.Circuit:
    circuit = _load(path)
    diags = dsl._structural(circuit)
    if diags:
        for d in sorted(diags, key=lambda d: (d.line, d.column)):
            print(f"{path}:{d}", file=sys.stderr)
        raise _Exit(EXIT_INVALID)
    return circuit


def _env(args) -> dict[str, float]:
    env = {}
    for text in args.param or []:
        name, value = dsl.parse_assignment(text)
        env[name] = value
    return env


def _bind(args, circuit: dsl.Circuit) -> dsl.BoundCircuit:
    return dsl.bind(circuit, _env(args), circular=args.circular_basis)


def _backend(args, bc: dsl.BoundCircuit) -> str:
    if args.backend:
        return args.backend
    return "coherent" if bc.has_coherent else "engine"


# serialization

def _phase_text(z: complex) -> str:
    return f"{abs(z):.9f}·e^{{i{cmath.phase(z):+.6f}}}"


def _sorted_terms(state: FockPolyState):
    # modulus rounded so numerically equal amplitudes tie on canonical order
    return sorted(state.items(), key=lambda kv: (-round(abs(kv[1]), 9), kv[0]))


def fock_json(state: FockPolyState, modes: list[ModeId], backend: str, tail: float = 0.0) -> dict:
    return {
        "modes": [m.key for m in modes],
        "terms": [{"occ": {m.key: n for m, n in mono.occ}, "re": amp.real, "im": amp.imag}
                  for mono, amp in state.items()],
        "norm": norm(state),
        "backend": backend,
        "truncation_tail": tail,
    }


def coherent_json(state: CoherentState, modes: list[ModeId]) -> dict:
    amps = state.as_dict()
    return {
        "modes": [m.key for m in modes],
        "amplitudes": [{"mode": m.key, "re": amps[m].real, "im": amps[m].imag}
                       for m in modes if m in amps],
        "mean_photons": state.total_mean_photons(),
        "backend": "coherent",
        "truncation_tail": 0.0,
    }


def fock_text(state: FockPolyState, backend: str, tail: float = 0.0) -> str:
    lines = [f"backend: {backend}  terms: {len(state)}  norm: {norm(state):.12f}"
             + (f"  truncation_tail: {tail:.3e}" if tail else "")]
    for mono, amp in _sorted_terms(state):
        lines.append(f"  {_phase_text(amp)}  {mono}")
    return "\n".join(lines)


def coherent_text(state: CoherentState) -> str:
    lines = [f"backend: coherent  total mean photons: {state.total_mean_photons():.12f}"]
    for m, a in state.amps:
        lines.append(f"  {m.key:>10}  {_phase_text(a)}  (re {a.real:+.12f}, im {a.imag:+.12f})"
                     f"  mean {abs(a) ** 2:.12f}")
    return "\n".join(lines)


def _state_payload(state, modes, backend, tail, fmt):
    if isinstance(state, CoherentState):
        return coherent_json(state, modes) if fmt == "json" else coherent_text(state)
    return fock_json(state, modes, backend, tail) if fmt == "json" else fock_text(state, backend, tail)


def _emit(payload) -> None:
    if isinstance(payload, str):
        print(payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=False))


def _final_state(args, bc: dsl.BoundCircuit):
    backend = _backend(args, bc)
    if backend == "engine":
        return evolve_fock(bc, args.prune_eps)[-1].state, backend, 0.0
    if backend == "coherent":
        return evolve_coherent(bc)[-1].state, backend, 0.0
    dense = oracle_simulate(bc, args.truncation)
    return dense.to_state(args.prune_eps), backend, dense.truncation_tail


# commands

def cmd_check(args) -> int:
    circuit = _load(args.file)
    diags = dsl.validate(circuit, _env(args))
    for d in diags:
        print(f"{args.file}:{d}", file=sys.stderr)
    if diags:
        return EXIT_INVALID
    print(f"{args.file}: ok ({len(circuit.all_paths())} paths, {len(circuit.elements)} elements)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    bc = _bind(args, _load_valid(args.file))
    state, backend, tail = _final_state(args, bc)
    _emit(_state_payload(state, modes_of(bc.paths), backend, tail, args.format))
    return EXIT_OK


def cmd_explain(args) -> int:
    bc = _bind(args, _load_valid(args.file))
    backend = _backend(args, bc)
    if backend == "engine":
        snaps = evolve_fock(bc, args.prune_eps)
    elif backend == "coherent":
        snaps = evolve_coherent(bc)
    else:
        print("error: explain supports the engine and coherent backends", file=sys.stderr)
        return EXIT_RUNTIME
    modes = modes_of(bc.paths)
    if args.format == "json":
        _emit({"snapshots": [
            {"step": s.step,
             "element": "input" if s.element is None else dsl.statement_text(s.element),
             "state": _state_payload(s.state, modes, backend, 0.0, "json")}
            for s in snaps]})
        return EXIT_OK
    blocks = []
    for s in snaps:
        title = "input" if s.element is None else dsl.statement_text(s.element)
        blocks.append(f"[{s.step}] {title}\n{_state_payload(s.state, modes, backend, 0.0, 'text')}")
    print("\n\n".join(blocks))
    return EXIT_OK


def _detector_spec(args, bc: dsl.BoundCircuit) -> DetectorSpec:
    bases = path_bases(bc)
    if args.detect:
        detectors = [ModeId.parse(k) for k in args.detect]
    else:
        detectors = modes_of(live_paths(bc))
    groups = tuple(tuple(ModeId.parse(k) for k in g.split(",")) for g in args.coincidence or [])
    labels = {m: mode_label(m, bases.get(m.path, "HV")) for m in detectors}
    return DetectorSpec(tuple(detectors), groups, labels)


def cmd_probs(args) -> int:
    bc = _bind(args, _load_valid(args.file))
    try:
        spec = _detector_spec(args, bc)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    state, backend, _ = _final_state(args, bc)
    rep = report(state, spec)
    if args.format == "json":
        _emit({"backend": backend, **rep.to_dict()})
        return EXIT_OK
    print(f"backend: {backend}")
    print(f"  {'mode':>10} {'label':>10} {'click':>14} {'mean photons':>14}")
    for d in rep.detectors:
        print(f"  {d.mode:>10} {d.label:>10} {d.click_prob:14.10f} {d.mean_photons:14.10f}")
    for c in rep.coincidences:
        print(f"  coincidence {','.join(c.modes)}: {c.probability:.10g}")
    return EXIT_OK


def _oracle_one(bc: dsl.BoundCircuit, n_max: int | None, prune_eps: float) -> float:
    dense = oracle_simulate(bc, n_max)
    if bc.has_coherent:
        return compare_coherent(evolve_coherent(bc)[-1].state, dense)
    return compare(evolve_fock(bc, prune_eps)[-1].state, dense)


def random_suite(count: int, seed: int, prune_eps: float = DEFAULT_PRUNE_EPS) -> list[float]:
    """Engine-vs-oracle deviations on ``count`` seeded random circuits."""
    rng = random.Random(seed)
    cap = dim_cap()
    out = []
    for _ in range(count):
        bc = dsl.bind(random_circuit(rng, dim_cap=cap))
        out.append(_oracle_one(bc, None, prune_eps))
    return out


def cmd_oracle(args) -> int:
    if args.random:
        devs = random_suite(args.random, args.seed, args.prune_eps)
        passed = sum(d < PASS_TOLERANCE for d in devs)
        if args.format == "json":
            _emit({"circuits": len(devs), "passed": passed, "max_deviation": max(devs),
                   "tolerance": PASS_TOLERANCE, "seed": args.seed})
        else:
            print(f"random circuits: {passed}/{len(devs)} PASS  max deviation {max(devs):.3e} "
                  f"(tolerance {PASS_TOLERANCE:g}, seed {args.seed})")
        return EXIT_OK if passed == len(devs) else EXIT_RUNTIME
    if not args.file:
        print("error: oracle needs a circuit file or --random N", file=sys.stderr)
        return EXIT_RUNTIME
    bc = _bind(args, _load_valid(args.file))
    dev = _oracle_one(bc, args.truncation, args.prune_eps)
    ok = dev < PASS_TOLERANCE
    if args.format == "json":
        _emit({"file": args.file, "max_deviation": dev, "tolerance": PASS_TOLERANCE,
               "result": "PASS" if ok else "FAIL"})
    else:
        print(f"{args.file}: max deviation {dev:.3e}  {'PASS' if ok else 'FAIL'} (tolerance {PASS_TOLERANCE:g})")
    return EXIT_OK if ok else EXIT_RUNTIME


COMMANDS = {"check": cmd_check, "simulate": cmd_simulate, "explain": cmd_explain,
            "probs": cmd_probs, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockline", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("file", nargs="?", help="circuit file (.opt)")
    parser.add_argument("-p", "--param", action="append", metavar="NAME=VALUE",
                        help="bind a parameter (radians for angles); repeatable")
    parser.add_argument("--backend", choices=BACKENDS,
                        help="default: engine, or coherent when the circuit has coherent sources")
    parser.add_argument("--truncation", type=int, metavar="N", help="oracle photon cutoff per mode")
    parser.add_argument("--prune-eps", type=float, default=DEFAULT_PRUNE_EPS, metavar="E")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument("--random", type=int, metavar="N", help="oracle: run N random circuits")
    parser.add_argument("--seed", type=int, default=0, metavar="S")
    parser.add_argument("--detect", action="append", metavar="MODE",
                        help="probs: detector mode such as 3H; repeatable")
    parser.add_argument("--coincidence", action="append", metavar="M1,M2",
                        help="probs: coincidence group; repeatable")
    parser.add_argument("--circular-basis", choices=CIRCULAR_CONVENTIONS, default="real")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "oracle" and not args.file:
        print(f"error: {args.command} needs a circuit file", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        return COMMANDS[args.command](args)
    except _Exit as exc:
        return exc.code
    except FocklineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
