"""Run a bound circuit on the substitution engine or the coherent backend."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .algebra import (DEFAULT_PRUNE_EPS, FockPolyState, Monomial, ModeId,
                      Polarization, modes_of, product, substitute)
from .dsl import BoundCircuit
from .elements import SLOT_NAMES, CoherentState, coherent_apply, coherent_source
from .errors import BackendMismatch

State = Union[FockPolyState, CoherentState]


@dataclass(frozen=True)
class Snapshot:
    step: int
    element: object | None  # the ElementSpec node, None for the input state
    state: State


def initial_fock_state(bc: BoundCircuit, prune_eps: float = DEFAULT_PRUNE_EPS) -> FockPolyState:
    """Product of ``(h a_H^dag + v a_V^dag)`` over photon sources, on vacuum."""
    if bc.has_coherent:
        raise BackendMismatch("the engine backend needs photon/vacuum sources; use --backend coherent or oracle")
    state = FockPolyState.vacuum(prune_eps=prune_eps, paths=bc.paths)
    for src in bc.sources:
        if src.kind != "photon":
            continue
        photon = FockPolyState(
            [(Monomial.of({ModeId(src.path, Polarization.H): 1}), src.h),
             (Monomial.of({ModeId(src.path, Polarization.V): 1}), src.v)],
            prune_eps, bc.paths)
        state = product(state, photon)
    return state.with_paths(bc.paths)


def initial_coherent_state(bc: BoundCircuit) -> CoherentState:
    if any(s.kind == "photon" for s in bc.sources):
        raise BackendMismatch("the coherent backend needs coherent/vacuum sources; use --backend engine or oracle")
    amps: dict[ModeId, complex] = {}
    for src in bc.sources:
        if src.kind == "coherent":
            amps.update(coherent_source(src.path, src.alpha, src.pol))
    return CoherentState.of(amps, bc.paths)


def evolve_fock(bc: BoundCircuit, prune_eps: float = DEFAULT_PRUNE_EPS) -> list[Snapshot]:
    state = initial_fock_state(bc, prune_eps)
    snaps = [Snapshot(0, None, state)]
    for i, (spec, el) in enumerate(zip(bc.circuit.elements, bc.elements), start=1):
        state = substitute(state, el.mode_map(), bc.paths)
        snaps.append(Snapshot(i, spec, state))
    return snaps


def evolve_coherent(bc: BoundCircuit) -> list[Snapshot]:
    state = initial_coherent_state(bc)
    snaps = [Snapshot(0, None, state)]
    for i, (spec, el) in enumerate(zip(bc.circuit.elements, bc.elements), start=1):
        state = coherent_apply(el.mode_map(), state, bc.paths)
        snaps.append(Snapshot(i, spec, state))
    return snaps


def simulate(bc: BoundCircuit, backend: str = "engine",
             prune_eps: float = DEFAULT_PRUNE_EPS) -> State:
    if backend == "engine":
        return evolve_fock(bc, prune_eps)[-1].state
    if backend == "coherent":
        return evolve_coherent(bc)[-1].state
    raise ValueError(f"unknown backend {backend!r}")


def circuit_modes(bc: BoundCircuit) -> list[ModeId]:
    return modes_of(bc.paths)


def live_paths(bc: BoundCircuit) -> list[str]:
    """Paths still carrying light (or vacuum) after the last element."""
    live = list(bc.circuit.paths)
    for el in bc.elements:
        for p in el.in_ports:
            if p in live:
                live.remove(p)
        for q in el.out_ports:
            if q not in live:
                live.append(q)
    return sorted(live)


def path_bases(bc: BoundCircuit) -> dict[str, str]:
    """Which basis each path's two slots hold after the circuit (HV, RL or DIAG)."""
    basis = {p: "HV" for p in bc.paths}
    for el in bc.elements:
        if el.kind == "basis":
            basis[el.out_ports[0]] = el.target
        elif el.kind in ("bs", "pbs"):
            incoming = {basis[p] for p in el.in_ports if p is not None}
            common = incoming.pop() if len(incoming) == 1 else "HV"
            for q in el.out_ports:
                basis[q] = common
    return basis


def mode_label(m: ModeId, basis: str = "HV") -> str:
    """Display name such as ``3R`` for the H slot of a path measured in RL."""
    x, y = SLOT_NAMES[basis]
    return f"{m.path}{x if m.pol is Polarization.H else y}"
