"""Mode maps for beam splitters, polarizing beam splitters and retarders.

Every element is a linear substitution of creation operators.  Port order
carries the sign convention: for a beam splitter the second in-port's
light picks up the minus sign on the second out-port.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .algebra import ModeId, ModeLinearMap, Polarization
from .errors import EtaOutOfRange, NonIsometricMap, UndeclaredMode

H, V = Polarization.H, Polarization.V
SQRT_HALF = math.sqrt(0.5)

BASIS_TARGETS = ("RL", "DIAG")
CIRCULAR_CONVENTIONS = ("real", "physical")

# display names of the two polarization slots after a basis change
SLOT_NAMES = {"HV": ("H", "V"), "RL": ("R", "L"), "DIAG": ("D", "A")}


def bs_matrix(eta: float) -> np.ndarray:
    """2x2 beam splitter matrix; rows are out-ports, columns in-ports."""
    if not 0.0 <= eta <= 1.0:
        raise EtaOutOfRange(f"beam splitter reflectance eta={eta!r} is outside [0, 1]")
    t, r = math.sqrt(1.0 - eta), math.sqrt(eta)
    return np.array([[t, r], [r, -t]], dtype=complex)


def bs_phase_relation(eta: float) -> float:
    """arg(r0) + arg(r1) - arg(t0) - arg(t1) for ``bs_matrix(eta)``."""
    (t0, r1), (r0, t1) = bs_matrix(eta)
    return cmath.phase(r0) + cmath.phase(r1) - cmath.phase(t0) - cmath.phase(t1)


def bs_map(eta: float, ins: tuple[str | None, str | None],
           outs: tuple[str, str]) -> ModeLinearMap:
    """Beam splitter with reflectance ``eta``; ``None`` marks a vacuum in-port."""
    (t, r), (_, minus_t) = bs_matrix(eta)
    p1, p2 = ins
    q1, q2 = outs
    rows = {}
    for pol in Polarization:
        if p1 is not None:
            rows[ModeId(p1, pol)] = [(ModeId(q1, pol), t), (ModeId(q2, pol), r)]
        if p2 is not None:
            rows[ModeId(p2, pol)] = [(ModeId(q1, pol), r), (ModeId(q2, pol), minus_t)]
    return ModeLinearMap(rows)


def pbs_map(ins: tuple[str | None, str | None], outs: tuple[str, str]) -> ModeLinearMap:
    """H is transmitted (port 1 -> 1, 2 -> 2), V is reflected (1 -> 2, 2 -> 1)."""
    p1, p2 = ins
    q1, q2 = outs
    rows = {}
    if p1 is not None:
        rows[ModeId(p1, H)] = [(ModeId(q1, H), 1.0)]
        rows[ModeId(p1, V)] = [(ModeId(q2, V), 1.0)]
    if p2 is not None:
        rows[ModeId(p2, H)] = [(ModeId(q2, H), 1.0)]
        rows[ModeId(p2, V)] = [(ModeId(q1, V), 1.0)]
    return ModeLinearMap(rows)


def pr_map(theta: float, path: str) -> ModeLinearMap:
    # creation operators pick up the conjugate of the field's e^{-i theta}
    return ModeLinearMap({
        ModeId(path, H): [(ModeId(path, H), 1.0)],
        ModeId(path, V): [(ModeId(path, V), cmath.exp(1j * theta))],
    })


def hwp_map(delta: float, path: str) -> ModeLinearMap:
    """Half-wave plate, modelled as a retarder acting on V only."""
    return pr_map(delta, path)


def basis_matrix(target: str, circular: str = "real") -> np.ndarray:
    """Columns are the images of H and V in the (X, Y) slots of ``target``."""
    if target not in BASIS_TARGETS:
        raise ValueError(f"basis target must be one of {BASIS_TARGETS}, got {target!r}")
    if circular not in CIRCULAR_CONVENTIONS:
        raise ValueError(f"circular convention must be one of {CIRCULAR_CONVENTIONS}")
    y = 1j if (target == "RL" and circular == "physical") else 1.0
    return SQRT_HALF * np.array([[1.0, 1.0], [y, -y]], dtype=complex)


def basis_map(target: str, path: str, circular: str = "real") -> ModeLinearMap:
    """Relabel the path's H/V slots as the two modes of ``target``.

    H -> (X + Y)/sqrt2 and V -> (X - Y)/sqrt2; afterwards the H slot holds X
    (R or +45) and the V slot holds Y (L or -45).
    """
    mat = basis_matrix(target, circular)
    x, y = ModeId(path, H), ModeId(path, V)
    return ModeLinearMap({
        x: [(x, mat[0, 0]), (y, mat[1, 0])],
        y: [(x, mat[0, 1]), (y, mat[1, 1])],
    })


@dataclass(frozen=True)
class Element:
    """A bound optical element (all parameters numeric).

    ``kind`` is one of ``bs``, ``pbs``, ``pr``, ``hwp``, ``basis``.  Single-path
    elements use ``in_ports == out_ports == (path,)``; ``None`` in
    ``in_ports`` is a vacuum port.
    """

    kind: str
    in_ports: tuple[str | None, ...]
    out_ports: tuple[str, ...]
    eta: float | None = None
    angle: float | None = None
    target: str | None = None
    circular: str = field(default="real", compare=False)

    def mode_map(self) -> ModeLinearMap:
        if self.kind == "bs":
            return bs_map(self.eta, self.in_ports, self.out_ports)
        if self.kind == "pbs":
            return pbs_map(self.in_ports, self.out_ports)
        if self.kind == "pr":
            return pr_map(self.angle, self.out_ports[0])
        if self.kind == "hwp":
            return hwp_map(self.angle, self.out_ports[0])
        if self.kind == "basis":
            return basis_map(self.target, self.out_ports[0], self.circular)
        raise ValueError(f"unknown element kind {self.kind!r}")

    @property
    def paths(self) -> set[str]:
        return {p for p in self.in_ports if p is not None} | set(self.out_ports)


@dataclass(frozen=True)
class CoherentState:
    """Product of displaced vacua, one complex amplitude per mode.

    Modes not listed are in vacuum.  ``paths`` is the declared universe
    (empty means untracked).
    """

    amps: tuple[tuple[ModeId, complex], ...] = ()
    paths: frozenset[str] = field(default=frozenset(), compare=False)

    @classmethod
    def of(cls, amps: Mapping[ModeId, complex] | Iterable[tuple[ModeId, complex]] = (),
           paths: Iterable[str] = ()) -> "CoherentState":
        items = amps.items() if isinstance(amps, Mapping) else amps
        acc: dict[ModeId, complex] = {}
        for m, a in items:
            a = complex(a)
            if not (math.isfinite(a.real) and math.isfinite(a.imag)):
                raise ValueError(f"coherent amplitude for {m.key} is not finite")
            acc[m] = acc.get(m, 0j) + a
        return cls(tuple(sorted((m, a) for m, a in acc.items() if a != 0)), frozenset(paths))

    def amplitude(self, m: ModeId) -> complex:
        return dict(self.amps).get(m, 0j)

    def as_dict(self) -> dict[ModeId, complex]:
        return dict(self.amps)

    def total_mean_photons(self) -> float:
        return sum(abs(a) ** 2 for _, a in self.amps)

    def modes(self) -> set[ModeId]:
        return {m for m, _ in self.amps}


def coherent_source(path: str, alpha: complex, pol: str) -> dict[ModeId, complex]:
    """Per-mode amplitudes of a coherent pulse with linear polarization ``pol``."""
    h, v = {"H": (1.0, 0.0), "V": (0.0, 1.0),
            "+45": (SQRT_HALF, SQRT_HALF), "-45": (SQRT_HALF, -SQRT_HALF)}[pol]
    return {ModeId(path, H): alpha * h, ModeId(path, V): alpha * v}


def coherent_apply(mmap: ModeLinearMap, cs: CoherentState,
                   paths: Iterable[str] | None = None) -> CoherentState:
    """Displacement amplitudes transform with the same matrix as creation operators."""
    universe = frozenset(paths) if paths is not None else cs.paths
    if universe:
        missing = mmap.paths - universe
        if missing:
            raise UndeclaredMode(f"map references undeclared path(s): {', '.join(sorted(missing))}")
    touched = set(mmap.inputs)
    collide = (cs.modes() - touched) & set(mmap.outputs)
    if collide:
        keys = ", ".join(m.key for m in sorted(collide))
        raise NonIsometricMap(f"map output collides with occupied untouched mode(s): {keys}")
    out: dict[ModeId, complex] = {}
    for m, a in cs.amps:
        for dst, c in mmap.image(m).items():
            out[dst] = out.get(dst, 0j) + c * a
    return CoherentState.of(out, universe)
