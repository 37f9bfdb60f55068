"""Detector-level predictions from engine, coherent or oracle states.

Detectors are threshold detectors: a click means at least one photon in
the mode.  Photon-number-resolving statistics are in the occupation
distribution of each :class:`ModeReport`.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Union

from .algebra import FockPolyState, ModeId
from .elements import CoherentState
from .errors import DuplicateMode, UnknownMode
from .oracle import DenseFockVector

AnyState = Union[FockPolyState, CoherentState, DenseFockVector]

POISSON_CUTOFF = 1e-12


def _check_mode(state: AnyState, m: ModeId) -> None:
    if isinstance(state, DenseFockVector):
        if m not in state.modes:
            raise UnknownMode(f"mode {m.key} is not in the state's mode list")
        return
    if state.paths and m.path not in state.paths:
        raise UnknownMode(f"path {m.path!r} is not declared")


def _as_poly(state: AnyState) -> FockPolyState | CoherentState:
    return state.to_state() if isinstance(state, DenseFockVector) else state


def click_prob(state: AnyState, m: ModeId) -> float:
    """Probability that a threshold detector on ``m`` fires."""
    _check_mode(state, m)
    state = _as_poly(state)
    if isinstance(state, CoherentState):
        return -math.expm1(-abs(state.amplitude(m)) ** 2)
    p = sum(abs(a) ** 2 for mono, a in state.items() if mono.count(m) >= 1)
    return min(p, 1.0)


def mean_photons(state: AnyState, m: ModeId) -> float:
    _check_mode(state, m)
    if isinstance(state, DenseFockVector):
        return state.mean_photons(m)
    if isinstance(state, CoherentState):
        return abs(state.amplitude(m)) ** 2
    return sum(mono.count(m) * abs(a) ** 2 for mono, a in state.items())


def occupation_distribution(state: AnyState, m: ModeId) -> list[float]:
    """``P(n)`` for n = 0, 1, ...; Poisson for coherent states (cut at 1e-12)."""
    _check_mode(state, m)
    state = _as_poly(state)
    if isinstance(state, CoherentState):
        mean = abs(state.amplitude(m)) ** 2
        dist, n, p = [], 0, math.exp(-mean)
        while True:
            dist.append(p)
            if 1.0 - sum(dist) < POISSON_CUTOFF or n > 1000:
                return dist
            n += 1
            p *= mean / n
    dist: list[float] = []
    for mono, a in state.items():
        n = mono.count(m)
        if n >= len(dist):
            dist.extend([0.0] * (n + 1 - len(dist)))
        dist[n] += abs(a) ** 2
    return dist or [0.0]


def coincidence_prob(state: AnyState, modes: Sequence[ModeId]) -> float:
    """Probability that every listed detector fires."""
    if len(modes) < 2:
        raise ValueError("a coincidence needs at least two modes")
    if len(set(modes)) != len(modes):
        raise DuplicateMode(f"modes listed twice: {', '.join(m.key for m in modes)}")
    for m in modes:
        _check_mode(state, m)
    state = _as_poly(state)
    if isinstance(state, CoherentState):
        return math.prod(click_prob(state, m) for m in modes)
    return sum(abs(a) ** 2 for mono, a in state.items() if all(mono.count(m) >= 1 for m in modes))


@dataclass(frozen=True)
class DetectorSpec:
    modes: tuple[ModeId, ...] = ()
    coincidences: tuple[tuple[ModeId, ...], ...] = ()
    labels: dict = field(default_factory=dict, compare=False)  # ModeId -> display name


@dataclass
class ModeReport:
    mode: str
    label: str
    click_prob: float
    mean_photons: float
    distribution: list[float]


@dataclass
class CoincidenceReport:
    modes: list[str]
    probability: float


@dataclass
class DetectionReport:
    detectors: list[ModeReport] = field(default_factory=list)
    coincidences: list[CoincidenceReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def click_total(self) -> float:
        return sum(d.click_prob for d in self.detectors)


def report(state: AnyState, spec: DetectorSpec) -> DetectionReport:
    out = DetectionReport()
    for m in spec.modes:
        out.detectors.append(ModeReport(
            mode=m.key,
            label=spec.labels.get(m, m.key),
            click_prob=click_prob(state, m),
            mean_photons=mean_photons(state, m),
            distribution=occupation_distribution(state, m),
        ))
    for group in spec.coincidences:
        out.coincidences.append(CoincidenceReport([m.key for m in group], coincidence_prob(state, group)))
    return out


def parse_modes(keys: Iterable[str]) -> list[ModeId]:
    return [ModeId.parse(k) for k in keys]
