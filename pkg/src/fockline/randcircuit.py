"""Seeded random circuits for property runs and DSL fuzzing."""

from __future__ import annotations

import math
import random

from .dsl import (BS, HWP, PBS, POLARIZATIONS, PR, Basis, Circuit, CoherentSource,
                  Param, PhotonSource, VacuumSource)
from .elements import BASIS_TARGETS
from .expr import FUNCTIONS, RESERVED, BinOp, Call, Expr, Name, Neg, Num

OPTICAL_KINDS = ("bs", "pbs", "pr", "basis")


def _num(rng: random.Random, hi: float = 2 * math.pi) -> Num:
    return Num(round(rng.uniform(0, hi), 12))


def _photon(rng: random.Random, path: str) -> PhotonSource:
    # cos(a)|H> + sin(a) e^{ib}|V> is normalized for any a, b
    a, b = _num(rng), _num(rng)
    return PhotonSource(path, Call("cos", a), BinOp("*", Call("sin", a), Call("cis", b)))


def random_circuit(rng: random.Random, max_paths: int = 4, max_photons: int = 2,
                   max_elements: int = 8, kinds: tuple[str, ...] = OPTICAL_KINDS,
                   dim_cap: int | None = None) -> Circuit:
    """A valid photon-source circuit whose elements keep the path set fixed.

    With ``dim_cap`` the path count is reduced until the oracle's default
    truncation ``(photons + 1) ** (2 * paths)`` fits under the cap.
    """
    photons = rng.randint(1, max_photons)
    n_paths = rng.randint(max(2, photons), max(2, max_paths))
    if dim_cap is not None:
        while n_paths > max(2, photons) and (photons + 1) ** (2 * n_paths) > dim_cap:
            n_paths -= 1
    paths = [str(i + 1) for i in range(n_paths)]
    sources = tuple(_photon(rng, p) for p in rng.sample(paths, photons))
    elements = []
    for _ in range(rng.randint(1, max_elements)):
        kind = rng.choice(kinds)
        if kind in ("bs", "pbs"):
            p, q = rng.sample(paths, 2)
            outs = (p, q) if rng.random() < 0.5 else (q, p)
            if kind == "bs":
                elements.append(BS(Num(round(rng.random(), 12)), (p, q), outs))
            else:
                elements.append(PBS((p, q), outs))
        elif kind == "pr":
            elements.append(PR(_num(rng), rng.choice(paths)))
        elif kind == "hwp":
            elements.append(HWP(_num(rng), rng.choice(paths)))
        else:
            elements.append(Basis(rng.choice(BASIS_TARGETS), rng.choice(paths)))
    return Circuit(tuple(paths), (), sources, tuple(elements))


def random_expr(rng: random.Random, names: list[str], depth: int = 0) -> Expr:
    roll = rng.random()
    if depth >= 3 or roll < 0.3:
        if names and rng.random() < 0.5:
            return Name(rng.choice(names))
        if rng.random() < 0.15:
            return Name("pi")
        return Num(rng.choice([0.0, 0.5, 1.0, 2.0, rng.uniform(0, 10), rng.uniform(0, 1e-6),
                               rng.uniform(0, 1e20)]))
    if roll < 0.45:
        return Neg(random_expr(rng, names, depth + 1))
    if roll < 0.65:
        return Call(rng.choice(FUNCTIONS), random_expr(rng, names, depth + 1))
    return BinOp(rng.choice("+-*/"), random_expr(rng, names, depth + 1),
                 random_expr(rng, names, depth + 1))


def _label(rng: random.Random) -> str:
    alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 6)))


def random_ast(rng: random.Random) -> Circuit:
    """A parseable (not necessarily valid) circuit exercising every statement form."""
    paths = list(dict.fromkeys(_label(rng) for _ in range(rng.randint(0, 6))))
    params = []
    for name in dict.fromkeys("p" + _label(rng) for _ in range(rng.randint(0, 4))):
        if name in RESERVED:
            continue
        default = None if rng.random() < 0.3 else rng.choice([0.0, -1.5, 3.25, rng.uniform(-1e3, 1e3)])
        params.append(Param(name, default))
    names = [p.name for p in params]
    pool = paths or ["x"]

    def expr() -> Expr:
        return random_expr(rng, names)

    sources = []
    for _ in range(rng.randint(0, 3)):
        roll, path = rng.random(), rng.choice(pool)
        if roll < 0.4:
            sources.append(PhotonSource(path, expr(), expr()))
        elif roll < 0.8:
            sources.append(CoherentSource(path, expr(), rng.choice(POLARIZATIONS)))
        else:
            sources.append(VacuumSource(path))
    elements = []
    for _ in range(rng.randint(0, 8)):
        kind = rng.choice(("bs", "pbs", "pr", "hwp", "basis"))
        p = rng.choice(pool)
        second = None if rng.random() < 0.3 else rng.choice(pool + [_label(rng)])
        outs = (rng.choice(pool + [_label(rng)]), _label(rng))
        if kind == "bs":
            elements.append(BS(expr(), (p, second), outs))
        elif kind == "pbs":
            elements.append(PBS((p, second), outs))
        elif kind == "pr":
            elements.append(PR(expr(), p))
        elif kind == "hwp":
            elements.append(HWP(expr(), p))
        else:
            elements.append(Basis(rng.choice(BASIS_TARGETS), p))
    return Circuit(tuple(paths), tuple(params), tuple(sources), tuple(elements))
