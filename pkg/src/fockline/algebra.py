"""Photonic states as polynomials in creation operators acting on vacuum.

A state is a sparse map from :class:`Monomial` (occupation numbers per
mode) to a complex amplitude.  Amplitudes live in the orthonormal Fock
basis ``|{n_m}>``; the raw coefficient of the operator monomial
``prod (a_m^dag)^{n_m}`` is the amplitude divided by ``sqrt(prod n_m!)``.
Optical elements act by linear substitution of creation operators
(:func:`substitute`), which is done on raw coefficients and converted back.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Union

import numpy as np

from .errors import NonIsometricMap, UndeclaredMode

DEFAULT_PRUNE_EPS = 1e-12
ISOMETRY_ATOL = 1e-12


class Polarization(str, Enum):
    H = "H"
    V = "V"

    def __str__(self) -> str:
        return self.value


class ModeId(NamedTuple):
    """A (path, polarization) pair; tuples order by path label, then H < V."""

    path: str
    pol: Polarization

    @property
    def key(self) -> str:
        return f"{self.path}{self.pol.value}"

    @classmethod
    def parse(cls, key: str) -> "ModeId":
        """Inverse of :attr:`key`, e.g. ``"3H"`` -> ``ModeId("3", H)``."""
        if len(key) < 2 or key[-1] not in "HV":
            raise ValueError(f"mode key must look like <path><H|V>, got {key!r}")
        return cls(key[:-1], Polarization(key[-1]))

    def __repr__(self) -> str:
        return f"ModeId({self.key})"


def mode(path: str | int, pol: str | Polarization) -> ModeId:
    return ModeId(str(path), Polarization(pol))


def modes_of(paths: Iterable[str]) -> list[ModeId]:
    """Both polarization modes of every path, in canonical order."""
    return sorted(ModeId(p, pol) for p in paths for pol in Polarization)


Occupation = tuple[tuple[ModeId, int], ...]


@lru_cache(maxsize=None)
def _sqrt_factorial(n: int) -> float:
    return math.sqrt(math.factorial(n))


@dataclass(frozen=True, order=True)
class Monomial:
    """Occupation numbers, stored as a sorted tuple with no zero entries."""

    occ: Occupation = ()

    @classmethod
    def of(cls, occupation: Mapping[ModeId, int] | Iterable[tuple[ModeId, int]] = ()) -> "Monomial":
        items = occupation.items() if isinstance(occupation, Mapping) else occupation
        merged: dict[ModeId, int] = {}
        for m, n in items:
            if not isinstance(m, ModeId):
                m = ModeId(*m)
            if int(n) != n or n < 0:
                raise ValueError(f"exponent must be a non-negative integer, got {n!r}")
            merged[m] = merged.get(m, 0) + int(n)
        return cls(tuple(sorted((m, n) for m, n in merged.items() if n)))

    @property
    def degree(self) -> int:
        return sum(n for _, n in self.occ)

    @property
    def weight(self) -> float:
        """``sqrt(prod n_m!)``: raw operator coefficient -> basis amplitude."""
        w = 1.0
        for _, n in self.occ:
            w *= _sqrt_factorial(n)
        return w

    def count(self, m: ModeId) -> int:
        for k, n in self.occ:
            if k == m:
                return n
        return 0

    def modes(self) -> tuple[ModeId, ...]:
        return tuple(m for m, _ in self.occ)

    def as_dict(self) -> dict[ModeId, int]:
        return dict(self.occ)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(_merge(self.occ, other.occ))

    def __str__(self) -> str:
        if not self.occ:
            return "|vac>"
        parts = [m.key if n == 1 else f"{m.key}^{n}" for m, n in self.occ]
        return "|" + ",".join(parts) + ">"


def _merge(a: Occupation, b: Occupation) -> Occupation:
    if not a:
        return b
    if not b:
        return a
    counts = dict(a)
    for m, n in b:
        counts[m] = counts.get(m, 0) + n
    return tuple(sorted(counts.items()))


Amplitudes = Union[Mapping[Monomial, complex], Iterable[tuple[Monomial, complex]]]


class FockPolyState:
    """Immutable superposition of Fock basis states.

    ``terms`` maps :class:`Monomial` to its amplitude in the orthonormal
    Fock basis.  Amplitudes with modulus below ``prune_eps`` are dropped and
    terms are kept in canonical monomial order.  ``paths`` is the declared
    path universe; an empty set means "not tracked".
    """

    __slots__ = ("_terms", "prune_eps", "paths")

    def __init__(self, terms: Amplitudes = (), prune_eps: float = DEFAULT_PRUNE_EPS,
                 paths: Iterable[str] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, complex] = {}
        for mono, amp in items:
            acc[mono] = acc.get(mono, 0j) + complex(amp)
        self._terms = {m: acc[m] for m in sorted(acc) if abs(acc[m]) >= prune_eps}
        self.prune_eps = prune_eps
        self.paths = frozenset(paths)

    @classmethod
    def vacuum(cls, amplitude: complex = 1.0, **kwargs) -> "FockPolyState":
        return cls({Monomial(): amplitude}, **kwargs)

    @classmethod
    def empty(cls, **kwargs) -> "FockPolyState":
        return cls((), **kwargs)

    @classmethod
    def from_occupations(cls, amplitudes: Iterable[tuple[Mapping[ModeId, int], complex]],
                         **kwargs) -> "FockPolyState":
        """Build from (occupation mapping, basis amplitude) pairs."""
        return cls(((Monomial.of(occ), amp) for occ, amp in amplitudes), **kwargs)

    @classmethod
    def from_creation_polynomial(cls, coefficients: Iterable[tuple[Mapping[ModeId, int], complex]],
                                 **kwargs) -> "FockPolyState":
        """Build from raw operator coefficients, i.e. ``sum c prod (a^dag)^n |0>``."""
        terms = []
        for occ, c in coefficients:
            mono = Monomial.of(occ)
            terms.append((mono, complex(c) * mono.weight))
        return cls(terms, **kwargs)

    @property
    def terms(self) -> Mapping[Monomial, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def amplitude(self, occupation: Monomial | Mapping[ModeId, int]) -> complex:
        mono = occupation if isinstance(occupation, Monomial) else Monomial.of(occupation)
        return self._terms.get(mono, 0j)

    def modes(self) -> set[ModeId]:
        return {m for mono in self._terms for m in mono.modes()}

    def photon_numbers(self) -> set[int]:
        return {mono.degree for mono in self._terms}

    def max_occupation(self) -> int:
        return max((n for mono in self._terms for _, n in mono.occ), default=0)

    def with_paths(self, paths: Iterable[str]) -> "FockPolyState":
        return FockPolyState(self._terms, self.prune_eps, paths)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FockPolyState):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        if not self._terms:
            return "FockPolyState(0)"
        body = " + ".join(f"({amp:.6g}){mono}" for mono, amp in self._terms.items())
        return f"FockPolyState({body})"


class ModeLinearMap:
    """Linear substitution of creation operators, ``a_in^dag -> sum c a_out^dag``.

    Only the touched input modes have rows; every other mode passes through
    unchanged.  The images of the inputs must be orthonormal.
    """

    __slots__ = ("_rows",)

    def __init__(self, rows: Mapping[ModeId, Iterable[tuple[ModeId, complex]]] | None = None,
                 atol: float = ISOMETRY_ATOL):
        clean: dict[ModeId, dict[ModeId, complex]] = {}
        for src, image in (rows or {}).items():
            out: dict[ModeId, complex] = {}
            for dst, c in image:
                out[dst] = out.get(dst, 0j) + complex(c)
            clean[src] = {d: c for d, c in sorted(out.items()) if c != 0}
        self._rows = dict(sorted(clean.items()))
        self._check_isometry(atol)

    @classmethod
    def identity(cls, modes: Iterable[ModeId] = ()) -> "ModeLinearMap":
        return cls({m: [(m, 1.0)] for m in modes})

    def _check_isometry(self, atol: float) -> None:
        if not self._rows:
            return
        inputs, outputs = self.inputs, self.outputs
        col = {m: i for i, m in enumerate(outputs)}
        mat = np.zeros((len(outputs), len(inputs)), dtype=complex)
        for j, src in enumerate(inputs):
            for dst, c in self._rows[src].items():
                mat[col[dst], j] = c
        gram = mat.conj().T @ mat
        err = np.max(np.abs(gram - np.eye(len(inputs))))
        if not np.isfinite(err) or err > atol:
            raise NonIsometricMap(f"mode map columns are not orthonormal (max error {err:.3e})")

    @property
    def rows(self) -> Mapping[ModeId, Mapping[ModeId, complex]]:
        return {k: dict(v) for k, v in self._rows.items()}

    @property
    def inputs(self) -> list[ModeId]:
        return list(self._rows)

    @property
    def outputs(self) -> list[ModeId]:
        return sorted({d for image in self._rows.values() for d in image})

    @property
    def paths(self) -> set[str]:
        return {m.path for m in self.inputs} | {m.path for m in self.outputs}

    def image(self, m: ModeId) -> dict[ModeId, complex]:
        """Where ``m`` goes; untouched modes map to themselves."""
        if m in self._rows:
            return dict(self._rows[m])
        return {m: 1.0 + 0j}

    def matrix(self, modes: list[ModeId]) -> np.ndarray:
        """Matrix ``M[out, in]`` over the given mode order (identity off the map)."""
        index = {m: i for i, m in enumerate(modes)}
        mat = np.zeros((len(modes), len(modes)), dtype=complex)
        for j, src in enumerate(modes):
            for dst, c in self.image(src).items():
                if dst not in index:
                    raise UndeclaredMode(f"mode {dst.key} is not in the mode list")
                mat[index[dst], j] = c
        return mat

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModeLinearMap):
            return NotImplemented
        return self._rows == other._rows

    def __repr__(self) -> str:
        parts = []
        for src, image in self._rows.items():
            rhs = " + ".join(f"({c:.6g}){d.key}" for d, c in image.items())
            parts.append(f"{src.key} -> {rhs}")
        return "ModeLinearMap(" + "; ".join(parts) + ")"


Poly = dict[Occupation, complex]


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = _merge(ka, kb)
            out[k] = out.get(k, 0j) + ca * cb
    return out


def _power(image: Mapping[ModeId, complex], n: int) -> Poly:
    linear: Poly = {((dst, 1),): c for dst, c in image.items()}
    out: Poly = {(): 1.0 + 0j}
    for _ in range(n):
        out = _poly_mul(out, linear)
    return out


def substitute(state: FockPolyState, mmap: ModeLinearMap,
               paths: Iterable[str] | None = None) -> FockPolyState:
    """Evolve ``state`` through one optical element given by its mode map.

    Raw operator coefficients are expanded under the substitution, like
    monomials are collected, and the result is converted back to basis
    amplitudes and pruned.
    """
    universe = frozenset(paths) if paths is not None else state.paths
    if universe:
        missing = mmap.paths - universe
        if missing:
            raise UndeclaredMode(f"map references undeclared path(s): {', '.join(sorted(missing))}")
    touched = set(mmap.inputs)
    collide = (state.modes() - touched) & set(mmap.outputs)
    if collide:
        keys = ", ".join(m.key for m in sorted(collide))
        raise NonIsometricMap(f"map output collides with occupied untouched mode(s): {keys}")

    rows = mmap.rows
    cache: dict[tuple[ModeId, int], Poly] = {}
    acc: dict[Occupation, complex] = {}
    for mono, amp in state.items():
        poly: Poly = {(): amp / mono.weight}
        for m, n in mono.occ:
            key = (m, n)
            if key not in cache:
                cache[key] = _power(rows[m], n) if m in rows else {((m, n),): 1.0 + 0j}
            poly = _poly_mul(poly, cache[key])
        for occ, c in poly.items():
            acc[occ] = acc.get(occ, 0j) + c
    terms = ((Monomial(occ), c * Monomial(occ).weight) for occ, c in acc.items())
    return FockPolyState(terms, state.prune_eps, universe)


def product(a: FockPolyState, b: FockPolyState) -> FockPolyState:
    """Operator product of two states built on the same vacuum."""
    acc: dict[Monomial, complex] = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = ma * mb
            acc[m] = acc.get(m, 0j) + (ca / ma.weight) * (cb / mb.weight) * m.weight
    return FockPolyState(acc, min(a.prune_eps, b.prune_eps), a.paths | b.paths)


def norm(state: FockPolyState) -> float:
    return math.sqrt(sum(abs(a) ** 2 for a in state._terms.values()))


def superpose(a: FockPolyState, ca: complex, b: FockPolyState, cb: complex) -> FockPolyState:
    terms = [(m, ca * amp) for m, amp in a.items()]
    terms += [(m, cb * amp) for m, amp in b.items()]
    return FockPolyState(terms, min(a.prune_eps, b.prune_eps), a.paths | b.paths)


def inner_product(a: FockPolyState, b: FockPolyState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for mono in small._terms:
        if mono in large._terms:
            total += a._terms[mono].conjugate() * b._terms[mono]
    return total

