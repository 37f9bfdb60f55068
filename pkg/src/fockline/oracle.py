"""Dense truncated-Fock cross-check for the substitution engine.

Each element's mode matrix is completed to a unitary ``W`` on the full mode
set, written as ``W = exp(iH)`` with ``H`` Hermitian, and lifted to the
number-conserving generator ``sum_jk H_jk a_j^dag a_k`` built from
truncated ladder matrices.  The Fock-space unitary ``exp(i H_hat)`` is
formed block by block (one block per total photon number) from a
Hermitian eigendecomposition.  Nothing here reuses the polynomial
substitution code.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .algebra import DEFAULT_PRUNE_EPS, FockPolyState, ModeId, Monomial, modes_of
from .dsl import BoundCircuit
from .elements import CoherentState, Element, coherent_source
from .errors import DimensionCap, NonIsometricMap, TruncationMismatch

DEFAULT_DIM_CAP = 4096
UNITARY_ATOL = 1e-10
PASS_TOLERANCE = 1e-8


def dim_cap() -> int:
    """The configured DimensionCap (``FOCKLINE_DIM_CAP`` overrides the default)."""
    raw = os.environ.get("FOCKLINE_DIM_CAP")
    return int(raw) if raw else DEFAULT_DIM_CAP


@dataclass(frozen=True)
class ModeUnitary:
    modes: tuple[ModeId, ...]
    matrix: np.ndarray = field(compare=False)

    def __post_init__(self):
        u = self.matrix
        if u.shape != (len(self.modes), len(self.modes)):
            raise ValueError("mode unitary shape does not match its mode list")
        err = np.max(np.abs(u.conj().T @ u - np.eye(len(self.modes)))) if len(self.modes) else 0.0
        if err > UNITARY_ATOL:
            raise NonIsometricMap(f"mode matrix is not unitary (max error {err:.3e})")

    def block(self, rows: list[ModeId], cols: list[ModeId]) -> np.ndarray:
        idx = {m: i for i, m in enumerate(self.modes)}
        return self.matrix[np.ix_([idx[m] for m in rows], [idx[m] for m in cols])]


def element_unitary(el: Element, modes: list[ModeId]) -> np.ndarray:
    """Full-mode unitary of one element, ``W[out, in]``.

    Columns of the element's input modes are its mode map.  Out-port modes
    that are not inputs (vacuum ports, fresh labels) get an orthonormal
    completion; they hold vacuum whenever the circuit validates, so the
    completion never touches the state.
    """
    mmap = el.mode_map()
    idx = {m: i for i, m in enumerate(modes)}
    inputs = mmap.inputs
    support = sorted(set(inputs) | set(mmap.outputs), key=idx.__getitem__)
    local = {m: i for i, m in enumerate(support)}
    cols = np.zeros((len(support), len(inputs)), dtype=complex)
    for j, src in enumerate(inputs):
        for dst, c in mmap.image(src).items():
            cols[local[dst], j] = c
    free = [m for m in support if m not in set(inputs)]
    completion = scipy.linalg.null_space(cols.conj().T) if free else np.zeros((len(support), 0))
    if completion.shape[1] != len(free):
        raise NonIsometricMap("element map cannot be completed to a unitary")
    w = np.eye(len(modes), dtype=complex)
    sup = [idx[m] for m in support]
    w[np.ix_(sup, sup)] = 0
    for j, src in enumerate(inputs):
        w[sup, idx[src]] = cols[:, j]
    for j, m in enumerate(free):
        w[sup, idx[m]] = completion[:, j]
    return w


def mode_unitary(bc: BoundCircuit) -> ModeUnitary:
    """Product of all element unitaries in circuit order."""
    modes = modes_of(bc.paths)
    u = np.eye(len(modes), dtype=complex)
    for el in bc.elements:
        u = element_unitary(el, modes) @ u
    return ModeUnitary(tuple(modes), u)


def hermitian_log(u: np.ndarray) -> np.ndarray:
    """``H`` with ``exp(iH) = u``; eigenphases taken in (-pi, pi]."""
    t, z = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diag(t))
    phases[phases <= -math.pi + 1e-15] = math.pi
    h = (z * phases) @ z.conj().T
    return 0.5 * (h + h.conj().T)


def occupations(n_modes: int, n_max: int) -> np.ndarray:
    """Occupation tuples in mixed-radix order (first mode most significant)."""
    d = n_max + 1
    grids = np.indices((d,) * n_modes).reshape(n_modes, -1).T
    return grids


def ladder_operators(n_modes: int, n_max: int) -> list[sp.csr_matrix]:
    """Truncated annihilation operators ``a_k`` on the full tensor-product space."""
    d = n_max + 1
    local = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, shape=(d, d), format="csr")
    ops = []
    for k in range(n_modes):
        left = sp.identity(d ** k, format="csr")
        right = sp.identity(d ** (n_modes - k - 1), format="csr")
        ops.append(sp.kron(sp.kron(left, local), right, format="csr"))
    return ops


def lift_generator(h: np.ndarray, n_max: int) -> sp.csr_matrix:
    """``sum_jk h[j, k] a_j^dag a_k`` on the truncated Fock space."""
    m = h.shape[0]
    ladders = ladder_operators(m, n_max)
    dim = (n_max + 1) ** m
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for j in range(m):
        for k in range(m):
            if abs(h[j, k]) > 1e-15:
                out = out + h[j, k] * (ladders[j].T @ ladders[k])
    return out.tocsr()


def _check_cap(n_modes: int, n_max: int, cap: int | None) -> int:
    cap = dim_cap() if cap is None else cap
    dim = (n_max + 1) ** n_modes
    if dim > cap:
        suggested = 0
        while (suggested + 2) ** n_modes <= cap:
            suggested += 1
        raise DimensionCap(dim, cap, suggested)
    return dim


class _BlockLift:
    """exp(iH_hat) restricted to fixed-total-photon blocks, computed on demand."""

    def __init__(self, u: np.ndarray, n_max: int):
        self.n_modes = u.shape[0]
        self.n_max = n_max
        self.generator = lift_generator(hermitian_log(u), n_max)
        totals = occupations(self.n_modes, n_max).sum(axis=1)
        self.blocks = {int(n): np.flatnonzero(totals == n) for n in np.unique(totals)}
        self._cache: dict[int, np.ndarray] = {}

    def block(self, total: int) -> np.ndarray:
        if total not in self._cache:
            idx = self.blocks[total]
            hb = self.generator[idx][:, idx].toarray()
            w, v = np.linalg.eigh(0.5 * (hb + hb.conj().T))
            self._cache[total] = (v * np.exp(1j * w)) @ v.conj().T
        return self._cache[total]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for total, idx in self.blocks.items():
            part = psi[idx]
            if np.any(part != 0):
                out[idx] = self.block(total) @ part
        return out

    def dense(self) -> np.ndarray:
        dim = (self.n_max + 1) ** self.n_modes
        full = np.zeros((dim, dim), dtype=complex)
        for total, idx in self.blocks.items():
            full[np.ix_(idx, idx)] = self.block(total)
        return full


def lift_to_fock(u: ModeUnitary | np.ndarray, n_max: int, cap: int | None = None) -> np.ndarray:
    """Dense Fock-space unitary induced by the mode unitary ``u``."""
    mat = u.matrix if isinstance(u, ModeUnitary) else np.asarray(u, dtype=complex)
    _check_cap(mat.shape[0], n_max, cap)
    return _BlockLift(mat, n_max).dense()


@dataclass
class DenseFockVector:
    modes: tuple[ModeId, ...]
    n_max: int
    amps: np.ndarray
    truncation_tail: float = 0.0

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_max + 1,) * len(self.modes)

    def index(self, occupation: dict[ModeId, int] | Monomial) -> int:
        occ = occupation.as_dict() if isinstance(occupation, Monomial) else occupation
        pos = {m: i for i, m in enumerate(self.modes)}
        digits = [0] * len(self.modes)
        for m, n in occ.items():
            if m not in pos:
                raise TruncationMismatch(f"mode {m.key} is not in the oracle's mode list")
            if n > self.n_max:
                raise TruncationMismatch(f"occupation {n} of {m.key} exceeds n_max={self.n_max}")
            digits[pos[m]] = n
        return int(np.ravel_multi_index(digits, self.shape)) if self.modes else 0

    def amplitude(self, occupation) -> complex:
        return complex(self.amps[self.index(occupation)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def occupations(self) -> np.ndarray:
        return occupations(len(self.modes), self.n_max)

    def mean_photons(self, m: ModeId) -> float:
        k = self.modes.index(m)
        return float(np.sum(self.occupations()[:, k] * np.abs(self.amps) ** 2))

    def annihilation_expectation(self, m: ModeId) -> complex:
        """``<a_m>``; for a coherent state this is its displacement amplitude."""
        k = self.modes.index(m)
        a = ladder_operators(len(self.modes), self.n_max)[k]
        return complex(np.vdot(self.amps, a @ self.amps))

    def to_state(self, prune_eps: float = DEFAULT_PRUNE_EPS) -> FockPolyState:
        occ = self.occupations()
        terms = []
        for i in np.flatnonzero(np.abs(self.amps) >= prune_eps):
            terms.append((Monomial.of(zip(self.modes, occ[i])), complex(self.amps[i])))
        return FockPolyState(terms, prune_eps, {m.path for m in self.modes})


def coherent_vector(alpha: complex, n_max: int) -> np.ndarray:
    """``e^{-|a|^2/2} a^n / sqrt(n!)`` for n = 0..n_max."""
    n = np.arange(n_max + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    vec = np.zeros(n_max + 1, dtype=complex)
    vec[0] = 1.0
    if alpha != 0:
        vec = np.exp(-abs(alpha) ** 2 / 2) * np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact)
    return vec


def poisson_tail(mean: float, n_max: int) -> float:
    """Probability of more than ``n_max`` photons for a Poisson distribution."""
    if mean == 0:
        return 0.0
    head = sum(math.exp(-mean + k * math.log(mean) - math.lgamma(k + 1)) for k in range(n_max + 1))
    return max(0.0, 1.0 - head)


def default_truncation(bc: BoundCircuit) -> int:
    """Total photon number, plus ``ceil(|a|^2 + 6|a| + 6)`` for coherent inputs."""
    n = bc.photon_count
    coherent = [abs(a) for s in bc.sources if s.kind == "coherent"
                for a in coherent_source(s.path, s.alpha, s.pol).values()]
    if coherent:
        n += max(math.ceil(a * a + 6 * a + 6) for a in coherent)
    return max(n, 1) if bc.sources else max(n, 0)


def initial_vector(bc: BoundCircuit, modes: list[ModeId], n_max: int) -> tuple[np.ndarray, float]:
    d = n_max + 1
    per_mode = {m: np.eye(d, dtype=complex)[0] for m in modes}
    per_path: dict[str, np.ndarray] = {}
    kept = 1.0
    for src in bc.sources:
        if src.kind == "photon":
            if n_max < 1:
                raise TruncationMismatch("photon sources need n_max >= 1")
            pair = np.zeros((d, d), dtype=complex)
            pair[1, 0], pair[0, 1] = src.h, src.v
            per_path[src.path] = pair
        elif src.kind == "coherent":
            for m, a in coherent_source(src.path, src.alpha, src.pol).items():
                per_mode[m] = coherent_vector(a, n_max)
                kept *= 1.0 - poisson_tail(abs(a) ** 2, n_max)
    psi = np.ones(1, dtype=complex)
    done: set[str] = set()
    for m in modes:
        if m.path in per_path:
            if m.path not in done:
                psi = np.kron(psi, per_path[m.path].reshape(-1))
                done.add(m.path)
            continue
        psi = np.kron(psi, per_mode[m])
    return psi, max(0.0, 1.0 - kept)


def oracle_simulate(bc: BoundCircuit, n_max: int | None = None, cap: int | None = None) -> DenseFockVector:
    """Evolve the circuit's input as a dense truncated Fock vector."""
    modes = modes_of(bc.paths)
    if n_max is None:
        n_max = default_truncation(bc)
        if bc.has_coherent:
            # coherent tails are reported, so shrink to the largest cutoff that fits
            limit = dim_cap() if cap is None else cap
            while n_max > 1 and (n_max + 1) ** len(modes) > limit:
                n_max -= 1
    _check_cap(len(modes), n_max, cap)
    psi, tail = initial_vector(bc, modes, n_max)
    for el in bc.elements:
        psi = _BlockLift(element_unitary(el, modes), n_max).apply(psi)
    return DenseFockVector(tuple(modes), n_max, psi, tail)


def engine_vector(state: FockPolyState, dense: DenseFockVector) -> np.ndarray:
    """The engine state laid out on the oracle's index space."""
    if state.max_occupation() > dense.n_max:
        raise TruncationMismatch(
            f"engine state has {state.max_occupation()} photons in one mode; oracle n_max={dense.n_max}")
    vec = np.zeros_like(dense.amps)
    for mono, amp in state.items():
        vec[dense.index(mono)] = amp
    return vec


def _aligned(vec: np.ndarray, ref: int) -> np.ndarray:
    if abs(vec[ref]) == 0:
        return vec
    return vec * (abs(vec[ref]) / vec[ref])


def _reference_index(primary: np.ndarray, fallback: np.ndarray) -> int:
    source = primary if np.any(primary) else fallback
    mags = np.abs(source)
    # near-ties resolve to the lowest index so both vectors use the same component
    return int(np.flatnonzero(mags >= mags.max() - 1e-9)[0])


def compare(engine: FockPolyState, oracle: DenseFockVector) -> float:
    """Max amplitude deviation after global-phase alignment.

    The reference component is the engine's largest-modulus amplitude;
    both vectors are rotated so that component is real and non-negative.
    """
    e = engine_vector(engine, oracle)
    o = oracle.amps
    if len(o) == 0:
        return 0.0
    ref = _reference_index(e, o)
    return float(np.max(np.abs(_aligned(e, ref) - _aligned(o, ref))))


def coherent_dense(cs: CoherentState, modes: tuple[ModeId, ...], n_max: int) -> np.ndarray:
    psi = np.ones(1, dtype=complex)
    for m in modes:
        psi = np.kron(psi, coherent_vector(cs.amplitude(m), n_max))
    return psi


def compare_coherent(cs: CoherentState, oracle: DenseFockVector) -> float:
    """Max deviation from the product coherent state on the exactly-represented blocks.

    Components with total photon number <= n_max are unaffected by
    truncation, so there the oracle must match the closed form exactly.
    No phase alignment: a displaced vacuum has a definite phase.
    """
    unknown = cs.modes() - set(oracle.modes)
    if unknown:
        raise TruncationMismatch(f"modes {sorted(m.key for m in unknown)} are not in the oracle")
    expected = coherent_dense(cs, oracle.modes, oracle.n_max)
    exact = oracle.occupations().sum(axis=1) <= oracle.n_max
    if not np.any(exact):
        return 0.0
    return float(np.max(np.abs(expected[exact] - oracle.amps[exact])))
