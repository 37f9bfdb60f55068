import math
import random

import pytest
from hypothesis import strategies as st

from fockline import dsl
from fockline.algebra import FockPolyState, Monomial, mode, modes_of
from fockline.cli import resolve_circuit
from fockline.elements import basis_map, bs_map, hwp_map, pbs_map, pr_map

PATHS = ("1", "2", "3")
MODES = modes_of(PATHS)

WAVEPARTICLE_PARAMS = {"alpha": math.pi / 3, "phi1": math.pi / 2, "phi2": math.pi / 4}
BB84_PARAMS = {"alpha": 1.0, "t": 0.1}


def shipped(name: str) -> dsl.Circuit:
    return dsl.load(resolve_circuit(name))


def bound(name: str, **env) -> dsl.BoundCircuit:
    return dsl.bind(shipped(name), env)


def circuit(text: str, **env) -> dsl.BoundCircuit:
    return dsl.bind(dsl.parse(text), env)


@pytest.fixture
def rng():
    return random.Random(20240601)


amplitudes = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
occupations = st.dictionaries(st.sampled_from(MODES), st.integers(1, 2), max_size=2)


@st.composite
def states(draw, max_terms: int = 4):
    pairs = draw(st.lists(st.tuples(occupations, amplitudes), min_size=1, max_size=max_terms))
    return FockPolyState.from_occupations(pairs, paths=PATHS)


@st.composite
def normalized_states(draw, max_terms: int = 4):
    s = draw(states(max_terms))
    total = math.sqrt(sum(abs(a) ** 2 for _, a in s.items()))
    if total < 1e-3:
        return FockPolyState({Monomial.of({mode("1", "H"): 1}): 1.0}, paths=PATHS)
    return FockPolyState({m: a / total for m, a in s.items()}, paths=PATHS)


@st.composite
def element_maps(draw):
    """Mode maps of single elements acting within the fixed path set."""
    kind = draw(st.sampled_from(["bs", "pbs", "pr", "hwp", "basis"]))
    p, q = draw(st.permutations(PATHS))[:2]
    if kind == "bs":
        eta = draw(st.floats(0, 1))
        return bs_map(eta, (p, q), draw(st.sampled_from([(p, q), (q, p)])))
    if kind == "pbs":
        return pbs_map((p, q), draw(st.sampled_from([(p, q), (q, p)])))
    theta = draw(st.floats(-10, 10))
    if kind == "pr":
        return pr_map(theta, p)
    if kind == "hwp":
        return hwp_map(theta, p)
    return basis_map(draw(st.sampled_from(["RL", "DIAG"])), p,
                     draw(st.sampled_from(["real", "physical"])))
