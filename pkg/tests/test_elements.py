import cmath
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockline import dsl
from fockline.algebra import FockPolyState, ModeLinearMap, mode, modes_of, substitute
from fockline.elements import (CoherentState, Element, basis_map, basis_matrix, bs_map, bs_matrix,
                               bs_phase_relation, coherent_apply, coherent_source, hwp_map,
                               pbs_map, pr_map)
from fockline.engine import evolve_coherent
from fockline.errors import EtaOutOfRange, NonIsometricMap
from fockline.oracle import mode_unitary
from fockline.randcircuit import random_circuit

from conftest import BB84_PARAMS, bound, circuit, element_maps

R = math.sqrt(0.5)
H1, V1, H2, V2 = mode(1, "H"), mode(1, "V"), mode(2, "H"), mode(2, "V")


def photon(amps, paths=("1", "2", "3", "4")):
    return FockPolyState.from_occupations([({m: 1}, a) for m, a in amps.items()], paths=paths)


def composite(maps, modes):
    out = np.eye(len(modes), dtype=complex)
    for m in maps:
        out = m.matrix(modes) @ out
    return out


# beam splitter

def test_balanced_bs_matrix():
    np.testing.assert_allclose(bs_matrix(0.5), [[R, R], [R, -R]], atol=1e-15)


def test_bs_eta_zero_limit():
    np.testing.assert_array_equal(bs_matrix(0.0), np.diag([1, -1]))
    s = substitute(photon({H1: 0.6, H2: 0.8}), bs_map(0.0, ("1", "2"), ("3", "4")))
    assert s.amplitude({mode(3, "H"): 1}) == pytest.approx(0.6)
    assert s.amplitude({mode(4, "H"): 1}) == pytest.approx(-0.8)


def test_balanced_bs_is_involutory():
    m = bs_map(0.5, ("1", "2"), ("1", "2"))
    modes = [H1, V1, H2, V2]
    np.testing.assert_allclose(composite([m, m], modes), np.eye(4), atol=1e-15)


@pytest.mark.parametrize("eta", [-0.1, 1.0000001, float("nan")])
def test_bs_eta_out_of_range(eta):
    with pytest.raises(EtaOutOfRange):
        bs_matrix(eta)


@settings(max_examples=200)
@given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_bs_phase_relation(eta):
    assert bs_phase_relation(eta) == pytest.approx(-math.pi, abs=1e-15)


def test_bs_vacuum_port_has_no_row():
    m = bs_map(0.3, ("1", None), ("1", "2"))
    assert set(m.inputs) == {H1, V1}


# polarizing beam splitter

def test_pbs_splits_input_superposition():
    a = 0.7
    out = substitute(photon({V1: math.cos(a), H1: math.sin(a)}), pbs_map(("1", None), ("3", "4")))
    assert out.amplitude({mode(4, "V"): 1}) == pytest.approx(math.cos(a))
    assert out.amplitude({mode(3, "H"): 1}) == pytest.approx(math.sin(a))
    assert len(out) == 2


def test_pbs_port2_rules():
    m = pbs_map(("1", "2"), ("3", "4"))
    assert m.image(H2) == {mode(4, "H"): 1}
    assert m.image(V2) == {mode(3, "V"): 1}


def test_pbs_splits_a_pair():
    s = FockPolyState.from_occupations([({H1: 1, V1: 1}, 1.0)], paths=("1", "3", "4"))
    out = substitute(s, pbs_map(("1", None), ("3", "4")))
    assert out.amplitude({mode(3, "H"): 1, mode(4, "V"): 1}) == pytest.approx(1.0)


def test_pbs_is_involution():
    m = pbs_map(("1", "2"), ("1", "2"))
    modes = [H1, V1, H2, V2]
    np.testing.assert_array_equal(composite([m, m], modes), np.eye(4))


# retarders

def test_pr_examples():
    assert pr_map(0.0, "1") == ModeLinearMap.identity([H1, V1])
    out = substitute(photon({V1: 1.0}), pr_map(1.3, "1"))
    assert out.amplitude({V1: 1}) == pytest.approx(cmath.exp(1.3j))
    twice = composite([pr_map(math.pi, "1")] * 2, [H1, V1])
    np.testing.assert_allclose(twice, np.eye(2), atol=1e-15)


def test_hwp_examples():
    h = photon({H1: 1.0})
    assert substitute(h, hwp_map(math.pi / 4, "1")) == h
    out = substitute(photon({V1: 1.0}), hwp_map(math.pi / 4, "1"))
    assert out.amplitude({V1: 1}) == pytest.approx(cmath.exp(1j * math.pi / 4))
    assert hwp_map(0.0, "1") == ModeLinearMap.identity([H1, V1])


# basis change

def test_basis_rl_expands_h():
    out = substitute(photon({H1: 1.0}), basis_map("RL", "1"))
    # the H slot holds R, the V slot holds L
    assert out.amplitude({H1: 1}) == pytest.approx(R)
    assert out.amplitude({V1: 1}) == pytest.approx(R)


@pytest.mark.parametrize("target", ["RL", "DIAG"])
def test_basis_involution_and_orthogonality(target):
    mat = basis_matrix(target)
    assert np.allclose(mat.imag, 0)
    np.testing.assert_allclose(mat @ mat, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(composite([basis_map(target, "1")] * 2, [H1, V1]), np.eye(2), atol=1e-15)


def test_basis_on_minus45_coherent():
    g = 0.8
    cs = CoherentState.of({H1: g, V1: -g})
    out = coherent_apply(basis_map("RL", "1"), cs)
    assert abs(out.amplitude(H1)) < 1e-15
    assert out.amplitude(V1) == pytest.approx(g * math.sqrt(2))


def test_physical_circular_convention():
    mat = basis_matrix("RL", "physical")
    np.testing.assert_allclose(mat, R * np.array([[1, 1], [1j, -1j]]))
    np.testing.assert_allclose(mat.conj().T @ mat, np.eye(2), atol=1e-15)


@settings(max_examples=300)
@given(element_maps())
def test_every_map_is_isometric(m):
    mat = m.matrix(sorted(set(m.inputs) | set(m.outputs)))
    cols = mat[:, [sorted(set(m.inputs) | set(m.outputs)).index(i) for i in m.inputs]]
    np.testing.assert_allclose(cols.conj().T @ cols, np.eye(len(m.inputs)), atol=1e-12)


# coherent states

def test_coherent_bs_transmission():
    t, alpha = 0.1, 1.0
    out = coherent_apply(bs_map(1 - t, ("1", None), ("3", "4")), CoherentState.of({H1: alpha}))
    assert out.amplitude(mode(3, "H")) == pytest.approx(alpha * math.sqrt(t), abs=1e-15)
    assert out.amplitude(mode(4, "H")) == pytest.approx(alpha * math.sqrt(1 - t), abs=1e-15)


def test_coherent_pbs_on_pm45_pair():
    alpha = 1.0
    cs = CoherentState.of({**coherent_source("1", alpha, "+45"), **coherent_source("2", alpha, "-45")})
    out = coherent_apply(pbs_map(("1", "2"), ("3", "4")), cs)
    beta = alpha / math.sqrt(2)
    # path 3 carries beta (H - V), path 4 carries beta (H + V)
    expected = {mode(3, "H"): beta, mode(3, "V"): -beta, mode(4, "H"): beta, mode(4, "V"): beta}
    for m, a in expected.items():
        assert out.amplitude(m) == pytest.approx(a, abs=1e-15)


def test_zero_amplitude_stays_zero():
    out = coherent_apply(bs_map(0.3, ("1", "2"), ("1", "2")), CoherentState.of({}))
    assert out.amps == ()


def test_coherent_apply_rejects_collision():
    cs = CoherentState.of({H1: 1.0, H2: 1.0})
    with pytest.raises(NonIsometricMap):
        coherent_apply(ModeLinearMap({H1: [(H2, 1.0)]}), cs)


@settings(max_examples=100)
@given(st.lists(element_maps(), max_size=6),
       st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=6, max_size=6))
def test_mean_photons_conserved(maps, amps):
    cs = CoherentState.of(dict(zip(modes_of(["1", "2", "3"]), amps)))
    total = cs.total_mean_photons()
    for m in maps:
        cs = coherent_apply(m, cs)
    assert cs.total_mean_photons() == pytest.approx(total, rel=1e-12, abs=1e-12)


def test_element_mode_map_dispatch():
    assert Element("pr", ("1",), ("1",), angle=0.2).mode_map() == pr_map(0.2, "1")
    assert Element("basis", ("1",), ("1",), target="DIAG").mode_map() == basis_map("DIAG", "1")


def test_fock_coherent_consistency_random():
    rng = random.Random(11)
    for _ in range(25):
        bc = dsl.bind(random_circuit(rng))
        u = mode_unitary(bc)
        modes = list(u.modes)
        for j, m in enumerate(modes):
            s = FockPolyState.from_occupations([({m: 1}, 1.0)], paths=bc.paths)
            for el in bc.elements:
                s = substitute(s, el.mode_map(), bc.paths)
            col = np.array([s.amplitude({k: 1}) for k in modes])
            np.testing.assert_allclose(col, u.matrix[:, j], atol=1e-12)


def test_bb84_source_amplitudes():
    cs = evolve_coherent(bound("bb84_source.opt", **BB84_PARAMS))[-1].state
    a, t = 1.0, 0.1
    gamma, gamma_p = a * math.sqrt(t) / math.sqrt(2), a * math.sqrt(1 - t) / math.sqrt(2)
    assert cs.amplitude(mode("bob", "H")) == pytest.approx(gamma, abs=1e-15)
    assert cs.amplitude(mode("bob", "V")) == pytest.approx(-gamma, abs=1e-15)
    assert cs.amplitude(mode("alice", "H")) == pytest.approx(gamma_p, abs=1e-15)
    assert cs.amplitude(mode("alice", "V")) == pytest.approx(-gamma_p, abs=1e-15)


def test_bound_circuit_elements():
    bc = circuit("paths 1\nsource photon path=1 h=1 v=0\npbs in=1,- out=2,3\n")
    assert [e.kind for e in bc.elements] == ["pbs"]
