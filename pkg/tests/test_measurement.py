import math
import random

import pytest
from hypothesis import given, settings

from fockline import dsl
from fockline.algebra import FockPolyState, mode, modes_of, substitute
from fockline.elements import CoherentState, bs_map
from fockline.engine import evolve_coherent, live_paths, mode_label, path_bases, simulate
from fockline.errors import DuplicateMode, UnknownMode
from fockline.measurement import (DetectorSpec, click_prob, coincidence_prob, mean_photons,
                                  occupation_distribution, parse_modes, report)
from fockline.oracle import oracle_simulate
from fockline.randcircuit import random_circuit

from conftest import BB84_PARAMS, PATHS, WAVEPARTICLE_PARAMS, bound, circuit, normalized_states

WP_MODES = parse_modes(["1H", "1V", "2H", "2V", "3H", "3V", "4H", "4V"])


@pytest.fixture(scope="module")
def waveparticle():
    return simulate(bound("waveparticle.opt", **WAVEPARTICLE_PARAMS))


@pytest.fixture(scope="module")
def alice():
    return evolve_coherent(bound("bb84_alice.opt", **BB84_PARAMS))[-1].state


def test_waveparticle_click_probabilities(waveparticle):
    a, phi1 = math.pi / 3, math.pi / 2
    assert click_prob(waveparticle, mode(1, "V")) == pytest.approx(
        (math.cos(a) * math.cos(phi1 / 2) / math.sqrt(2)) ** 2, abs=1e-12)
    assert click_prob(waveparticle, mode(1, "V")) == pytest.approx(0.0625, abs=1e-12)
    assert click_prob(waveparticle, mode(1, "H")) == pytest.approx(0.1875, abs=1e-12)


def test_vacuum_never_clicks():
    vac = FockPolyState.vacuum(paths=PATHS)
    for m in modes_of(PATHS):
        assert click_prob(vac, m) == 0
        assert mean_photons(vac, m) == 0


def test_alice_mean_photons(alice):
    t, a = BB84_PARAMS["t"], BB84_PARAMS["alpha"]
    assert mean_photons(alice, mode("ah", "H")) == pytest.approx((a * math.sqrt(1 - t) / 2) ** 2, abs=1e-12)
    assert mean_photons(alice, mode("ah", "H")) == pytest.approx(0.225, abs=1e-12)
    assert mean_photons(alice, mode("ar", "H")) == pytest.approx(0.1125, abs=1e-12)


def test_single_photon_mean_is_one():
    s = FockPolyState.from_occupations([({mode(2, "V"): 1}, 1j)], paths=PATHS)
    assert mean_photons(s, mode(2, "V")) == 1
    assert occupation_distribution(s, mode(2, "V")) == [0.0, 1.0]


def test_hom_coincidence_is_zero():
    s = FockPolyState.from_occupations([({mode(1, "H"): 1, mode(2, "H"): 1}, 1.0)], paths=("1", "2"))
    out = substitute(s, bs_map(0.5, ("1", "2"), ("1", "2")))
    assert coincidence_prob(out, [mode(1, "H"), mode(2, "H")]) < 1e-12
    assert occupation_distribution(out, mode(1, "H")) == pytest.approx([0.5, 0.0, 0.5])


def test_product_state_coincidence_is_one():
    s = FockPolyState.from_occupations([({mode(1, "H"): 1, mode(3, "V"): 1}, 1.0)], paths=PATHS)
    assert coincidence_prob(s, [mode(1, "H"), mode(3, "V")]) == 1.0


def test_single_photon_cannot_coincide():
    s = FockPolyState.from_occupations([({mode(1, "H"): 1}, 1.0)], paths=PATHS)
    out = substitute(s, bs_map(0.5, ("1", None), ("1", "2")))
    assert coincidence_prob(out, [mode(1, "H"), mode(2, "H")]) == 0


def test_coincidence_errors(waveparticle):
    with pytest.raises(DuplicateMode):
        coincidence_prob(waveparticle, [mode(1, "H"), mode(1, "H")])
    with pytest.raises(UnknownMode):
        coincidence_prob(waveparticle, [mode(1, "H"), mode("nowhere", "H")])
    with pytest.raises(ValueError):
        coincidence_prob(waveparticle, [mode(1, "H")])


def test_unknown_mode(waveparticle, alice):
    with pytest.raises(UnknownMode):
        click_prob(waveparticle, mode("zz", "H"))
    with pytest.raises(UnknownMode):
        mean_photons(alice, mode("zz", "V"))


def test_waveparticle_report_is_complete(waveparticle):
    rep = report(waveparticle, DetectorSpec(tuple(WP_MODES)))
    assert len(rep.detectors) == 8
    assert rep.click_total() == pytest.approx(1.0, abs=1e-9)


def test_alice_report(alice):
    bc = bound("bb84_alice.opt", **BB84_PARAMS)
    bases = path_bases(bc)
    detectors = parse_modes(["ahH", "avV", "arH", "alV"])
    labels = {m: mode_label(m, bases[m.path]) for m in detectors}
    rep = report(alice, DetectorSpec(tuple(detectors), labels=labels))
    assert [d.label for d in rep.detectors] == ["ahH", "avV", "arR", "alL"]
    assert [d.mean_photons for d in rep.detectors] == pytest.approx([0.225, 0.225, 0.1125, 0.1125], abs=1e-12)
    for d in rep.detectors:
        assert d.click_prob == pytest.approx(-math.expm1(-d.mean_photons), abs=1e-15)
        assert sum(d.distribution) == pytest.approx(1.0, abs=1e-12)


def test_empty_spec_gives_empty_report(waveparticle):
    rep = report(waveparticle, DetectorSpec())
    assert rep.detectors == [] and rep.coincidences == []
    assert rep.to_dict() == {"detectors": [], "coincidences": []}


def test_report_serializes_coincidences():
    s = FockPolyState.from_occupations([({mode(1, "H"): 1, mode(2, "H"): 1}, 1.0)], paths=PATHS)
    spec = DetectorSpec((mode(1, "H"),), ((mode(1, "H"), mode(2, "H")),))
    d = report(s, spec).to_dict()
    assert d["coincidences"] == [{"modes": ["1H", "2H"], "probability": 1.0}]
    assert d["detectors"][0]["label"] == "1H"


def test_coherent_occupation_is_poisson():
    cs = CoherentState.of({mode(1, "H"): 1.0})
    dist = occupation_distribution(cs, mode(1, "H"))
    assert dist[:3] == pytest.approx([math.exp(-1), math.exp(-1), math.exp(-1) / 2])
    assert 1 - sum(dist) < 1e-12


def test_coherent_means_agree_with_oracle():
    bc = bound("bb84_source.opt", **BB84_PARAMS)
    cs = evolve_coherent(bc)[-1].state
    dense = oracle_simulate(bc)
    # per-mode cutoff n_max bounds each mode's missing mean by the Poisson tail moments
    for m in dense.modes:
        assert abs(mean_photons(dense, m) - mean_photons(cs, m)) < 5 * dense.truncation_tail + 1e-12


def test_dense_and_engine_measurements_agree(waveparticle):
    dense = oracle_simulate(bound("waveparticle.opt", **WAVEPARTICLE_PARAMS), 1)
    for m in WP_MODES:
        assert click_prob(dense, m) == pytest.approx(click_prob(waveparticle, m), abs=1e-12)
        assert mean_photons(dense, m) == pytest.approx(mean_photons(waveparticle, m), abs=1e-12)


def test_live_paths_and_labels():
    bc = bound("bb84_alice.opt", **BB84_PARAMS)
    assert live_paths(bc) == ["4", "ah", "al", "ar", "av", "bob"]
    assert path_bases(bc)["ar"] == "RL"
    assert mode_label(mode("ar", "V"), "RL") == "arL"


@settings(max_examples=100, deadline=None)
@given(normalized_states())
def test_click_bounded_by_mean(s):
    for m in modes_of(PATHS):
        p = click_prob(s, m)
        assert 0 <= p <= 1
        assert p <= mean_photons(s, m) + 1e-12


def test_mean_photons_conserved_on_random_circuits():
    rng = random.Random(8)
    for _ in range(50):
        bc = dsl.bind(random_circuit(rng))
        s = simulate(bc)
        total = sum(mean_photons(s, m) for m in modes_of(bc.paths))
        assert total == pytest.approx(bc.photon_count, abs=1e-9)
        if bc.photon_count == 1:
            assert sum(click_prob(s, m) for m in modes_of(bc.paths)) == pytest.approx(1.0, abs=1e-9)


def test_coherent_report_via_circuit():
    bc = circuit("paths 1\nsource coherent path=1 alpha=2 pol=V\n")
    cs = evolve_coherent(bc)[-1].state
    assert mean_photons(cs, mode(1, "V")) == pytest.approx(4.0)
    assert coincidence_prob(cs, [mode(1, "H"), mode(1, "V")]) == 0.0
