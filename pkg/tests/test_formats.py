import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locclab import formats
from locclab.basis import domino_basis, rotate_locally
from locclab.certify import closed_form_certificate, orthogonal_triple
from locclab.deviation import WeightedStateFamily
from locclab.measure import Povm
from locclab.protocol import random_protocol
from locclab.qcore import HilbertStructure
from locclab.rand import random_density, random_ket, random_povm_effects, random_probabilities, random_unitary, rng_of


def round_trip(obj, dump, load):
    text = formats.to_json(dump(obj))
    again = formats.to_json(dump(load(json.loads(text))))
    assert again == text
    return load(json.loads(text))


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_pure_states_round_trip(seed):
    rng = rng_of(seed)
    s = HilbertStructure([2, 3])
    fam = WeightedStateFamily.from_vectors(s, [random_ket(6, rng) for _ in range(3)], random_probabilities(3, rng))
    back = round_trip(fam, formats.dump_states, formats.load_states)
    assert np.abs(back.priors - fam.priors).max() < 1e-15


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_mixed_states_round_trip(seed):
    rng = rng_of(seed)
    s = HilbertStructure([2, 2])
    fam = WeightedStateFamily(s, [random_density(4, seed=rng) for _ in range(2)], random_probabilities(2, rng))
    round_trip(fam, formats.dump_states, formats.load_states)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_protocol_round_trip(seed):
    tree = random_protocol(HilbertStructure([2, 3]), depth=2, seed=seed)
    round_trip(tree, formats.dump_protocol, formats.load_protocol)


def test_other_round_trips():
    round_trip(Povm(random_povm_effects(3, 4, 0), HilbertStructure([2, 2])), formats.dump_povm, formats.load_povm)
    round_trip(closed_form_certificate(0.45), formats.dump_product_operator, formats.load_product_operator)
    basis = rotate_locally(domino_basis(), [random_unitary(3, 1), random_unitary(3, 2)])
    round_trip(basis, formats.dump_basis, formats.load_basis)


def test_renormalises_with_warning(caplog):
    data = formats.dump_states(orthogonal_triple())
    data["states"][0]["vector"] = [[2 * re, 2 * im] for re, im in data["states"][0]["vector"]]
    fam = formats.load_states(data)
    assert abs(np.trace(fam.states[0]).real - 1) < 1e-12
    assert "renormalising" in caplog.text


def test_default_equal_priors():
    data = formats.dump_states(orthogonal_triple())
    for entry in data["states"]:
        del entry["prior"]
    assert np.abs(formats.load_states(data).priors - 1 / 3).max() < 1e-15


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("dims"),
    lambda d: d.update(states=[]),
    lambda d: d["states"][0].update(prior=0.9),
    lambda d: d["states"][0].pop("vector"),
    lambda d: d["states"][0].update(vector=[[1.0, 0.0]]),
])
def test_bad_state_files(mutate):
    data = formats.dump_states(orthogonal_triple())
    mutate(data)
    with pytest.raises(formats.FormatError):
        formats.load_states(data)


def test_invalid_protocol_rejected():
    data = formats.dump_protocol(random_protocol(HilbertStructure([2, 2]), depth=1, seed=0))
    data["tree"]["children"][0]["op"][0][0] = [5.0, 0.0]
    with pytest.raises(formats.FormatError):
        formats.load_protocol(data)
