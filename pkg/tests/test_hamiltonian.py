import math

import numpy as np
import pytest
from hypothesis import given

from conftest import MODELS, bipartite_models
from spe_qmc.hamiltonian import (AFM, VERTEX, BipartiteModel, ModelFileError, OperatorSlot, check,
                                 complete_bipartite_model, cycle_model, dump_model, load_model,
                                 model_from_dict, norm_bound, operator_alphabet, path_model, required_B,
                                 star_model, validate)
from spe_qmc.oracle import dense_negH, low_energy_leakage


def test_star_and_path_are_valid():
    assert validate(star_model(4)) == []
    assert validate(path_model(4)) == []


def test_triangle_is_rejected():
    tri = BipartiteModel(3, ("A", "B", "B"), ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))
    problems = validate(tri)
    assert any("not bipartite" in p for p in problems)
    assert any("both ends in sublattice" in p for p in problems)
    with pytest.raises(ValueError):
        check(tri)


@pytest.mark.parametrize("bad, fragment", [
    (BipartiteModel(2, ("A", "B"), ((0, 1, -1.0),)), "not positive"),
    (BipartiteModel(2, ("A", "B"), ((0, 5, 1.0),)), "invalid site"),
    (BipartiteModel(3, ("A", "B", "A"), ((0, 1, 1.0),), fm_edges=((0, 1, 1.0),)), "crosses"),
    (BipartiteModel(2, ("A", "B"), ((0, 1, 1.0),), fields=(0.1, -0.2)), "negative"),
    (BipartiteModel(2, ("A", "C"), ((0, 1, 1.0),)), "not 'A' or 'B'"),
])
def test_specific_violations(bad, fragment):
    assert any(fragment in p for p in validate(bad))


def test_relabel_keeps_smaller_side_as_A():
    m = BipartiteModel(3, ("A", "A", "B"), ((0, 2, 1.0), (1, 2, 1.0)))
    assert m.relabeled
    assert m.sites_a == [2]
    assert m.original_label(2) == "B"
    assert model_from_dict(m.to_dict()) == m


def test_alphabet_sizes():
    assert len(operator_alphabet(star_model(4))) == 3
    with_field = operator_alphabet(star_model(3, fields=[0.5, 0, 0]))
    assert [s.kind for s in with_field] == [AFM, AFM, VERTEX]
    assert with_field[-1].weight == 1.0  # vertex carries 2g
    assert len(operator_alphabet(path_model(4))) == 3


def test_empty_alphabet_is_an_error():
    with pytest.raises(ValueError):
        operator_alphabet(BipartiteModel(2, ("A", "B")))


def test_norm_bound_values():
    assert norm_bound(path_model(2)) == 1.0
    assert norm_bound(star_model(3)) == 2.0
    m = star_model(2, fields=[0.25, 0.25])
    assert norm_bound(m) == 2.0
    assert np.abs(np.linalg.eigvalsh(dense_negH(m))).max() <= 2.0 + 1e-12


@given(bipartite_models(max_sites=5))
def test_norm_bound_dominates_spectrum(model):
    assert np.abs(np.linalg.eigvalsh(dense_negH(model))).max() <= norm_bound(model) + 1e-9


def test_required_B_single_edge():
    assert required_B(path_model(2), 0.1) == math.ceil(5 * (2 + math.log(40)))  # 29
    assert required_B(path_model(2), 0.1) == 29


def test_required_B_loose_epsilon_is_at_least_one():
    assert required_B(path_model(2), 100.0) >= 1


def test_required_B_star3_and_leakage():
    m = star_model(3)
    B = required_B(m, 0.05)
    delta = 0.05 / norm_bound(m)
    assert B == math.ceil(norm_bound(m) / 0.1 * (3 - math.log(delta) + 3 * math.log(2)))
    assert low_energy_leakage(m, B, 0.05) < delta


def test_required_B_rejects_bad_input():
    with pytest.raises(ValueError):
        required_B(star_model(3), 0.0)
    with pytest.raises(ValueError):
        required_B(star_model(3), 0.1, delta=1.5)


def test_builders():
    assert cycle_model(6).sites_a == [0, 2, 4]
    with pytest.raises(ValueError):
        cycle_model(5)
    k = complete_bipartite_model(2, 6)
    assert len(k.afm_edges) == 12 and validate(k) == []


def test_model_files_round_trip(tmp_path):
    m = star_model(4, weights=[1.0, 0.5, 2.0], fields=[0.1, 0, 0, 0.3], fm_edges=[(1, 2, 0.7)])
    path = tmp_path / "m.json"
    dump_model(m, path)
    assert load_model(path) == m
    assert load_model(MODELS / "star3.json") == star_model(3)


@pytest.mark.parametrize("doc, fragment", [
    ([], "JSON object"),
    ({"n_sites": 2}, "missing required key"),
    ({"n_sites": 2, "sublattice": ["A", "B"], "colour": 1}, "unknown keys"),
    ({"n_sites": "2", "sublattice": ["A", "B"]}, "integer"),
    ({"n_sites": 2, "sublattice": ["A", "B"], "afm_edges": [[0, 1]]}, "afm_edges[0]"),
    ({"n_sites": 2, "sublattice": ["A", "B"], "fields": ["x", 1]}, "fields"),
])
def test_malformed_documents(doc, fragment):
    with pytest.raises(ModelFileError, match=None) as info:
        model_from_dict(doc)
    assert fragment in str(info.value)


def test_json_syntax_error_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "n_sites": 2,\n  "sublattice": ["A" "B"]\n}\n')
    with pytest.raises(ModelFileError, match="line 3"):
        load_model(path)


def test_slot_identity_ignores_weight():
    assert OperatorSlot(AFM, (0, 1), 1.0) == OperatorSlot(AFM, (0, 1), 3.0)
    with pytest.raises(ValueError):
        OperatorSlot(VERTEX, (0, 1))
