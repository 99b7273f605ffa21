import numpy as np
import pytest
from hypothesis import given, settings

from conftest import FIVE_LOOP_PATH, bipartite_models, model_and_config
from spe_qmc.hamiltonian import (complete_bipartite_model, norm_bound, operator_alphabet,
                                 path_model, required_B, star_model)
from spe_qmc.loopcfg import decompose, parse_config
from spe_qmc.oracle import (apply_negH, consistent_count, dense_negH, enumerate_Z, exact_ground_energy,
                            leakage_bound, lieb_mattis_ground_energy, low_energy_leakage, mb_energy, plus_moment,
                            plus_state, sector_dimension, spectrum, star_ground_energy)


def basis(n, bits):
    v = np.zeros(1 << n)
    v[sum(b << m for m, b in enumerate(bits))] = 1.0
    return v


def test_single_edge_action():
    m = path_model(2)
    up_down = basis(2, (1, 0))
    down_up = basis(2, (0, 1))
    assert np.allclose(apply_negH(m, up_down), 0.5 * (up_down + down_up))
    assert np.allclose(apply_negH(m, basis(2, (1, 1))), 0.0)


@given(bipartite_models(max_sites=5))
def test_matrix_free_agrees_with_dense(model):
    dense = dense_negH(model)
    rng = np.random.default_rng(0)
    v = rng.normal(size=1 << model.n_sites)
    assert np.allclose(apply_negH(model, v), dense @ v, atol=1e-12)
    assert np.allclose(dense, dense.T)
    off = dense - np.diag(np.diag(dense))
    assert off.min() >= 0.0  # stoquastic frame: -H has no negative off-diagonal entries


def test_plus_moment_star3_matches_enumeration():
    m = star_model(3)
    assert enumerate_Z(m, 1) == pytest.approx(2 ** 5 * plus_moment(m, 2), rel=1e-12)


@pytest.mark.parametrize("model, expected", [
    (path_model(2), -1.0),
    (star_model(3), -1.5),
])
def test_ground_energies(model, expected):
    assert exact_ground_energy(model)[0] == pytest.approx(expected, abs=1e-10)


def test_fields_ground_energy_is_full_spectrum_minimum():
    m = star_model(2, fields=[0.25, 0.25])
    assert exact_ground_energy(m)[0] == pytest.approx(np.linalg.eigvalsh(-dense_negH(m))[0], abs=1e-12)


def test_lieb_mattis_sector():
    assert lieb_mattis_ground_energy(star_model(3)) == pytest.approx(-1.5, abs=1e-10)
    star20 = star_model(20)
    assert sector_dimension(star20) == 20
    assert lieb_mattis_ground_energy(star20) == pytest.approx(star_ground_energy(20), abs=1e-9)
    k = complete_bipartite_model(2, 6)
    assert sector_dimension(k) == 28
    assert lieb_mattis_ground_energy(k) == pytest.approx(exact_ground_energy(k)[0], abs=1e-9)
    with pytest.raises(ValueError):
        lieb_mattis_ground_energy(star_model(3, fields=[0.1, 0, 0]))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
def test_star_closed_form(n):
    assert star_ground_energy(n) == pytest.approx(exact_ground_energy(star_model(n))[0], abs=1e-10)


def test_consistent_count_examples(path4):
    m = star_model(3)
    assert consistent_count(m, ()) == 8
    single = path_model(2)
    assert consistent_count(single, tuple(operator_alphabet(single))) == 4
    assert consistent_count(path4, parse_config(FIVE_LOOP_PATH, path4)) == 32


@settings(max_examples=120)
@given(model_and_config(max_len=6))
def test_consistent_count_is_two_to_the_loops(case):
    model, config = case
    assert consistent_count(model, config) == 2 ** decompose(model, config).loop_count


def test_consistent_count_guard():
    with pytest.raises(ValueError):
        consistent_count(star_model(13), ())


def test_partition_function_small_cases():
    assert enumerate_Z(star_model(3), 0) == 8.0
    assert enumerate_Z(path_model(2), 1) == pytest.approx(8.0, rel=1e-14)
    assert enumerate_Z(star_model(3), 1) == pytest.approx(48.0, rel=1e-14)
    assert enumerate_Z(star_model(3), 0, alpha=3.0) == 27.0


@settings(max_examples=25)
@given(bipartite_models(max_sites=5))
def test_partition_function_duality(model):
    n_alpha = len(operator_alphabet(model))
    for B in (0, 1, 2):
        if n_alpha ** (2 * B) > 2e5:
            break
        expect = 2.0 ** (model.n_sites + 2 * B) * plus_moment(model, 2 * B)
        assert enumerate_Z(model, B) == pytest.approx(expect, rel=1e-9)


def test_leakage_examples():
    m = star_model(3)
    energies, _ = spectrum(m)
    assert low_energy_leakage(m, 0, energies[-1] - energies[0] + 1.0) == 0.0
    raw = low_energy_leakage(m, 0, 0.1)
    assert 0.0 < raw < 1.0
    B = required_B(m, 0.1)
    delta = 0.1 / norm_bound(m)
    assert low_energy_leakage(m, B, 0.1) < delta
    assert low_energy_leakage(m, B, 0.1) <= leakage_bound(m, B, 0.1)


def test_mb_energy_converges_to_ground():
    m = star_model(4)
    e0 = exact_ground_energy(m)[0]
    values = [mb_energy(m, B) for B in (1, 4, 16, 64)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(e0, abs=1e-3)


def test_plus_state_normalised():
    assert np.dot(plus_state(5), plus_state(5)) == pytest.approx(1.0)
