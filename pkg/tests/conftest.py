import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from spe_qmc.hamiltonian import BipartiteModel, operator_alphabet, path_model

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"
FIXTURES = Path(__file__).parent / "fixtures"

FIVE_LOOP_PATH = "A:0-1 A:0-1 A:1-2 A:2-3 A:1-2"


@st.composite
def bipartite_models(draw, max_sites=6, fm=True, fields=True):
    """Random valid models: an A/B split, a non-empty set of A-B bonds, optional FM bonds and fields."""
    n = draw(st.integers(2, max_sites))
    n_a = draw(st.integers(1, n // 2))
    sub = ["A"] * n_a + ["B"] * (n - n_a)
    cross = [(i, j) for i in range(n_a) for j in range(n_a, n)]
    same = [(i, j) for i, j in itertools.combinations(range(n), 2) if sub[i] == sub[j]]
    weight = st.sampled_from([0.5, 1.0, 1.5, 2.0])
    afm = draw(st.lists(st.sampled_from(cross), min_size=1, max_size=len(cross), unique=True))
    fm_edges = draw(st.lists(st.sampled_from(same), max_size=3, unique=True)) if fm and same else []
    g = draw(st.lists(st.sampled_from([0.0, 0.25, 1.0]), min_size=n, max_size=n)) if fields else [0.0] * n
    return BipartiteModel(
        n_sites=n,
        sublattice=tuple(sub),
        afm_edges=tuple((i, j, draw(weight)) for i, j in afm),
        fm_edges=tuple((k, l, draw(weight)) for k, l in fm_edges),
        fields=tuple(g),
    )


@st.composite
def model_and_config(draw, max_len=6, **kw):
    model = draw(bipartite_models(**kw))
    alphabet = operator_alphabet(model)
    config = tuple(draw(st.lists(st.sampled_from(alphabet), max_size=max_len)))
    return model, config


@pytest.fixture
def path4():
    return path_model(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
