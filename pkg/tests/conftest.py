import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ppa_imitation.core import CostParams, Patient
from ppa_imitation.generator import GenConfig

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

DESK_GEN = GenConfig(mu_K=30.0, sigma_K=4.0)
DESK_COSTS = CostParams()


@pytest.fixture
def desk_gen():
    return DESK_GEN


@pytest.fixture
def costs():
    return DESK_COSTS


def random_patients(g: np.random.Generator, K: int, P: int) -> list[Patient]:
    """Small random patient list sorted by arrival score."""
    scores = np.sort(g.random(K))
    out = []
    for k in range(K):
        size = int(g.integers(1, P + 1))
        elig = tuple(sorted(int(p) + 1 for p in g.choice(P, size=size, replace=False)))
        out.append(Patient(k, float(g.uniform(5.0, 45.0)), int(g.integers(1, 3)),
                           int(g.choice(elig)), elig, float(scores[k])))
    return out


def random_residual(g: np.random.Generator, P: int, max_slots: int = 4, max_minutes: float = 90.0):
    return g.integers(0, max_slots + 1, size=P), g.uniform(0.0, max_minutes, size=P)


@st.composite
def patient_lists(draw, max_k=6, max_p=3, min_k=0):
    P = draw(st.integers(1, max_p))
    K = draw(st.integers(min_k, max_k))
    seed = draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    pats = random_patients(g, K, P)
    slots, work = random_residual(g, P)
    params = CostParams(L=(4,) * P)
    return pats, (slots, work), params


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance lines together, in criterion order."""
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
