import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crossquant.synth import SynthSpec, generate_activations, generate_weights  # noqa: E402

FIXTURE_SPEC = SynthSpec(rows=256, cols=512, base_sigma=1.0, outlier_frac=0.01, outlier_scale=30.0, seed=11)


def make_corpus(n=1000, seed=2024, max_dim=64):
    """Random matrices in [-100, 100] with spread magnitudes, zero rows/cols and ties."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        rows, cols = rng.integers(1, max_dim + 1, size=2)
        x = rng.uniform(-100.0, 100.0, size=(rows, cols))
        # spread magnitudes over several decades so kernels are non-trivial
        x *= 10.0 ** -rng.uniform(0.0, 4.0, size=(rows, cols))
        if k % 7 == 0:
            x = np.round(x)  # integer data produces exact .5 ties
        if k % 5 == 0:
            x[rng.integers(rows), :] = 0.0
        if k % 3 == 0:
            x[:, rng.integers(cols)] = 0.0
        if k % 11 == 0:
            x = np.zeros((rows, cols))
        out.append(x)
    return out


@pytest.fixture(scope="session")
def corpus():
    return make_corpus()


@pytest.fixture(scope="session")
def outlier_x():
    return generate_activations(FIXTURE_SPEC)


@pytest.fixture(scope="session")
def fixture_w():
    return generate_weights(512, 512, 0.02, seed=12)


ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
