from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

# fixed example generation so every run sees the same inputs
settings.register_profile("repro", derandomize=True, deadline=None, max_examples=40, print_blob=True)
settings.load_profile("repro")

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
