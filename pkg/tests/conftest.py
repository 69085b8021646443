import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_config_text(steps=3, realizations=200):
    """The packaged example shrunk for fast runs, with an absolute lattice path."""
    from anisodd.cli import example_config_path

    src = example_config_path()
    text = src.read_text()
    lattice = (src.parent / "yso_y_lattice.txt").as_posix()
    for old, new in [
        ('lattice_file = "yso_y_lattice.txt"', f'lattice_file = "{lattice}"'),
        ("steps = 37", f"steps = {steps}"),
        ("realizations = 2000", f"realizations = {realizations}"),
        ("n_pi = [4, 8, 16, 32, 64]", "n_pi = [4, 8]"),
        ("trajectories = 2000", "trajectories = 1000"),
        ("n_points = 24", "n_points = 8"),
        ("n_clusters = 4", "n_clusters = 2"),
        ('spacings = ["10 ns", "1 ns", "0.1 ns"]', 'spacings = ["1 ns"]'),
    ]:
        assert old in text, old
        text = text.replace(old, new)
    return text


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(small_config_text())
    return p
