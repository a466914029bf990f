import numpy as np
import pytest

# Worked ilr example: four-part compositions and their balances as
# published (two decimals).
EXAMPLE_PARTS = np.array([
    [0.10, 0.30, 0.50, 0.10],
    [0.20, 0.25, 0.20, 0.35],
    [0.50, 0.10, 0.20, 0.20],
    [0.60, 0.05, 0.05, 0.30],
    [0.35, 0.15, 0.10, 0.40],
    [0.20, 0.45, 0.05, 0.30],
])
EXAMPLE_ILR = np.array([
    [-0.78, -0.87, 0.78],
    [-0.16, 0.09, -0.42],
    [1.14, 0.09, 0.06],
    [1.76, 1.01, -0.83],
    [0.60, 0.68, -0.72],
    [-0.57, 1.46, -0.52],
])

# Published comparison grid: FSI ARL1, VSI ATS1 for h_S = 0.1 and 0.5, and
# the printed (w, h_L) pairs.
REF_DELTAS = [0.25, 0.50, 0.75, 1.00, 1.25, 1.50, 1.75, 2.00]
REF_FSI_ARL1 = [64.6, 26.4, 15.1, 9.9, 7.1, 5.4, 4.3, 3.5]
REF_VSI_ATS1 = {
    0.1: [56.8, 19.9, 10.4, 6.9, 4.9, 3.7, 3.0, 2.4],
    0.5: [63.5, 23.5, 12.9, 8.4, 6.3, 4.8, 4.2, 3.3],
}
REF_W_HL = {
    0.1: [(1.7, 1.6), (1.7, 1.6), (1.6, 1.7), (2.9, 1.3), (1.6, 1.8), (3.5, 1.2), (3.7, 1.2), (3.6, 1.2)],
    0.5: [(0.7, 2.1), (0.9, 1.8), (1.0, 1.8), (0.9, 1.8), (0.9, 2.0), (0.9, 1.9), (0.8, 2.1), (1.1, 1.8)],
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_parts(rng, p, size=None, spread=3.0):
    shape = (p,) if size is None else (size, p)
    return np.exp(rng.normal(0.0, spread, shape))


# verdict lines of the acceptance suite, printed after the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
