import numpy as np
import pytest

from fredholm_minors.kernel import GAUSS_LEGENDRE, Domain, KernelSpec, discrete_kernel, discretize, make_grid

# criterion number -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gl_kernel(name, m, a=0.0, b=1.0, **params):
    grid = make_grid(Domain.interval(a, b), GAUSS_LEGENDRE, m)
    return discretize(KernelSpec.builtin(name, **params), grid)


def random_kernel(rng, m, scale=1.0):
    return discrete_kernel(rng.uniform(-scale, scale, (m, m)))


def inverse_resolvent(K, lam):
    """R = (I - lam N W)^-1 N with a plain numpy inverse, independent of the library."""
    M = np.eye(K.m) - lam * K.values * K.weights[None, :]
    return np.linalg.inv(M) @ K.values
