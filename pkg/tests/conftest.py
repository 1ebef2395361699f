import numpy as np
import pytest

from sglst.solver import Dictionary

ACCEPTANCE_LINES = []


def random_instance(seed, d=10, l=3, k=3):
    """Unit-norm random dictionary and candidate."""
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((d, l * k))
    D /= np.linalg.norm(D, axis=0)
    X = rng.standard_normal((d, l))
    X /= np.linalg.norm(X, axis=0)
    return Dictionary(D, l, k), X


def template_instance(seed=4, d=10, l=3, k=3, q=1, noise=0.1):
    """Candidate drawn from template ``q`` plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((d, l * k))
    D /= np.linalg.norm(D, axis=0)
    X = D[:, q * l:(q + 1) * l] + noise * rng.standard_normal((d, l))
    X /= np.linalg.norm(X, axis=0)
    return Dictionary(D, l, k), X


def cvx_solve(D, X, lam):
    """Generic conic solve of the group-sparse coding problem; returns (C, value)."""
    import cvxpy as cp

    l, k = D.l, D.k
    C = cp.Variable((l * k, l))
    reg = sum(cp.max(cp.abs(C[q * l:(q + 1) * l, :])) for q in range(k))
    prob = cp.Problem(cp.Minimize(cp.sum_squares(X - D.data @ C) + lam * reg),
                      [C >= 0, cp.sum(C, axis=0) == 1])
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return C.value, prob.value


def active_set_simplex(v):
    """Michelot-style active-set projection onto the probability simplex.

    Repeatedly solves the equality-constrained problem on the current support
    and drops coordinates that come out negative. No sorting involved.
    """
    v = np.asarray(v, dtype=float)
    support = np.ones(v.size, dtype=bool)
    while True:
        w = np.zeros_like(v)
        s = support.sum()
        w[support] = v[support] - (v[support].sum() - 1.0) / s
        neg = support & (w < 0)
        if not neg.any():
            return w
        support &= ~neg


def record(criterion, ok, detail):
    line = f"[acceptance {criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synth100(tmp_path_factory):
    from sglst.synth import synth_sequence

    return synth_sequence(tmp_path_factory.mktemp("synth") / "synth100", n_frames=100,
                          sigma=2.0, seed=0)


@pytest.fixture(scope="session")
def synth20(tmp_path_factory):
    from sglst.synth import synth_sequence

    return synth_sequence(tmp_path_factory.mktemp("synth") / "synth20", n_frames=20,
                          sigma=2.0, seed=0)
