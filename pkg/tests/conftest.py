import numpy as np
import pytest


def make_matrix(n, m, seed, cond=None):
    """Seeded random matrix; if cond is given, singular values are spread
    log-uniformly over [1/cond, 1] so conditioning is controlled."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, m))
    if cond is None:
        return a
    k = min(n, m)
    q1, _ = np.linalg.qr(rng.standard_normal((n, k)))
    q2, _ = np.linalg.qr(rng.standard_normal((m, k)))
    s = np.logspace(0, -np.log10(cond), k)
    return q1 @ np.diag(s) @ q2.T


def eta_oracle(u_ref, s_ref, v_ref, u_apx, v_apx, r):
    """Independent transcription of the weighted misalignment metric."""
    total = 0.0
    for i in range(r):
        cu = abs(u_ref[:, i] @ u_apx[:, i]) / np.linalg.norm(u_apx[:, i])
        cv = abs(v_ref[:, i] @ v_apx[:, i]) / np.linalg.norm(v_apx[:, i])
        total += s_ref[i] * (1.0 - min(cu, 1.0)) + s_ref[i] * (1.0 - min(cv, 1.0))
    return total / r


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
