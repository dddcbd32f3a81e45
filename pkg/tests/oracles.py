"""Independent numerical oracles shared by the tests."""

import numpy as np
from scipy.optimize import minimize


def guessing_oracle(psi, dx, dy, starts=4):
    """min Tr(Y) s.t. I (x) Y >= psi psi^*, as min over Y = LL^* > 0 of Tr(Y) psi^* (I (x) Y)^{-1} psi.

    Y is restricted to the support of the Y marginal, which contains psi's Y part.
    """
    m = np.asarray(psi).reshape(dx, dy)
    _, s, vh = np.linalg.svd(m)
    basis = vh[: int(np.sum(s > 1e-12 * s[0]))].conj().T
    m = m @ basis
    dy = basis.shape[1]
    psi = m.reshape(-1)
    idx = np.tril_indices(dy)
    k = len(idx[0])

    def obj(t):
        l = np.zeros((dy, dy), dtype=complex)
        l[idx] = t[:k] + 1j * t[k:]
        y = l @ l.conj().T + 1e-14 * np.eye(dy)
        return float(np.trace(y).real * np.vdot(psi, np.linalg.solve(np.kron(np.eye(dx), y), psi)).real)

    rng = np.random.default_rng(0)
    runs = [minimize(obj, rng.standard_normal(2 * k), method="BFGS", options={"gtol": 1e-12, "maxiter": 5000})
            for _ in range(starts)]
    return min(r.fun for r in runs)
