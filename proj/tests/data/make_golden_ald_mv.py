"""Brute-force reference for the ald-mv CLI golden file.

Maximizes mu.w + log(D)/a with D = 1 - a^2/2 w'Sw + a mu_a.w over a dense
grid on the feasible box, then polishes with Nelder-Mead.
"""

import numpy as np
from scipy.optimize import minimize

MU = np.array([0.08, 0.03])
KAPPA = np.array([1.15, 0.9])
A = 2.0
S = np.array([[0.09, 0.03], [0.03, 0.04]])
MU_A = np.sqrt(np.diag(S) / 2.0) * (1.0 / KAPPA - KAPPA)


def objective(w):
    d = 1.0 - 0.5 * A * A * w @ S @ w + A * MU_A @ w
    return MU @ w + np.log(d) / A if d > 0 else -np.inf


def main():
    r = 3.0 / (A * np.sqrt(np.linalg.eigvalsh(S).min()))
    grid = np.linspace(-r, r, 1201)
    best, best_f = None, -np.inf
    for x in grid:
        for y in grid:
            f = objective(np.array([x, y]))
            if f > best_f:
                best, best_f = np.array([x, y]), f
    res = minimize(lambda w: -objective(w), best, method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 20000})
    print("asset,weight")
    for name, w in zip(["A0", "A1"], res.x):
        print(f"{name},{w:.12f}")


if __name__ == "__main__":
    main()
