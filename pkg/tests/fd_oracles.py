"""Finite-difference oracles for the connection pipeline.

Everything here is computed from plain chart evaluations and central
differences only; no jet machinery is touched, so these values are an
independent route against which the forward-mode results are checked.
"""

import numpy as np

from kcontact.manifolds import chart_arrays


def chart_values(chart, x):
    arr = chart_arrays(chart, np.asarray(x, dtype=float)[None], order=0)
    return arr.th[0], arr.xi[0], arr.E[0], arr.G[0]


def fd_first(chart, x, step=1e-5):
    """Central-difference first derivatives of (theta, xi, E, G).

    Returns arrays with the derivative index last, matching the jet layout.
    """
    n = chart.dim
    tm = 2 * chart.m
    dth = np.zeros((n, n))
    dxi = np.zeros((n, n))
    dE = np.zeros((n, tm, n))
    dG = np.zeros((tm, tm, n))
    for j in range(n):
        h = np.zeros(n)
        h[j] = step
        tp, xp, Ep, Gp = chart_values(chart, x + h)
        tmn, xmn, Em, Gm = chart_values(chart, x - h)
        dth[:, j] = (tp - tmn) / (2 * step)
        dxi[:, j] = (xp - xmn) / (2 * step)
        dE[:, :, j] = (Ep - Em) / (2 * step)
        dG[:, :, j] = (Gp - Gm) / (2 * step)
    return dth, dxi, dE, dG


def structure_fd(chart, x, step=1e-4):
    """Structure functions (omega, c, tau, dcoef) from finite differences."""
    th, xi, E, G = chart_values(chart, x)
    dth, dxi, dE, dG = fd_first(chart, x, step)
    A = dth.T - dth  # A_ij = d_i theta_j - d_j theta_i
    omega = E.T @ A @ E
    n = chart.dim
    tm = 2 * chart.m
    Br = np.einsum("ia,kbi->kab", E, dE)
    Br = Br - Br.swapaxes(-1, -2)
    Bx = np.einsum("i,kai->ka", xi, dE) - np.einsum("ia,ki->ka", E, dxi)
    Aug = np.concatenate([E, xi[:, None]], axis=1)
    Minv = np.linalg.inv(Aug)
    cfull = np.einsum("ck,kab->cab", Minv, Br)
    dfull = Minv @ Bx
    return {
        "omega": omega,
        "c": cfull[:tm],
        "tau": cfull[tm],
        "dcoef": dfull[:tm],
        "E": E,
        "G": G,
        "dG": dG,
    }


def gamma_fd(chart, x, step=1e-4):
    """Connection coefficients from the Koszul formula, all inputs by FD."""
    p = structure_fd(chart, x, step)
    E, G, dG, c = p["E"], p["G"], p["dG"], p["c"]
    Dg = np.einsum("ia,bci->abc", E, dG)
    K = (
        Dg
        + np.einsum("bca->abc", Dg)
        - np.einsum("cab->abc", Dg)
        + np.einsum("dab,dc->abc", c, G)
        - np.einsum("dbc,da->abc", c, G)
        - np.einsum("dac,db->abc", c, G)
    )
    return 0.5 * np.einsum("ec,abc->eab", np.linalg.inv(G), K)


def curvature_fd(chart, x, outer_step=1e-3, inner_step=1e-4):
    """Curvature by outer central differences of the FD connection."""
    n = chart.dim
    p = structure_fd(chart, x, inner_step)
    E, c, tau, dcoef = p["E"], p["c"], p["tau"], p["dcoef"]
    Gam = gamma_fd(chart, x, inner_step)
    dGam = np.zeros(Gam.shape + (n,))
    for j in range(n):
        h = np.zeros(n)
        h[j] = outer_step
        dGam[..., j] = (
            gamma_fd(chart, x + h, inner_step) - gamma_fd(chart, x - h, inner_step)
        ) / (2 * outer_step)
    DGam = np.einsum("ja,ebcj->aebc", E, dGam)
    T1 = np.einsum("aebc->abec", DGam)
    T3 = np.einsum("dbc,ead->abec", Gam, Gam)
    T5 = np.einsum("dab,edc->abec", c, Gam)
    T6 = np.einsum("ab,ec->abec", tau, dcoef)
    return T1 - T1.swapaxes(0, 1) + T3 - T3.swapaxes(0, 1) - T5 - T6
