"""Spin representation of so(2m) on the 2^m-dimensional spinor space.

Gamma matrices come from the fermionic creation/annihilation construction
(Jordan-Wigner form), the Fock basis is ordered by occupation bitstrings
(mode 1 major), and the algebra lift is sigma(A) = (1/4) sum A_pq g_q g_p,
the index order that makes the lift equivariant under the chosen sign
convention (vectors square to minus their length,
g_p g_q + g_q g_p = -2 delta_pq).

The rotation generator pairing the coordinate planes acts diagonally in
this basis with eigenvalue (i/2)(m - 2k) on occupation level k; every
statement tested downstream depends only on eigenvalue ratios and kernel
dimensions, so the global 1/2 is recorded (``LIFT_LEVEL_CONSTANT``) but
never normalized away.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

__all__ = [
    "SpinRep",
    "build_spin_rep",
    "spin_lift",
    "parallel_spinor_dim",
    "ratio_condition",
    "standard_complex_structure",
    "real_from_complex",
    "LIFT_LEVEL_CONSTANT",
]

MAX_MODES = 8
LIFT_LEVEL_CONSTANT = 0.5  # eigenvalue of the lifted rotation = const * (m - 2k) i


@dataclass
class SpinRep:
    """Gamma matrices and Fock grading for m fermionic modes."""

    m: int
    gamma: np.ndarray  # (2m, 2^m, 2^m) complex

    @property
    def dim(self):
        return 2**self.m

    def occupation(self, index):
        """Occupation bits (n_1, ..., n_m) of a Fock basis index."""
        return tuple((index >> (self.m - j - 1)) & 1 for j in range(self.m))

    def grading(self, index, mode_partition=None):
        """Level k = total occupation, or per-factor occupations.

        ``mode_partition`` assigns consecutive mode counts to factors,
        e.g. (1, 1) splits two modes into two one-dimensional factors.
        """
        occ = self.occupation(index)
        if mode_partition is None:
            return sum(occ)
        if sum(mode_partition) != self.m:
            raise ValueError("mode partition does not cover all modes")
        out = []
        start = 0
        for cnt in mode_partition:
            out.append(sum(occ[start : start + cnt]))
            start += cnt
        return tuple(out)

    def vector_matrix(self, v):
        """Clifford action of a tangent vector, gamma(v) = sum v_p gamma_p."""
        return np.einsum("p,pij->ij", np.asarray(v, dtype=complex), self.gamma)


def build_spin_rep(m):
    """Gamma matrices of size 2^m via the mode construction."""
    if not (1 <= m <= MAX_MODES):
        raise ValueError(f"m must be between 1 and {MAX_MODES}")
    I2 = np.eye(2, dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    a = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)

    def mode_op(j, op):
        mats = [Z] * j + [op] + [I2] * (m - j - 1)
        out = mats[0]
        for Mx in mats[1:]:
            out = np.kron(out, Mx)
        return out

    gammas = []
    for j in range(m):
        aj = mode_op(j, a)
        adj = aj.conj().T
        gammas.append(aj - adj)
        gammas.append(1j * (aj + adj))
    return SpinRep(m=m, gamma=np.array(gammas))


def spin_lift(rep: SpinRep, A):
    """Lift of a skew matrix A in so(2m) to the spinor space."""
    A = np.asarray(A, dtype=float)
    if np.max(np.abs(A + A.T)) > 1e-10:
        raise ValueError("spin lift needs a skew-symmetric matrix")
    prods = np.einsum("qij,pjk->pqik", rep.gamma, rep.gamma)
    return 0.25 * np.einsum("pq,pqik->ik", A, prods)


def parallel_spinor_dim(rep: SpinRep, basis, svd_tol=1e-8):
    """Dimension of the joint kernel of the lifted algebra basis.

    Stacks the lifts vertically and thresholds singular values at
    ``svd_tol`` times the largest one.
    """
    mats = basis.basis if hasattr(basis, "basis") else np.asarray(basis)
    if len(mats) == 0:
        return rep.dim
    stack = np.concatenate([spin_lift(rep, B) for B in mats], axis=0)
    s = np.linalg.svd(stack, compute_uv=False)
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        return rep.dim
    return int(np.sum(s <= svd_tol * smax) + (rep.dim - len(s)))


def ratio_condition(m_list, a_list, rtol=1e-9):
    """Search occupations k_i in {0, m_i} making (m_i - 2k_i)/(m_i a_i) equal.

    This is the abstract solvability test for a holonomy line inside the
    span of the block rotations to annihilate a spinor of extreme
    per-factor occupation.  Returns the witnesses when satisfiable.
    """
    m_list = [int(v) for v in m_list]
    a_list = [float(v) for v in a_list]
    if len(m_list) != len(a_list):
        raise ValueError("mismatched factor counts")
    if any(v < 1 for v in m_list) or any(v == 0.0 for v in a_list):
        raise ValueError("need m_i >= 1 and a_i != 0")
    witnesses = []
    witness_ratios = []
    for ks in product(*[(0, mi) for mi in m_list]):
        ratios = [
            (mi - 2.0 * ki) / (mi * ai) for mi, ai, ki in zip(m_list, a_list, ks)
        ]
        spread = max(ratios) - min(ratios)
        if spread <= rtol * max(abs(r) for r in ratios):
            witnesses.append(ks)
            witness_ratios.append(ratios[0])
    return {
        "satisfiable": bool(witnesses),
        "k_list": witnesses if witnesses else None,
        "ratios": witness_ratios if witnesses else None,
    }


def standard_complex_structure(m):
    """Block rotation J with J e_{2j-1} = e_{2j} on R^{2m}."""
    J = np.zeros((2 * m, 2 * m))
    for j in range(m):
        J[2 * j + 1, 2 * j] = 1.0
        J[2 * j, 2 * j + 1] = -1.0
    return J


def real_from_complex(U):
    """Real 2p x 2p matrix of a complex p x p matrix on interleaved coords.

    The complex coordinate z_j = x_j + i y_j occupies real slots
    (2j, 2j+1); anti-Hermitian input yields a skew output commuting with
    the standard complex structure.
    """
    U = np.asarray(U, dtype=complex)
    p = U.shape[0]
    out = np.zeros((2 * p, 2 * p))
    for j in range(p):
        for k in range(p):
            a, b = U[j, k].real, U[j, k].imag
            out[2 * j, 2 * k] = a
            out[2 * j + 1, 2 * k + 1] = a
            out[2 * j, 2 * k + 1] = -b
            out[2 * j + 1, 2 * k] = b
    return out
