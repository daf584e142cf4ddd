"""Information functions of partitions of a (possibly infinite) atomic measure space.

A measure space is an array of atom masses (``inf`` allowed).  A partition
is either an integer label per atom or a list of disjoint atom sets covering
the space.
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np


def information(cell_mass) -> np.ndarray:
    """Elementwise ``log(1/m)`` for finite positive ``m``, ``inf`` for 0, 0 for ``inf``."""
    m = np.asarray(cell_mass, dtype=float)
    out = np.zeros_like(m)
    zero = m == 0
    out[zero] = np.inf
    fin = (m > 0) & np.isfinite(m)
    out[fin] = -np.log(m[fin])
    return out


def information_function(masses: Sequence[float], cell_index: int) -> float:
    """Information of the cell ``cell_index`` of a partition with cell masses ``masses``."""
    m = masses[cell_index]
    if m < 0:
        raise ValueError("cell masses must be nonnegative")
    return float(information([m])[0])


def as_labels(partition, n_atoms: int) -> np.ndarray:
    """Normalize a partition to one integer label per atom, checking it is one."""
    if isinstance(partition, np.ndarray) and partition.ndim == 1 and partition.dtype.kind in "iu":
        if partition.shape[0] != n_atoms:
            raise ValueError("label array does not match the number of atoms")
        return partition.astype(np.int64)
    labels = np.full(n_atoms, -1, dtype=np.int64)
    for k, cell in enumerate(partition):
        for a in cell:
            if not 0 <= a < n_atoms:
                raise ValueError(f"atom {a} does not exist")
            if labels[a] != -1:
                raise ValueError(f"cells overlap at atom {a}")
            labels[a] = k
    if np.any(labels < 0):
        raise ValueError("cells do not cover the space")
    return labels


def _cell_mass(masses: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Mass of the cell containing each atom."""
    _, inv = np.unique(labels, return_inverse=True)
    totals = np.bincount(inv, weights=masses)
    return totals[inv]


def _join(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    return ia.astype(np.int64) * (int(ib.max()) + 1) + ib


def conditional_information_all(masses, alpha1, alpha2) -> np.ndarray:
    """``I(alpha1 | alpha2)`` at every atom.

    On atoms whose ``alpha2`` cell has finite mass this is the information of
    ``alpha1`` under the normalized conditional measure; on an infinite
    ``alpha2`` cell ``C`` it is the information of ``alpha1 v {C, X \\ C}``
    under ``masses`` itself.
    """
    m = np.asarray(masses, dtype=float)
    if np.any(m < 0):
        raise ValueError("masses must be nonnegative")
    l1 = as_labels(alpha1, len(m))
    l2 = as_labels(alpha2, len(m))
    joint = _cell_mass(m, _join(l1, l2))
    cond = _cell_mass(m, l2)
    out = information(joint)
    fin = np.isfinite(cond) & (cond > 0)
    with np.errstate(divide="ignore"):
        ratio = np.where(fin, joint / np.where(fin, cond, 1.0), 0.0)
    out[fin] = information(ratio[fin])
    return out


def conditional_information(alpha1, alpha2, point: int, masses) -> float:
    """``I_mu(alpha1 | alpha2)(x)`` at the atom ``point``."""
    return float(conditional_information_all(masses, alpha1, alpha2)[point])


# ---------------------------------------------------------------------------
def _word_masses(P: np.ndarray, q: np.ndarray, n: int) -> np.ndarray:
    """Stationary masses of all words of length ``n``, first coordinate slowest."""
    s = P.shape[0]
    m = q.copy()
    for _ in range(n - 1):
        m = (m.reshape(-1, s)[:, :, None] * P[None, :, :]).reshape(-1)
    return m


def _coords(s: int, n: int) -> np.ndarray:
    """``(s**n, n)`` array of all words, first coordinate slowest."""
    return np.array(list(itertools.product(range(s), repeat=n)), dtype=np.int64).reshape(-1, n)


def _coord_labels(words: np.ndarray, alpha: np.ndarray, cols: Sequence[int], r: int) -> np.ndarray:
    code = np.zeros(words.shape[0], dtype=np.int64)
    for c in cols:
        code = code * r + alpha[words[:, c]]
    return code


def decomposition_residual(system, alpha: Sequence[int] | None, n: int) -> float:
    """Largest pointwise gap in the chain rule for the information of ``alpha_0^{n-1}``.

    Atoms are the words ``(x_{-(n-1)}, ..., x_0)`` of a stationary finite
    Markov chain, given as a ``FiniteChain`` or a ``(P, q)`` pair; ``alpha``
    labels its states (``None`` means the generator).  The left side is ``I(v_{k=0}^{n-1} T^k alpha)``;
    the right side is ``I(alpha) o T^{-(n-1)}`` plus, for ``j = 1..n-1``,
    ``I(alpha | v_{k=1}^{j} T^k alpha) o T^{j-(n-1)}``, each conditional term
    computed on its own space of ``(j+1)``-words and read off at the matching
    prefix of the atom.  Zero-mass atoms are skipped.
    """
    if isinstance(system, tuple):
        P, q = system
    else:
        P, q = system.P, system.q(system.window)
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    if abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("decomposition check needs a probability (normalized) stationary vector")
    s = P.shape[0]
    alpha = np.arange(s) if alpha is None else np.asarray(alpha, dtype=np.int64)
    _, alpha = np.unique(alpha, return_inverse=True)
    r = int(alpha.max()) + 1
    if n < 1:
        raise ValueError("n must be at least 1")
    words = _coords(s, n)
    mass = _word_masses(P, q, n)
    pos = mass > 0
    lhs = information(_cell_mass(mass, _coord_labels(words, alpha, range(n), r)))
    cell0 = np.bincount(alpha, weights=q, minlength=r)
    rhs = information(cell0[alpha[words[:, 0]]])
    for j in range(1, n):
        sub = _coords(s, j + 1)
        sub_mass = _word_masses(P, q, j + 1)
        # on (y_{-j}, ..., y_0): alpha reads y_0 (last column), T^k alpha reads y_{-k}
        a1 = alpha[sub[:, j]]
        a2 = _coord_labels(sub, alpha, range(j), r)
        term = conditional_information_all(sub_mass, a1, a2)
        prefix_index = np.zeros(words.shape[0], dtype=np.int64)
        for c in range(j + 1):
            prefix_index = prefix_index * s + words[:, c]
        rhs = rhs + term[prefix_index]
    if not pos.any():
        return 0.0
    return float(np.max(np.abs(lhs[pos] - rhs[pos])))
