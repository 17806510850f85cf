"""Spectral toolbox for finite-dimensional Hermitian operators.

Everything downstream (reservoir kernels, dissipative generators, kinetic
restrictions) is organised around the transition frequencies of the system
Hamiltonian.  This module provides the three primitives that encode that
structure:

* :func:`spectral_decompose` -- eigenlevels and orthogonal projectors, with
  near-degenerate eigenvalues clustered into a single level;
* :func:`bohr_frequencies` -- the set of level differences, closed under
  negation and containing 0;
* :func:`e_omega` -- the frequency component ``E_w(X)`` of an operator,
  i.e. the part of ``X`` that oscillates as ``exp(-i w t)`` under the free
  Heisenberg evolution.

Operators are plain complex ndarrays throughout; the dataclasses hold the
derived spectral data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "DEFAULT_CLUSTER_SCALE",
    "MAX_DIMENSION",
    "SpectralData",
    "BohrSet",
    "validate_hermitian",
    "spectral_decompose",
    "bohr_frequencies",
    "e_omega",
    "commutant_membership",
    "dag",
    "matrix_unit",
]

#: Relative eigenvalue-clustering tolerance: gaps below
#: ``DEFAULT_CLUSTER_SCALE * (spectral range)`` merge into one level.
DEFAULT_CLUSTER_SCALE = 1e-9

#: Hard cap on the Hilbert-space dimension for dense spectral work.
MAX_DIMENSION = 64


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def matrix_unit(dim: int, mu: int, nu: int) -> np.ndarray:
    """The matrix unit ``|mu><nu|`` in the standard basis."""
    out = np.zeros((dim, dim), dtype=complex)
    out[mu, nu] = 1.0
    return out


def validate_hermitian(mat: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Check that ``mat`` is a square Hermitian matrix.

    Returns the matrix as a complex ndarray.  Raises ``ValueError`` naming
    the largest offending entry if ``||M - M^dag||_F > tol * ||M||_F``.
    """
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if mat.shape[0] > MAX_DIMENSION:
        raise ValueError(
            f"dimension {mat.shape[0]} exceeds the supported cap {MAX_DIMENSION}"
        )
    diff = mat - dag(mat)
    norm = np.linalg.norm(mat)
    bound = tol * max(norm, tol)
    err = np.linalg.norm(diff)
    if err > bound:
        idx = np.unravel_index(np.argmax(np.abs(diff)), diff.shape)
        raise ValueError(
            f"matrix is not Hermitian: max asymmetry {np.abs(diff[idx]):.3e} "
            f"at entry {idx} (Frobenius deviation {err:.3e} > {bound:.3e})"
        )
    return mat


@dataclass(eq=False)
class SpectralData:
    """Clustered eigendecomposition of a Hermitian operator.

    Attributes:
        energies: strictly increasing level energies, one per cluster.
        projectors: orthogonal projector per level (lab basis).
        basis: unitary whose columns are eigenvectors ordered by energy;
            within a degenerate level the column choice is the one returned
            by the dense eigensolver.
        level_of_column: level index for each basis column.
        cluster_tol: absolute gap below which eigenvalues merged.
    """

    energies: np.ndarray
    projectors: tuple
    basis: np.ndarray
    level_of_column: np.ndarray
    cluster_tol: float

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def multiplicity(self, level: int) -> int:
        return int(np.sum(self.level_of_column == level))

    def level_index(self, energy: float) -> int | None:
        """Index of the level matching ``energy`` within cluster_tol, else None."""
        hits = np.nonzero(np.abs(self.energies - energy) <= self.match_tol)[0]
        return int(hits[0]) if hits.size else None

    @property
    def match_tol(self) -> float:
        # Frequency/energy matching uses a slightly looser tolerance than the
        # clustering itself so that differences of clustered energies still hit.
        return max(self.cluster_tol, 1e-12)

    def validate(self) -> None:
        """Assert completeness and orthogonality of the projectors."""
        d = self.dim
        total = sum(self.projectors)
        if np.linalg.norm(total - np.eye(d)) > 1e-12 * d:
            raise ValueError("spectral projectors do not sum to the identity")
        for k, p in enumerate(self.projectors):
            if np.linalg.norm(p @ p - p) > 1e-12 * d:
                raise ValueError(f"projector {k} is not idempotent")


def spectral_decompose(
    hamiltonian: np.ndarray, cluster_tol: float | None = None
) -> SpectralData:
    """Eigenlevels of a Hermitian matrix with degeneracy clustering.

    Eigenvalues closer than ``cluster_tol`` (default: 1e-9 times the spectral
    range) are merged into one level whose projector spans the corresponding
    eigenvectors.  Levels are returned in strictly increasing order.
    """
    h = validate_hermitian(hamiltonian)
    vals, vecs = np.linalg.eigh(h)
    spread = float(vals[-1] - vals[0]) if len(vals) > 1 else 0.0
    if cluster_tol is None:
        cluster_tol = max(DEFAULT_CLUSTER_SCALE * spread, 1e-12)

    # cluster sorted eigenvalues by gap
    level_of_column = np.zeros(len(vals), dtype=int)
    for i in range(1, len(vals)):
        same = (vals[i] - vals[i - 1]) <= cluster_tol
        level_of_column[i] = level_of_column[i - 1] + (0 if same else 1)

    energies = []
    projectors = []
    for lev in range(level_of_column[-1] + 1 if len(vals) else 0):
        cols = np.nonzero(level_of_column == lev)[0]
        energies.append(float(np.mean(vals[cols])))
        block = vecs[:, cols]
        projectors.append(block @ dag(block))
    data = SpectralData(
        energies=np.asarray(energies),
        projectors=tuple(projectors),
        basis=vecs,
        level_of_column=level_of_column,
        cluster_tol=float(cluster_tol),
    )
    data.validate()
    return data


@dataclass(eq=False)
class BohrSet:
    """Transition frequencies of a spectrum and their level pairs.

    ``frequencies`` is sorted, contains 0, and is closed under negation.
    ``pairs[k]`` lists the ``(target, source)`` level-index pairs realising
    ``frequencies[k]``: the component map sends ``X`` to
    ``sum P[target] X P[source]`` with ``E[source] - E[target] = w``.
    """

    frequencies: np.ndarray
    pairs: tuple
    match_tol: float

    def __len__(self) -> int:
        return len(self.frequencies)

    def index_of(self, omega: float) -> int | None:
        hits = np.nonzero(np.abs(self.frequencies - omega) <= self.match_tol)[0]
        return int(hits[0]) if hits.size else None

    def positive(self) -> np.ndarray:
        return self.frequencies[self.frequencies > self.match_tol]


def bohr_frequencies(spec: SpectralData) -> BohrSet:
    """All level differences of ``spec``, with their realising level pairs."""
    en = spec.energies
    tol = spec.match_tol
    diffs = sorted(en[a] - en[b] for a in range(len(en)) for b in range(len(en)))
    freqs: list[float] = []
    for w in diffs:
        if not freqs or (w - freqs[-1]) > tol:
            freqs.append(w)
    pairs = []
    for w in freqs:
        plist = []
        for src in range(len(en)):
            for tgt in range(len(en)):
                if abs((en[src] - en[tgt]) - w) <= tol:
                    plist.append((tgt, src))
        pairs.append(tuple(plist))
    return BohrSet(
        frequencies=np.asarray(freqs), pairs=tuple(pairs), match_tol=tol
    )


def e_omega(
    x: np.ndarray,
    omega: float,
    spec: SpectralData,
    bohr: BohrSet | None = None,
) -> np.ndarray:
    """Frequency component of ``x`` at transition frequency ``omega``.

    ``E_w(X) = sum_{E - w in spectrum} P[E - w] X P[E]``; rotates as
    ``exp(-i w t)`` under the free evolution.  Frequencies not in the
    transition set (within the matching tolerance) give the zero operator.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (spec.dim, spec.dim):
        raise ValueError(f"operator shape {x.shape} does not match dim {spec.dim}")
    if bohr is None:
        bohr = bohr_frequencies(spec)
    out = np.zeros_like(x)
    k = bohr.index_of(omega)
    if k is None:
        return out
    for tgt, src in bohr.pairs[k]:
        out += spec.projectors[tgt] @ x @ spec.projectors[src]
    return out


def commutant_membership(
    x: np.ndarray, spec: SpectralData, tol: float = 1e-10
) -> tuple[bool, float]:
    """Whether ``x`` commutes with every spectral projector of ``spec``.

    Returns ``(member, residual)`` with residual the largest trace norm of a
    commutator ``[x, P]`` over the spectral projectors.
    """
    x = np.asarray(x, dtype=complex)
    residual = 0.0
    for p in spec.projectors:
        comm = x @ p - p @ x
        residual = max(residual, float(np.linalg.svd(comm, compute_uv=False).sum()))
    return residual <= tol, residual
