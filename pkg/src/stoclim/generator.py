"""Markovian generator of the reduced dynamics, in both pictures.

The generator is assembled channel by channel: each positive transition
frequency w carries lowering operators ``A_j = E_w(D_j)`` (one per system
coupling ``D_j``), an emission rate matrix ``gamma_minus`` and an absorption
rate matrix ``gamma_plus`` over coupling indices, plus a Hermitian shift
Hamiltonian collected from the imaginary reservoir constants of every
frequency.  In the Heisenberg picture::

    L(X) = i[H_shift, X]
         + sum_w sum_ij gamma_minus[i,j] (A_i^dag X A_j - {A_i^dag A_j, X}/2)
         + sum_w sum_ij gamma_plus[i,j]  (A_j X A_i^dag - {A_j A_i^dag, X}/2)

The plus channel pairs its indices in the opposite order: the absorption
constants carry the conjugate form-factor product relative to emission, so
the raising operator built from coupling j goes with the constant's second
index.  With real form factors the two orders coincide; with complex ones
only this order keeps the Gibbs state stationary.

and the Schroedinger-picture adjoint acts on density matrices with the jump
operators sandwiching the state.  The module also provides the first-order
structure maps (commutators with the frequency components) whose products
reproduce the deviation of ``L`` from being a derivation -- the product-rule
identity used to pin down the cross-coupling index pairing -- and closed-form
off-diagonal decay rates for non-degenerate systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .bath import CorrelationTable
from .operators import (
    BohrSet,
    SpectralData,
    bohr_frequencies,
    dag,
    e_omega,
    validate_hermitian,
)

__all__ = [
    "NonGenericError",
    "DissipationChannel",
    "Generator",
    "StructureMapSet",
    "GenericityReport",
    "build_drift",
    "build_generator",
    "apply_heisenberg",
    "apply_schroedinger",
    "offdiag_rate",
    "genericity_check",
    "leibniz_defect",
    "vectorize",
    "unvectorize",
]


class NonGenericError(ValueError):
    """Raised when a closed form needs a non-degenerate, unambiguous spectrum."""


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation (columns concatenated top to bottom)."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvectorize(vec: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    return np.asarray(vec, dtype=complex).reshape((dim, dim), order="F")


def _kron_left_right(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # matrix of rho -> left @ rho @ right under column stacking
    return np.kron(right.T, left)


@dataclass(eq=False)
class DissipationChannel:
    """One positive-frequency dissipation channel."""

    omega: float
    lowering: tuple  # E_w(D_j) per coupling, lab basis
    gamma_minus: np.ndarray  # (n, n) Hermitian PSD: emission rates
    gamma_plus: np.ndarray  # (n, n) Hermitian PSD: absorption rates

    @cached_property
    def k_minus(self) -> np.ndarray:
        """``sum_ij gamma_minus[i,j] A_i^dag A_j`` (PSD)."""
        return self._quad_form(self.gamma_minus, lower_first=True)

    @cached_property
    def k_plus(self) -> np.ndarray:
        """``sum_ij gamma_plus[i,j] A_j A_i^dag`` (PSD)."""
        return self._quad_form(self.gamma_plus, lower_first=False)

    def _quad_form(self, rates: np.ndarray, lower_first: bool) -> np.ndarray:
        d = self.lowering[0].shape[0]
        out = np.zeros((d, d), dtype=complex)
        for i, a_i in enumerate(self.lowering):
            for j, a_j in enumerate(self.lowering):
                r = rates[i, j]
                if r == 0.0:
                    continue
                if lower_first:
                    out += r * (dag(a_i) @ a_j)
                else:
                    out += r * (a_j @ dag(a_i))
        return out


@dataclass(eq=False)
class Generator:
    """Frequency-resolved Markovian generator.

    Holds the spectral data of the free Hamiltonian, the dissipation
    channels, and the Hermitian shift Hamiltonian.  The dense superoperator
    of the Schroedinger picture is built lazily on first use
    (column-stacking convention).
    """

    spec: SpectralData
    channels: tuple
    h_shift: np.ndarray

    @property
    def dim(self) -> int:
        return self.spec.dim

    @cached_property
    def dense_adjoint(self) -> np.ndarray:
        """Dense matrix of the Schroedinger-picture generator."""
        d = self.dim
        eye = np.eye(d, dtype=complex)
        h = self.h_shift
        out = np.zeros((d * d, d * d), dtype=complex)
        if np.any(h):
            out -= 1j * (_kron_left_right(h, eye) - _kron_left_right(eye, h))
        for ch in self.channels:
            nonzero = [bool(np.any(a)) for a in ch.lowering]
            for i, a_i in enumerate(ch.lowering):
                for j, a_j in enumerate(ch.lowering):
                    if not (nonzero[i] and nonzero[j]):
                        continue
                    gm = ch.gamma_minus[i, j]
                    gp = ch.gamma_plus[i, j]
                    if gm != 0.0:
                        out += gm * _kron_left_right(a_j, dag(a_i))
                    if gp != 0.0:
                        out += gp * _kron_left_right(dag(a_i), a_j)
            for k in (ch.k_minus, ch.k_plus):
                if np.any(k):
                    out -= 0.5 * (
                        _kron_left_right(k, eye) + _kron_left_right(eye, k)
                    )
        return out

    def norm_scale(self) -> float:
        """Rough magnitude of the generator (largest rate plus shift)."""
        scale = float(np.linalg.norm(self.h_shift))
        for ch in self.channels:
            scale += float(
                np.abs(ch.gamma_minus).max(initial=0.0)
                + np.abs(ch.gamma_plus).max(initial=0.0)
            )
        return max(scale, 1.0)


def build_generator(
    spec: SpectralData,
    couplings: Sequence[np.ndarray],
    table: CorrelationTable,
    bohr: BohrSet | None = None,
) -> Generator:
    """Assemble the generator from spectral data, couplings and rate table."""
    if bohr is None:
        bohr = bohr_frequencies(spec)
    couplings = [validate_hermitian(d) for d in couplings]
    n = len(couplings)
    d = spec.dim
    channels = []
    h_shift = np.zeros((d, d), dtype=complex)
    for k, w in enumerate(bohr.frequencies):
        comps = tuple(e_omega(dop, w, spec, bohr) for dop in couplings)
        m = table.minus[table.index_of(w)]
        p = table.plus[table.index_of(w)]
        # Hermitian part of the constants -> rates, anti-Hermitian -> shifts;
        # for real form factors these reduce to 2*Re and Im entrywise.
        sh_m = (m - dag(m)) / 2j
        sh_p = (p - dag(p)) / 2j
        if np.any(sh_m != 0.0) or np.any(sh_p != 0.0):
            for i in range(n):
                for j in range(n):
                    if sh_m[i, j] != 0.0:
                        h_shift += sh_m[i, j] * (dag(comps[i]) @ comps[j])
                    if sh_p[i, j] != 0.0:
                        h_shift -= sh_p[i, j] * (comps[j] @ dag(comps[i]))
        if w > bohr.match_tol:
            gm = m + dag(m)
            gp = p + dag(p)
            # frequencies whose components all vanish (no level pair realises
            # the transition through any coupling) contribute nothing
            if (np.any(gm != 0.0) or np.any(gp != 0.0)) and any(
                np.any(c) for c in comps
            ):
                channels.append(
                    DissipationChannel(
                        omega=float(w),
                        lowering=comps,
                        gamma_minus=gm,
                        gamma_plus=gp,
                    )
                )
    herm_err = np.linalg.norm(h_shift - dag(h_shift))
    if herm_err > 1e-10 * max(1.0, np.linalg.norm(h_shift)):
        raise ValueError(f"shift Hamiltonian not Hermitian (deviation {herm_err:.3e})")
    h_shift = 0.5 * (h_shift + dag(h_shift))
    return Generator(spec=spec, channels=tuple(channels), h_shift=h_shift)


def build_drift(
    spec: SpectralData,
    couplings: Sequence[np.ndarray],
    table: CorrelationTable,
    bohr: BohrSet | None = None,
) -> np.ndarray:
    """Drift operator of the associated quantum Langevin equation.

    ``G = sum_{ij,w} [ c-_ij(w) E_w(D_i)^dag E_w(D_j)
                      + conj(c+_ij(w)) E_w(D_i) E_w(D_j)^dag ]``
    where c-+ are the complex reservoir constants.  Its Hermitian part is
    half the total damping; the anti-Hermitian part generates the shift.
    """
    if bohr is None:
        bohr = bohr_frequencies(spec)
    couplings = [validate_hermitian(d) for d in couplings]
    d = spec.dim
    out = np.zeros((d, d), dtype=complex)
    for w in bohr.frequencies:
        comps = [e_omega(dop, w, spec, bohr) for dop in couplings]
        m = table.minus[table.index_of(w)]
        p = table.plus[table.index_of(w)]
        for i in range(len(couplings)):
            for j in range(len(couplings)):
                if m[i, j] != 0.0:
                    out += m[i, j] * (dag(comps[i]) @ comps[j])
                if p[i, j] != 0.0:
                    out += np.conj(p[i, j]) * (comps[i] @ dag(comps[j]))
    return out


def apply_heisenberg(gen: Generator, x: np.ndarray) -> np.ndarray:
    """Generator action on an observable."""
    x = np.asarray(x, dtype=complex)
    h = gen.h_shift
    out = 1j * (h @ x - x @ h)
    for ch in gen.channels:
        for i, a_i in enumerate(ch.lowering):
            for j, a_j in enumerate(ch.lowering):
                gm = ch.gamma_minus[i, j]
                gp = ch.gamma_plus[i, j]
                if gm != 0.0:
                    out += gm * (dag(a_i) @ x @ a_j)
                if gp != 0.0:
                    out += gp * (a_j @ x @ dag(a_i))
        for k in (ch.k_minus, ch.k_plus):
            out -= 0.5 * (k @ x + x @ k)
    return out


def apply_adjoint(gen: Generator, rho: np.ndarray) -> np.ndarray:
    """Schroedinger-picture action on an arbitrary matrix (no state checks)."""
    rho = np.asarray(rho, dtype=complex)
    h = gen.h_shift
    out = -1j * (h @ rho - rho @ h)
    for ch in gen.channels:
        for i, a_i in enumerate(ch.lowering):
            for j, a_j in enumerate(ch.lowering):
                gm = ch.gamma_minus[i, j]
                gp = ch.gamma_plus[i, j]
                if gm != 0.0:
                    out += gm * (a_j @ rho @ dag(a_i))
                if gp != 0.0:
                    out += gp * (dag(a_i) @ rho @ a_j)
        for k in (ch.k_minus, ch.k_plus):
            out -= 0.5 * (k @ rho + rho @ k)
    return out


def apply_schroedinger(gen: Generator, rho: np.ndarray) -> np.ndarray:
    """Generator action on a density matrix (validates the state first)."""
    from .evolution import validate_density_matrix

    validate_density_matrix(rho)
    return apply_adjoint(gen, rho)


@dataclass
class GenericityReport:
    """Outcome of the non-degeneracy / unique-transition-pair check."""

    degenerate_levels: list
    ambiguous_frequencies: list

    @property
    def is_generic(self) -> bool:
        return not self.degenerate_levels and not self.ambiguous_frequencies


def genericity_check(spec: SpectralData, bohr: BohrSet | None = None) -> GenericityReport:
    """Check that every level is simple and every non-zero transition
    frequency is realised by exactly one level pair."""
    if bohr is None:
        bohr = bohr_frequencies(spec)
    degenerate = [
        (float(spec.energies[k]), spec.multiplicity(k))
        for k in range(spec.n_levels)
        if spec.multiplicity(k) > 1
    ]
    ambiguous = [
        (float(w), len(bohr.pairs[k]))
        for k, w in enumerate(bohr.frequencies)
        if abs(w) > bohr.match_tol and len(bohr.pairs[k]) > 1
    ]
    return GenericityReport(degenerate_levels=degenerate, ambiguous_frequencies=ambiguous)


def offdiag_rate(gen: Generator, mu: int, nu: int) -> complex:
    """Closed-form decay coefficient of the matrix unit ``|mu><nu|``.

    For a generic (non-degenerate, unambiguous) spectrum each off-diagonal
    matrix unit in the eigenbasis is an eigenvector of the adjoint
    generator; this returns its eigenvalue

        A = -i (h_mu - h_nu) - (out_mu + out_nu) / 2

    with ``h`` the diagonal shift energies and ``out`` the total outflow
    rates.  Raises :class:`NonGenericError` when the closed form does not
    apply (use the dense form instead).
    """
    report = genericity_check(gen.spec)
    if not report.is_generic:
        raise NonGenericError(
            "off-diagonal closed form needs a generic spectrum; "
            f"degenerate levels: {report.degenerate_levels}, "
            f"ambiguous frequencies: {report.ambiguous_frequencies}"
        )
    if mu == nu:
        raise ValueError("off-diagonal rate needs two distinct level indices")
    v = gen.spec.basis
    h_diag = np.real(np.diag(dag(v) @ gen.h_shift @ v))
    k_tot = np.zeros((gen.dim, gen.dim), dtype=complex)
    for ch in gen.channels:
        k_tot += ch.k_minus + ch.k_plus
    k_diag = np.real(np.diag(dag(v) @ k_tot @ v))
    return complex(
        -1j * (h_diag[mu] - h_diag[nu]) - 0.5 * (k_diag[mu] + k_diag[nu])
    )


@dataclass(eq=False)
class StructureMapSet:
    """First-order structure maps attached to a generator.

    ``theta_minus(x, j, w) = -i[x, E_w(D_j)^dag]`` and
    ``theta_plus(x, j, w) = -i[x, E_w(D_j)]`` are the coefficient maps of the
    reservoir increments in the associated flow equation; their pairwise
    products weighted by the channel rates measure the failure of the
    generator to be a derivation.
    """

    generator: Generator

    def theta_minus(self, x: np.ndarray, j: int, channel: DissipationChannel) -> np.ndarray:
        a = dag(channel.lowering[j])
        return -1j * (x @ a - a @ x)

    def theta_plus(self, x: np.ndarray, j: int, channel: DissipationChannel) -> np.ndarray:
        a = channel.lowering[j]
        return -1j * (x @ a - a @ x)

    def theta0(self, x: np.ndarray) -> np.ndarray:
        return apply_heisenberg(self.generator, x)


def leibniz_defect(maps: StructureMapSet, x: np.ndarray, y: np.ndarray) -> float:
    """Frobenius norm of the product-rule defect.

    ``L(XY) - L(X)Y - X L(Y)`` minus the rate-weighted structure-map
    products; identically zero (up to rounding) for the pairing used here.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    gen = maps.generator
    lhs = (
        maps.theta0(x @ y) - maps.theta0(x) @ y - x @ maps.theta0(y)
    )
    corr = np.zeros_like(lhs)
    for ch in gen.channels:
        n = len(ch.lowering)
        for i in range(n):
            for j in range(n):
                gm = ch.gamma_minus[i, j]
                gp = ch.gamma_plus[i, j]
                if gm != 0.0:
                    corr += gm * (
                        maps.theta_minus(x, i, ch) @ maps.theta_plus(y, j, ch)
                    )
                if gp != 0.0:
                    corr += gp * (
                        maps.theta_plus(x, j, ch) @ maps.theta_minus(y, i, ch)
                    )
    return float(np.linalg.norm(lhs - corr))
