"""Time evolution, stationary states, and classical kinetic restrictions.

States are plain complex ndarrays validated by
:func:`validate_density_matrix`; trajectories bundle times with states.
Evolution uses the dense matrix exponential for small systems and adaptive
Runge-Kutta with the structured generator application for larger ones.

The diagonal (population) sector of the generator is a classical jump
process; :func:`diagonal_restriction` extracts its rate matrix, whose
stationary distribution for a thermal reservoir is the Gibbs distribution
(detailed balance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.linalg import expm, null_space
from scipy.sparse.linalg import expm_multiply

from .generator import Generator, apply_adjoint, vectorize, unvectorize
from .operators import SpectralData, dag

__all__ = [
    "EXPM_DIMENSION_LIMIT",
    "TRACE_DRIFT_BOUND",
    "Trajectory",
    "StationaryResult",
    "ClassicalKineticSystem",
    "validate_density_matrix",
    "evolve",
    "stationary_state",
    "diagonal_restriction",
    "detailed_balance_residual",
    "gibbs_state",
    "gibbs_distribution",
    "decay_fit",
    "trace_distance",
]

#: dense matrix-exponential propagation is used up to this Hilbert dimension
EXPM_DIMENSION_LIMIT = 16

#: per-sample bound on the trace drift before renormalisation aborts
TRACE_DRIFT_BOUND = 1e-10


def validate_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-12,
    psd_floor: float = -1e-10,
) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity of a state.

    Raises ``ValueError`` naming the offending quantity.  Returns the state
    as a complex ndarray.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"state must be square, got shape {rho.shape}")
    scale = max(float(np.linalg.norm(rho)), 1.0)
    asym = float(np.linalg.norm(rho - dag(rho)))
    if asym > herm_tol * scale:
        raise ValueError(f"state not Hermitian: deviation {asym:.3e}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace {tr} differs from 1 by {abs(tr - 1.0):.3e}")
    lo = float(np.linalg.eigvalsh(0.5 * (rho + dag(rho))).min())
    if lo < psd_floor:
        raise ValueError(f"state has negative eigenvalue {lo:.3e}")
    return rho


@dataclass(eq=False)
class Trajectory:
    """Sampled solution of the master equation."""

    times: np.ndarray
    states: tuple

    def populations(self, basis: np.ndarray | None = None) -> np.ndarray:
        """Diagonal of each state, optionally in the given orthonormal basis.

        Returns an array of shape (len(times), dim).
        """
        out = []
        for rho in self.states:
            if basis is not None:
                rho = dag(basis) @ rho @ basis
            out.append(np.real(np.diag(rho)))
        return np.asarray(out)

    def matrix_element(self, mu: int, nu: int, basis: np.ndarray | None = None) -> np.ndarray:
        vals = []
        for rho in self.states:
            if basis is not None:
                rho = dag(basis) @ rho @ basis
            vals.append(rho[mu, nu])
        return np.asarray(vals)

    def expectation(self, observable: np.ndarray) -> np.ndarray:
        return np.asarray([complex(np.trace(observable @ rho)) for rho in self.states])


def _normalise_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("times must be a non-empty 1-d sequence")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if t[0] < 0:
        raise ValueError("times must be non-negative")
    if t[0] > 0:
        t = np.concatenate(([0.0], t))
    return t


def _check_and_renormalise(rho: np.ndarray, where: str) -> np.ndarray:
    rho = 0.5 * (rho + dag(rho))
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > TRACE_DRIFT_BOUND:
        raise RuntimeError(
            f"trace drifted to {tr!r} at {where}; integration accuracy lost"
        )
    return rho / tr


def evolve(gen: Generator, rho0: np.ndarray, times: Sequence[float]) -> Trajectory:
    """Propagate ``rho0`` under the generator, sampling at ``times``.

    Dense ``expm`` stepping for dimension <= 16; otherwise adaptive RK45 on
    the structured generator with absolute tolerance 1e-10 and per-sample
    trace renormalisation (drift beyond 1e-10 aborts).
    """
    rho0 = validate_density_matrix(rho0)
    t = _normalise_times(times)
    d = gen.dim
    states = [rho0]
    if d <= EXPM_DIMENSION_LIMIT:
        dense = gen.dense_adjoint
        vec = vectorize(rho0)
        propagators: dict[float, np.ndarray] = {}
        for k in range(1, len(t)):
            step = float(t[k] - t[k - 1])
            if step not in propagators:
                propagators[step] = expm(dense * step)
            vec = propagators[step] @ vec
            states.append(_check_and_renormalise(unvectorize(vec, d), f"t={t[k]}"))
            vec = vectorize(states[-1])
    else:
        def rhs(_t: float, y: np.ndarray) -> np.ndarray:
            return vectorize(apply_adjoint(gen, unvectorize(y, d)))

        sol = solve_ivp(
            rhs,
            (t[0], t[-1]),
            vectorize(rho0),
            t_eval=t,
            method="RK45",
            atol=1e-10,
            rtol=1e-10,
        )
        if not sol.success:
            raise RuntimeError(f"integration failed: {sol.message}")
        for k in range(1, len(t)):
            states.append(
                _check_and_renormalise(unvectorize(sol.y[:, k], d), f"t={t[k]}")
            )
    return Trajectory(times=t, states=tuple(states))


@dataclass(eq=False)
class StationaryResult:
    """Null space of the Schroedinger-picture generator.

    ``state`` is the unit-trace positive stationary state when the null
    space is one-dimensional (``ergodic``); otherwise ``basis`` holds an
    orthonormal operator basis of the stationary sector and ``state`` is
    None.
    """

    ergodic: bool
    state: np.ndarray | None
    basis: tuple


def stationary_state(gen: Generator, rank_tol: float = 1e-9) -> StationaryResult:
    """Stationary state(s) of the generator via a dense null-space solve."""
    dense = gen.dense_adjoint
    ns = null_space(dense, rcond=rank_tol)
    if ns.shape[1] == 0:
        # numerically empty null space: relax once before giving up
        ns = null_space(dense, rcond=1e-7)
    if ns.shape[1] == 0:
        raise RuntimeError("no stationary state found (empty numerical null space)")
    d = gen.dim
    ops = tuple(unvectorize(ns[:, k], d) for k in range(ns.shape[1]))
    if len(ops) > 1:
        return StationaryResult(ergodic=False, state=None, basis=ops)
    rho = ops[0]
    rho = 0.5 * (rho + dag(rho))
    tr = float(np.real(np.trace(rho)))
    if abs(tr) < 1e-12:
        raise RuntimeError("stationary null vector is traceless; cannot normalise")
    rho = rho / tr
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < -1e-10:
        raise RuntimeError(f"stationary candidate not positive (min eig {lo:.3e})")
    return StationaryResult(ergodic=True, state=rho, basis=(rho,))


@dataclass(eq=False)
class ClassicalKineticSystem:
    """Jump process on the population sector.

    ``rate_matrix`` is the column generator: ``K[b, a]`` is the jump rate
    a -> b for ``b != a`` and each diagonal entry is minus the total outflow,
    so columns sum to zero and ``dp/dt = K p``.
    """

    labels: tuple
    energies: np.ndarray
    rate_matrix: np.ndarray | sparse.spmatrix

    @property
    def size(self) -> int:
        return len(self.labels)

    def is_sparse(self) -> bool:
        return sparse.issparse(self.rate_matrix)

    def validate(self, tol: float = 1e-10) -> None:
        k = self.rate_matrix
        dense = k.toarray() if self.is_sparse() else np.asarray(k)
        off = dense - np.diag(np.diag(dense))
        if off.min() < -tol:
            raise ValueError(f"negative off-diagonal rate {off.min():.3e}")
        colsum = np.abs(dense.sum(axis=0)).max()
        if colsum > tol * max(1.0, np.abs(dense).max()):
            raise ValueError(f"columns do not sum to zero (max {colsum:.3e})")

    def evolve(self, p0: np.ndarray, times: Sequence[float]) -> np.ndarray:
        """Distribution trajectory, shape (len(times), size)."""
        p0 = np.asarray(p0, dtype=float)
        t = np.asarray(times, dtype=float)
        if self.is_sparse():
            out = [
                expm_multiply(self.rate_matrix * float(tk), p0) for tk in t
            ]
            return np.asarray(out)
        return np.asarray([expm(np.asarray(self.rate_matrix) * tk) @ p0 for tk in t])

    def stationary(self) -> np.ndarray:
        """Normalised stationary distribution (dense null-space solve)."""
        k = (
            self.rate_matrix.toarray()
            if self.is_sparse()
            else np.asarray(self.rate_matrix, dtype=float)
        )
        ns = null_space(k, rcond=1e-10)
        if ns.shape[1] != 1:
            raise RuntimeError(
                f"kinetic stationary distribution not unique (dim {ns.shape[1]})"
            )
        p = ns[:, 0]
        if p.sum() < 0:
            p = -p
        if p.min() < -1e-10:
            raise RuntimeError(f"stationary distribution not positive: {p.min():.3e}")
        return np.clip(p, 0.0, None) / p.sum()


def diagonal_restriction(
    gen: Generator, basis: np.ndarray | None = None
) -> ClassicalKineticSystem:
    """Population-sector rate matrix of the generator.

    The populations are taken along the eigenbasis of the spectral data (or
    any supplied orthonormal basis diagonalising the free Hamiltonian).  The
    jump rate a -> b sums ``gamma[i,j] <b|A_j|a><b|A_i|a>*`` over channels
    and coupling pairs, which is exactly the population block of the dense
    generator; cross terms between distinct channels never enter it.
    """
    v = gen.spec.basis if basis is None else np.asarray(basis, dtype=complex)
    d = gen.dim
    w = np.zeros((d, d))
    for ch in gen.channels:
        low = [dag(v) @ a @ v for a in ch.lowering]
        n = len(low)
        for i in range(n):
            for j in range(n):
                gm = ch.gamma_minus[i, j]
                gp = ch.gamma_plus[i, j]
                if gm != 0.0:
                    w += np.real(gm * low[j] * np.conj(low[i]))
                if gp != 0.0:
                    w += np.real(gp * dag(low[j]) * np.conj(dag(low[i])))
    np.fill_diagonal(w, 0.0)
    k = w.copy()
    k[np.diag_indices(d)] = -w.sum(axis=0)
    energies = np.real(np.diag(dag(v) @ _free_hamiltonian(gen.spec) @ v))
    cks = ClassicalKineticSystem(
        labels=tuple(range(d)), energies=energies, rate_matrix=k
    )
    cks.validate()
    return cks


def _free_hamiltonian(spec: SpectralData) -> np.ndarray:
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    for e, p in zip(spec.energies, spec.projectors):
        h += e * p
    return h


def detailed_balance_residual(
    cks: ClassicalKineticSystem, dist: np.ndarray
) -> float:
    """Largest detailed-balance violation of ``dist`` for the jump process.

    ``max over connected pairs |p_a W[a->b] - p_b W[b->a]|``.
    """
    k = (
        cks.rate_matrix.toarray()
        if cks.is_sparse()
        else np.asarray(cks.rate_matrix, dtype=float)
    )
    p = np.asarray(dist, dtype=float)
    flow = k * p[np.newaxis, :]  # flow[b, a] = W[a->b] p_a
    np.fill_diagonal(flow, 0.0)
    return float(np.abs(flow - flow.T).max())


def gibbs_state(beta: float, spec: SpectralData) -> np.ndarray:
    """Thermal state ``exp(-beta H) / Z`` from spectral data.

    Degenerate levels are weighted by projector rank; ``beta = inf`` gives
    the normalised ground-level projector.
    """
    en = spec.energies - spec.energies.min()
    if beta == math.inf:
        p0 = spec.projectors[0]
        return np.asarray(p0) / np.real(np.trace(p0))
    weights = np.exp(-beta * en)
    z = float(sum(w * spec.multiplicity(k) for k, w in enumerate(weights)))
    rho = sum(w * p for w, p in zip(weights, spec.projectors)) / z
    return np.asarray(rho, dtype=complex)


def gibbs_distribution(beta: float, energies: np.ndarray) -> np.ndarray:
    """Normalised Boltzmann weights over a list of configuration energies."""
    en = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (en - en.min()))
    return w / w.sum()


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of the difference of two states."""
    diff = np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)
    vals = np.linalg.eigvalsh(0.5 * (diff + dag(diff)))
    return 0.5 * float(np.abs(vals).sum())


def decay_fit(
    traj: Trajectory,
    mu: int,
    nu: int,
    basis: np.ndarray | None = None,
    floor: float = 1e-10,
) -> tuple[complex, float]:
    """Fit ``rho[mu, nu](t) = rho[mu, nu](0) exp(A t)`` by least squares.

    Works on the log of the matrix element restricted to the window where
    its magnitude stays above ``floor``.  Returns ``(A, residual)`` with the
    residual the rms log-domain misfit.  Raises if the initial magnitude is
    below 1e-8 (nothing to fit).
    """
    z = traj.matrix_element(mu, nu, basis=basis)
    if abs(z[0]) < 1e-8:
        raise ValueError(
            f"matrix element ({mu},{nu}) starts at {abs(z[0]):.3e}; too small to fit"
        )
    mask = np.abs(z) > floor
    # use the leading contiguous window
    end = len(z)
    for k, ok in enumerate(mask):
        if not ok:
            end = k
            break
    if end < 3:
        raise ValueError("fewer than 3 usable samples for the decay fit")
    t = traj.times[:end]
    logz = np.log(np.abs(z[:end])) + 1j * np.unwrap(np.angle(z[:end]))
    coeffs = np.polyfit(t, logz, 1)
    fit = np.polyval(coeffs, t)
    resid = float(np.sqrt(np.mean(np.abs(fit - logz) ** 2)))
    return complex(coeffs[0]), resid
