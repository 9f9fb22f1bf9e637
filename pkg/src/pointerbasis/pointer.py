"""Final pointer basis: diagonalizing the energy-diagonal blocks of a state.

The unitary family ``U(x)`` (``x`` the bound level or a continuum node)
diagonalizes the stored state coefficients: a state block at energies
``(x, x')`` becomes ``U(x)^dagger rho(x, x') U(x')``.  Observables take the
inverse (transposed) conjugation ``U(x)^T O(x, x') conj(U(x'))`` so that the
bilinear pairing ``(rho|O) = sum rho O`` is unchanged.  Since state
coefficients are complex conjugates of density-matrix elements, the pointer
vectors in Hilbert space are the columns of ``conj(U(x))``.

Eigenvector ordering is fixed once at the first continuum node (descending
eigenvalues) and carried to the other nodes by maximal overlap with the
previous node.  Each eigenvector's largest-magnitude component is made real
and positive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral_core import (
    ObservableFn,
    QuantumNumbers,
    StateFn,
    cobasis_state,
    diagonal_power,
    dual_pairing,
)

__all__ = [
    "TrackingError",
    "PointerTransform",
    "diagonalize_blocks",
    "transform_state",
    "transform_observable",
    "pointer_observables",
    "moment_check",
    "moment_table",
    "commutator_expectation",
    "identity_transform",
    "max_offdiagonal",
    "pointer_state",
    "inverse",
]

TRACKING_THRESHOLD = 0.5
DEGENERACY_RTOL = 1e-10
DIAGONAL_TOL = 1e-12


class TrackingError(RuntimeError):
    def __init__(self, node: int, overlap: float):
        self.node = node
        self.overlap = overlap
        super().__init__(
            f"eigenvector tracking failed at continuum node {node}: overlap {overlap:.3f} "
            f"< {TRACKING_THRESHOLD} (grid under-resolved or level crossing)"
        )


@dataclass(frozen=True, eq=False)
class PointerTransform:
    U0: np.ndarray
    Uc: np.ndarray
    eigvals0: np.ndarray
    eigvalsc: np.ndarray
    min_overlap: float
    grid: object = None
    qnums: QuantumNumbers | None = None

    def unitarity_defect(self) -> float:
        M = self.U0.shape[0]
        eye = np.eye(M)
        d0 = np.abs(self.U0.conj().T @ self.U0 - eye).max()
        dc = np.abs(np.einsum("kmi,kmj->kij", self.Uc.conj(), self.Uc) - eye).max(initial=0.0)
        return float(max(d0, dc))

    def is_identity(self, atol: float = 0.0) -> bool:
        M = self.U0.shape[0]
        return bool(np.allclose(self.U0, np.eye(M), rtol=0, atol=atol)
                    and np.allclose(self.Uc, np.eye(M), rtol=0, atol=atol))


def identity_transform(rho_or_grid, qnums: QuantumNumbers | None = None) -> PointerTransform:
    if qnums is None:
        grid, qnums = rho_or_grid.grid, rho_or_grid.qnums
    else:
        grid = rho_or_grid
    M, K = qnums.size, grid.size
    eye = np.eye(M, dtype=complex)
    return PointerTransform(eye, np.broadcast_to(eye, (K, M, M)).copy(),
                            np.zeros(M), np.zeros((K, M)), 1.0, grid, qnums)


def _fix_phases(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V) - 1e-12 * np.arange(V.shape[0])[:, None], axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(lead) / lead)[None, :]


def _resolve_degenerate(A: np.ndarray, vals: np.ndarray, V: np.ndarray, secondary=None) -> np.ndarray:
    """Make eigenvectors deterministic inside clusters of (near-)equal eigenvalues."""
    scale = max(np.abs(vals).max(), 1e-300)
    M = len(vals)
    start = 0
    V = V.copy()
    while start < M:
        stop = start + 1
        while stop < M and abs(vals[stop] - vals[start]) <= DEGENERACY_RTOL * scale:
            stop += 1
        if stop - start > 1:
            S = V[:, start:stop]
            if secondary is not None:
                B = S.conj().T @ secondary @ S
                bv, bw = np.linalg.eigh(0.5 * (B + B.conj().T))
                S = S @ bw[:, ::-1]
            else:
                # project the standard basis onto the cluster, Gram-Schmidt in index order
                P = S @ S.conj().T
                cols = []
                for i in range(M):
                    v = P[:, i].copy()
                    for c in cols:
                        v -= c * (c.conj() @ v)
                    nv = np.linalg.norm(v)
                    if nv > 1e-8:
                        cols.append(v / nv)
                    if len(cols) == stop - start:
                        break
                S = np.stack(cols, axis=1)
            V[:, start:stop] = S
        start = stop
    return V


def _eigh_desc(A: np.ndarray, secondary=None):
    vals, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    vals, V = vals[::-1], V[:, ::-1]
    V = _resolve_degenerate(A, vals, V, secondary)
    return vals, _fix_phases(V)


def diagonalize_blocks(rho: StateFn, secondary: np.ndarray | None = None) -> PointerTransform:
    """Hermitian eigendecomposition of ``rho(omega0)`` and every ``rho(omega_k)``.

    ``secondary`` is an optional Hermitian ``(M, M)`` matrix used to split
    degenerate eigenvalue clusters.
    """
    vals0, U0 = _eigh_desc(rho.block_d0, secondary)
    K, M = rho.grid.size, rho.qnums.size
    Uc = np.empty((K, M, M), dtype=complex)
    valsc = np.empty((K, M))
    min_overlap = 1.0
    for k in range(K):
        vals, V = _eigh_desc(rho.block_dc[k], secondary)
        if k > 0:
            overlap = np.abs(Uc[k - 1].conj().T @ V)       # (previous, current)
            order = np.full(M, -1)
            free = np.ones(M, dtype=bool)
            # greedy assignment on the overlap matrix, strongest pairs first
            for flat in np.argsort(-overlap, axis=None, kind="stable"):
                i, j = divmod(int(flat), M)
                if order[i] < 0 and free[j]:
                    order[i] = j
                    free[j] = False
            vals, V = vals[order], V[:, order]
            ov = overlap[np.arange(M), order].min()
            min_overlap = min(min_overlap, float(ov))
            if ov < TRACKING_THRESHOLD:
                raise TrackingError(k, float(ov))
        Uc[k] = V
        valsc[k] = vals
    return PointerTransform(U0, Uc, vals0, valsc, min_overlap, rho.grid, rho.qnums)


def _conjugate(X, U0: np.ndarray, Uc: np.ndarray):
    """Blockwise ``U(x)^dagger X(x, x') U(x')``."""
    if U0.shape[0] != X.qnums.size or Uc.shape[0] != X.grid.size:
        raise ValueError("transform shape does not match the grid/labels")
    return type(X)(
        X.grid, X.qnums,
        block_d0=U0.conj().T @ X.block_d0 @ U0,
        block_dc=np.einsum("kmi,kmn,knj->kij", Uc.conj(), X.block_dc, Uc),
        block_c0=np.einsum("kmi,kmn,nj->kij", Uc.conj(), X.block_c0, U0),
        block_0c=np.einsum("mi,kmn,knj->kij", U0.conj(), X.block_0c, Uc),
        block_cc=np.einsum("kmi,klmn,lnj->klij", Uc.conj(), X.block_cc, Uc),
    )


def transform_state(rho: StateFn, U: PointerTransform) -> StateFn:
    """Components of ``rho`` in the pointer basis."""
    return _conjugate(rho, U.U0, U.Uc)


def transform_observable(O: ObservableFn, U: PointerTransform) -> ObservableFn:
    """Components of ``O`` in the pointer basis: ``U(x)^T O(x, x') conj(U(x'))``."""
    return _conjugate(O, U.U0.conj(), U.Uc.conj())


def inverse(U: PointerTransform) -> PointerTransform:
    return PointerTransform(U.U0.conj().T, U.Uc.conj().transpose(0, 2, 1),
                            U.eigvals0, U.eigvalsc, U.min_overlap, U.grid, U.qnums)


def pointer_observables(U: PointerTransform, qnums: QuantumNumbers | None = None) -> list:
    """Exact pointer observables ``P_i`` expressed in the original basis.

    ``P_i`` has eigenvalue ``r_i`` on the pointer vector with label ``r``
    (pointer vectors take the labels in ``qnums`` order).
    """
    qnums = U.qnums if qnums is None else qnums
    grid = U.grid
    if grid is None or qnums is None:
        raise ValueError("transform carries no grid; build it with diagonalize_blocks")
    K, M = grid.size, qnums.size
    out = []
    for axis in range(qnums.n_axes):
        d = np.diag(qnums.values(axis)).astype(complex)
        P_ptr = ObservableFn(grid, qnums, block_d0=d, block_dc=np.broadcast_to(d, (K, M, M)))
        out.append(transform_observable(P_ptr, inverse(U)))
    return out


def max_offdiagonal(X) -> float:
    """Largest off-diagonal magnitude in the energy-diagonal blocks."""
    M = X.qnums.size
    mask = ~np.eye(M, dtype=bool)
    return float(max(np.abs(X.block_d0[mask]).max(initial=0.0),
                     np.abs(X.block_dc[:, mask]).max(initial=0.0)))


def moment_check(sector, r: int, O: ObservableFn, n: int) -> float:
    """``(x, rr| O^n)`` for an energy-diagonal ``O`` given in the pointer basis.

    ``sector`` is ``"bound"`` or a continuum node index.
    """
    if not O.is_energy_diagonal():
        raise ValueError("moment_check needs an energy-diagonal observable")
    functional = cobasis_state(O.grid, O.qnums, sector, r)
    return dual_pairing(functional, diagonal_power(O, n)).real


def moment_table(O: ObservableFn, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All moments ``(x, rr| O^n)`` at once: ``(bound (M,), continuum (K, M))``.

    Same values as :func:`moment_check` over every sector and label; the
    co-basis functional picks the diagonal entry of the power, weights cancel.
    """
    if not O.is_energy_diagonal():
        raise ValueError("moment_table needs an energy-diagonal observable")
    P = diagonal_power(O, n)
    return np.diagonal(P.block_d0).real.copy(), np.diagonal(P.block_dc, axis1=1, axis2=2).real.copy()


def commutator_expectation(rho_star: StateFn, P: ObservableFn, O: ObservableFn) -> complex:
    """``(rho_*|[P, O])`` for a pointer-diagonal ``rho_*`` and diagonal ``P``.

    All three arguments are in the pointer basis.  On a block at energies
    ``(x, x')`` the commutator multiplies ``O_{rr'}`` by ``p_r(x) - p_{r'}(x')``.
    """
    if not rho_star.is_energy_diagonal() or max_offdiagonal(rho_star) > DIAGONAL_TOL:
        raise ValueError("rho_star must be energy-diagonal and diagonal in the pointer basis")
    if not P.is_energy_diagonal() or max_offdiagonal(P) > DIAGONAL_TOL:
        raise ValueError("P must be diagonal in the pointer basis")
    p0 = np.diagonal(P.block_d0)
    pc = np.diagonal(P.block_dc, axis1=1, axis2=2)
    comm = ObservableFn(
        O.grid, O.qnums,
        block_d0=(p0[:, None] - p0[None, :]) * O.block_d0,
        block_dc=(pc[:, :, None] - pc[:, None, :]) * O.block_dc,
        block_c0=(pc[:, :, None] - p0[None, None, :]) * O.block_c0,
        block_0c=(p0[None, :, None] - pc[:, None, :]) * O.block_0c,
        block_cc=(pc[:, None, :, None] - pc[None, :, None, :]) * O.block_cc,
    )
    return dual_pairing(rho_star, comm)


def pointer_state(U: PointerTransform) -> StateFn:
    """Diagonal equilibrium state ``sum_r rho_r(x) (x, rr|`` in the pointer basis."""
    K, M = U.grid.size, U.qnums.size
    dc = np.zeros((K, M, M), dtype=complex)
    dc[:, np.arange(M), np.arange(M)] = U.eigvalsc
    return StateFn(U.grid, U.qnums, block_d0=np.diag(U.eigvals0), block_dc=dc)
