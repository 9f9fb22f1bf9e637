"""Wigner transforms over the delta-well model and the classical equilibrium ensemble.

Conventions (``Delta`` is the q spacing)::

    rho^W(q, p) = 1/(pi hbar) int d lam  (rho| |q+lam><q-lam|)  exp(2 i lam p / hbar)
    O^W(q, p)   =            int d lam  <q-lam/2| O |q+lam/2>   exp(i lam p / hbar)

Both integrals run over ``lam = j Delta`` (for ``O^W`` substitute
``lam = 2 mu``) so every sample lands on the q grid.  The momentum grid is
the discrete conjugate of that sum, ``p_n = n pi hbar / (N Delta)``, which
makes ``sum_n exp(2 i j Delta p_n / hbar) dp`` an exact discrete delta; the
phase-space integrals of ``rho^W`` and ``rho^W O^W`` then reduce exactly to
the position-space trace and ``Tr(rho O)`` on the grid.

The position kernel of a state is the pairing ``(rho| |q><q'|)``.  The
operator ``|q><q'|`` has no delta-diagonal energy component, so the
``block_dc`` part of a functional does not enter; for functionals coming
from density operators (see :func:`~pointerbasis.spectral_core.density_state`)
that block is the diagonal restriction of ``block_cc`` and nothing is lost.

Energy-diagonal observable blocks are continued past ``omega_max`` by the
affine function ``a + b x`` through their last two nodes (label-averaged).
That part is removed from the spectral sum and added back in closed form as
``a I + b H``, whose symbol is ``a + b (p^2/2 + V(q))``; the identity maps to
exactly 1 and the Hamiltonian to exactly ``p^2/2`` away from the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import liouvillian_apply
from .model_deltawell import PhysicalModel
from .spectral_core import ObservableFn, StateFn

__all__ = [
    "PhaseSpaceGrid",
    "make_phase_space_grid",
    "PositionKernel",
    "WignerDensity",
    "SymbolTable",
    "ClassicalEnsemble",
    "ResolutionError",
    "position_kernel",
    "observable_kernel",
    "completion_tail",
    "wigner_state",
    "wigner_observable",
    "phase_space_pairing",
    "poisson_bracket",
    "resolved_mask",
    "moyal_vs_poisson_residual",
    "product_observable",
    "product_correspondence_residual",
    "loglog_slope",
    "classical_equilibrium_density",
    "classical_moments",
    "export_density_csv",
]

KERNEL_DECAY_TOL = 1e-8


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """Uniform q grid on ``[-L, L]`` and its conjugate momentum grid."""

    L: float
    n_q: int
    hbar: float
    n_p: int | None = None
    q_cut_cells: float = 2.0
    edge_fraction: float = 0.25

    def __post_init__(self):
        if self.n_q < 16 or (self.n_p is not None and self.n_p < 16):
            raise ValueError("need at least 16 points per axis")
        if not (self.L > 0 and self.hbar > 0):
            raise ValueError("L and hbar must be positive")
        if self.n_p is None:
            object.__setattr__(self, "n_p", int(self.n_q))

    @property
    def q_nodes(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_q)

    @property
    def dq(self) -> float:
        return 2.0 * self.L / (self.n_q - 1)

    @property
    def dp(self) -> float:
        return np.pi * self.hbar / (self.n_p * self.dq)

    @property
    def p_nodes(self) -> np.ndarray:
        n = np.arange(self.n_p) - self.n_p // 2
        return n * self.dp

    @property
    def P(self) -> float:
        return 0.5 * self.n_p * self.dp

    @property
    def lam_max_index(self) -> int:
        """Largest ``j`` in ``lam = j Delta``; keeps ``|j| <= (n_p - 1) / 2``."""
        return min((self.n_p - 1) // 2, self.n_q - 1)

    @property
    def lam_half_range(self) -> float:
        return self.lam_max_index * self.dq

    def outside_window(self) -> np.ndarray:
        """Boolean mask over q excluding ``|q| < q_cut`` and the outer ``edge_fraction * L``.

        Near the box edge the lambda sum of an observable symbol runs off the grid.
        """
        aq = np.abs(self.q_nodes)
        return (aq >= self.q_cut_cells * self.dq) & (aq <= (1.0 - self.edge_fraction) * self.L)


def make_phase_space_grid(L: float, n_q: int, hbar: float = 1.0, n_p: int | None = None,
                          q_cut_cells: float = 2.0, edge_fraction: float = 0.25) -> PhaseSpaceGrid:
    return PhaseSpaceGrid(float(L), int(n_q), float(hbar), None if n_p is None else int(n_p),
                          float(q_cut_cells), float(edge_fraction))


@dataclass(frozen=True, eq=False)
class PositionKernel:
    K: np.ndarray
    grid: PhaseSpaceGrid
    source: str = "rho"

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.K - self.K.conj().T).max())

    def trace(self) -> complex:
        return complex(np.trace(self.K) * self.grid.dq)


@dataclass(frozen=True, eq=False)
class WignerDensity:
    W: np.ndarray
    grid: PhaseSpaceGrid
    imag_residue: float = 0.0

    @property
    def normalization(self) -> float:
        return float(self.W.sum() * self.grid.dq * self.grid.dp)


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """Phase-space function table ``O^W(q_i, p_n)``."""

    values: np.ndarray
    grid: PhaseSpaceGrid
    imag_residue: float = 0.0


def _basis_table(model: PhysicalModel, spectrum, grid: PhaseSpaceGrid):
    """Weighted eigenfunction table ``(n_q, M + K M)``: bound columns then continuum."""
    k_max = model.wavenumber(spectrum.omega_max)
    if k_max * grid.dq > np.pi / 2:
        raise ResolutionError(
            f"omega_max={spectrum.omega_max:g} needs dq <= {np.pi / 2 / k_max:.4g} "
            f"(have {grid.dq:.4g}); refine the q grid or lower omega_max")
    if not np.isclose(spectrum.omega0, model.omega0, rtol=1e-12, atol=0):
        raise ValueError(f"spectrum bound energy {spectrum.omega0} != model {model.omega0}")
    q = grid.q_nodes
    bound = model.bound_functions(q)
    cont = model.continuum_functions(spectrum.continuum_nodes, q) * spectrum.quad_weights[None, :, None]
    return np.concatenate([bound, cont.reshape(q.size, -1)], axis=1)


def _big_matrix(X, include_diagonal: bool = False, tail=(0.0, 0.0)) -> np.ndarray:
    """Assemble the ``(M + K M)`` square coefficient matrix of a five-block object."""
    K, M = X.grid.size, X.qnums.size
    a, b = tail
    n = M + K * M
    big = np.zeros((n, n), dtype=complex)
    eye = np.eye(M)
    big[:M, :M] = X.block_d0 - (a + b * X.grid.omega0) * eye
    big[M:, :M] = X.block_c0.reshape(K * M, M)
    big[:M, M:] = X.block_0c.transpose(1, 0, 2).reshape(M, K * M)
    big[M:, M:] = X.block_cc.transpose(0, 2, 1, 3).reshape(K * M, K * M)
    if include_diagonal:
        # delta-diagonal part: int d omega X(omega) |omega><omega| carries one weight; the
        # table already multiplies both sides by w, so divide one back out
        w = X.grid.quad_weights
        x = X.grid.continuum_nodes
        for k in range(K):
            sl = slice(M + k * M, M + (k + 1) * M)
            big[sl, sl] += (X.block_dc[k] - (a + b * x[k]) * eye) / w[k]
    return big


def position_kernel(rho: StateFn, model: PhysicalModel, grid: PhaseSpaceGrid) -> PositionKernel:
    """``K(q, q') = (rho| |q><q'|) = <q'|rho|q>`` on the q grid."""
    B = _basis_table(model, rho.grid, grid)
    if np.abs(rho.block_d0[1, :]).max() > 0 or np.abs(rho.block_d0[:, 1]).max() > 0:
        raise ValueError("state has weight on the non-existent odd bound level")
    big = _big_matrix(rho)
    return PositionKernel(B @ big @ B.T, grid)


def completion_tail(O: ObservableFn) -> tuple[float, float]:
    """``(a, b)`` of the affine continuation ``a + b x`` through the last two nodes."""
    x = O.grid.continuum_nodes
    M = O.qnums.size
    if x.size < 2:
        return float(np.trace(O.block_dc[-1]).real / M), 0.0
    c1 = np.trace(O.block_dc[-1]).real / M
    c2 = np.trace(O.block_dc[-2]).real / M
    b = (c1 - c2) / (x[-1] - x[-2])
    return float(c1 - b * x[-1]), float(b)


def observable_kernel(O: ObservableFn, model: PhysicalModel, grid: PhaseSpaceGrid):
    """``<q|O|q'>`` without the completion tail, and the tail ``(a, b)``."""
    B = _basis_table(model, O.grid, grid)
    tail = completion_tail(O)
    return B @ _big_matrix(O, include_diagonal=True, tail=tail) @ B.T, tail


def _lambda_samples(K: np.ndarray, grid: PhaseSpaceGrid, sign: int) -> np.ndarray:
    """``a[i, j] = K(q_{i + s j}, q_{i - s j})`` for ``|j| <= J``, zero off the grid."""
    n = grid.n_q
    J = grid.lam_max_index
    j = np.arange(-J, J + 1)
    i = np.arange(n)[:, None]
    a_idx = i + sign * j[None, :]
    b_idx = i - sign * j[None, :]
    ok = (a_idx >= 0) & (a_idx < n) & (b_idx >= 0) & (b_idx < n)
    out = np.zeros((n, j.size), dtype=complex)
    out[ok] = K[a_idx[ok], b_idx[ok]]
    return out, j


def _fourier(samples: np.ndarray, j: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """``sum_j samples[:, j] exp(2 i j Delta p_n / hbar)`` for every grid momentum."""
    N = grid.n_p
    n = np.arange(N) - N // 2
    phase = np.exp(2j * np.pi * np.outer(j, n) / N)
    return samples @ phase


def _check_decay(K: np.ndarray, what: str):
    scale = np.abs(K).max()
    edge = max(np.abs(K[0, :]).max(), np.abs(K[-1, :]).max(), np.abs(K[:, 0]).max(), np.abs(K[:, -1]).max())
    if scale > 0 and edge > KERNEL_DECAY_TOL * scale:
        raise ResolutionError(
            f"{what} kernel is {edge / scale:.2e} of its peak at the q boundary "
            f"(needs < {KERNEL_DECAY_TOL:g}); enlarge L")


def wigner_state(K: PositionKernel, grid: PhaseSpaceGrid | None = None, check_decay: bool = True) -> WignerDensity:
    grid = K.grid if grid is None else grid
    if check_decay:
        _check_decay(K.K, "state")
    samples, j = _lambda_samples(K.K, grid, +1)
    W = _fourier(samples, j, grid) * grid.dq / (np.pi * grid.hbar)
    return WignerDensity(W.real, grid, float(np.abs(W.imag).max()))


def wigner_observable(O: ObservableFn, model: PhysicalModel, grid: PhaseSpaceGrid) -> SymbolTable:
    KO, (a, b) = observable_kernel(O, model, grid)
    samples, j = _lambda_samples(KO, grid, -1)
    S = 2.0 * grid.dq * _fourier(samples, j, grid)
    if b != 0.0:
        S = S + b * (0.5 * grid.p_nodes[None, :] ** 2 + model.potential_symbol(grid.q_nodes, grid.dq)[:, None])
    S = S + a
    imag = float(np.abs(S.imag).max())
    return SymbolTable(S.real if O.is_self_adjoint() else S, grid, imag)


def phase_space_pairing(W: WignerDensity, OW) -> float:
    values = OW.values if isinstance(OW, SymbolTable) else np.asarray(OW)
    if isinstance(OW, SymbolTable) and OW.grid is not W.grid and (
            OW.grid.n_q != W.grid.n_q or OW.grid.n_p != W.grid.n_p or OW.grid.dq != W.grid.dq
            or OW.grid.hbar != W.grid.hbar):
        raise ValueError("phase-space grids do not match")
    if values.shape != W.W.shape:
        raise ValueError(f"symbol table shape {values.shape} != density shape {W.W.shape}")
    return float(np.real(np.sum(W.W * values)) * W.grid.dq * W.grid.dp)


# -- classical-limit residuals --------------------------------------------------

def poisson_bracket(A: np.ndarray, B: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """``{A, B} = dA/dq dB/dp - dA/dp dB/dq`` by centered differences (edges one-sided)."""
    dAq, dAp = np.gradient(A, grid.dq, grid.dp)
    dBq, dBp = np.gradient(B, grid.dq, grid.dp)
    return dAq * dBp - dAp * dBq


def resolved_mask(grid: PhaseSpaceGrid, omega_max: float | None = None) -> np.ndarray:
    """``(n_q, n_p)`` mask: outside the origin window and, if given, ``|p| <= sqrt(2 omega_max)``.

    Momenta above ``sqrt(2 omega_max)`` are not represented by the truncated
    spectrum, so symbols there carry no information.
    """
    mask = np.broadcast_to(grid.outside_window()[:, None], (grid.n_q, grid.n_p))
    if omega_max is not None:
        mask = mask & (np.abs(grid.p_nodes)[None, :] <= np.sqrt(2.0 * omega_max))
    return mask


def _masked_norm(X: np.ndarray, grid: PhaseSpaceGrid, omega_max: float | None = None) -> float:
    mask = resolved_mask(grid, omega_max)
    return float(np.sqrt(np.sum(np.abs(X[mask]) ** 2) * grid.dq * grid.dp))


def moyal_vs_poisson_residual(rho: StateFn, model: PhysicalModel, grid: PhaseSpaceGrid,
                              H: ObservableFn | None = None) -> float:
    """Grid L2 norm of ``{H^W, rho^W} - [d rho / dt]^W`` over :func:`resolved_mask`.

    ``[d rho/dt]^W`` is the Wigner transform of :func:`liouvillian_apply`
    (energies in units with unit time step) divided by ``hbar``; both sides
    estimate ``d rho^W / dt``, the Liouvillian ``L rho^W`` up to the factor ``i``.
    """
    from .spectral_core import hamiltonian_observable
    H = hamiltonian_observable(rho.grid, rho.qnums) if H is None else H
    W = wigner_state(position_kernel(rho, model, grid))
    HW = wigner_observable(H, model, grid)
    classical = poisson_bracket(HW.values, W.W, grid)
    dW = wigner_state(position_kernel(liouvillian_apply(rho), model, grid), check_decay=False)
    quantum = dW.W / grid.hbar
    return _masked_norm(classical - quantum, grid, rho.grid.omega_max)


def product_observable(O1: ObservableFn, O2: ObservableFn) -> ObservableFn:
    if not (O1.is_energy_diagonal() and O2.is_energy_diagonal()):
        raise ValueError("products are only formed for energy-diagonal observables")
    return ObservableFn(O1.grid, O1.qnums, block_d0=O1.block_d0 @ O2.block_d0,
                        block_dc=O1.block_dc @ O2.block_dc)


def product_correspondence_residual(O1: ObservableFn, O2: ObservableFn, model: PhysicalModel,
                                    grid: PhaseSpaceGrid) -> float:
    """``||(O1 O2)^W - O1^W O2^W||`` over :func:`resolved_mask`."""
    prod = wigner_observable(product_observable(O1, O2), model, grid).values
    a = wigner_observable(O1, model, grid).values
    b = wigner_observable(O2, model, grid).values
    return _masked_norm(prod - a * b, grid, O1.grid.omega_max)


def loglog_slope(hbars, residuals) -> float:
    """Least-squares slope of ``log(residual)`` against ``log(hbar)``."""
    x = np.log(np.asarray(hbars, dtype=float))
    y = np.log(np.asarray(residuals, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# -- classical equilibrium ensemble ---------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassicalEnsemble:
    """Weighted particles on the level sets ``H^W = x``, ``P_i^W = r_i``.

    Particle ``j`` stands for ``weight_j * delta(H^W - x_j) prod_i delta(P_i^W - r_{j,i})``.
    The density depends on phase space only through the values of ``H^W`` and
    ``P_i^W``; evaluating it needs only those values.
    """

    weights: np.ndarray
    energies: np.ndarray
    labels: np.ndarray
    sectors: tuple = field(default=())

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise ValueError("ensemble weights must be non-negative")

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def density(self, h_values, p_values, width: float) -> np.ndarray:
        """Gaussian-mollified rendering of the ensemble as a function of symbol values.

        ``h_values`` holds ``H^W`` samples; ``p_values`` holds the matching
        ``P_i^W`` samples with the label axis last (it may be dropped when
        there is a single label axis).  For display only: moments are exact for
        the particles, not for this rendering.
        """
        h = np.asarray(h_values, dtype=float)
        p = np.asarray(p_values, dtype=float)
        if p.shape == h.shape:
            p = p[..., None]
        if p.shape[:-1] != h.shape or p.shape[-1] != self.labels.shape[1]:
            raise ValueError("p_values must match h_values with one trailing entry per label axis")
        norm = 1.0 / (np.sqrt(2.0 * np.pi) * width)
        gh = np.exp(-0.5 * ((h[..., None] - self.energies) / width) ** 2)
        gp = np.exp(-0.5 * (((p[..., None, :] - self.labels) / width) ** 2).sum(axis=-1))
        dim = 1 + self.labels.shape[1]
        return norm ** dim * (gh * gp) @ self.weights


def classical_equilibrium_density(rho_star_pointer: StateFn, U=None, model: PhysicalModel | None = None,
                                  drop_zero: bool = True) -> ClassicalEnsemble:
    """One particle per (bound level or node, pointer label) with weight ``rho_r(x) w``.

    ``rho_star_pointer`` must be energy-diagonal and diagonal in the pointer basis.
    """
    from .pointer import DIAGONAL_TOL, max_offdiagonal
    rho = rho_star_pointer
    if not rho.is_energy_diagonal() or max_offdiagonal(rho) > DIAGONAL_TOL:
        raise ValueError("classical_equilibrium_density needs a pointer-diagonal equilibrium state")
    grid, qn = rho.grid, rho.qnums
    labels = np.array(qn.labels, dtype=float)
    d0 = np.diagonal(rho.block_d0).real
    dc = np.diagonal(rho.block_dc, axis1=1, axis2=2).real * grid.quad_weights[:, None]
    weights = np.concatenate([d0, dc.ravel()])
    energies = np.concatenate([np.full(qn.size, grid.omega0), np.repeat(grid.continuum_nodes, qn.size)])
    labs = np.concatenate([labels, np.tile(labels, (grid.size, 1))])
    sectors = tuple(["bound"] * qn.size + [int(k) for k in np.repeat(np.arange(grid.size), qn.size)])
    if np.any(weights < -1e-12):
        raise ValueError(f"negative pointer population {weights.min():.3g}")
    weights = np.clip(weights, 0.0, None)
    if drop_zero:
        keep = weights > 0
        weights, energies, labs = weights[keep], energies[keep], labs[keep]
        sectors = tuple(s for s, k in zip(sectors, keep) if k)
    return ClassicalEnsemble(weights, energies, labs, sectors)


def classical_moments(ens: ClassicalEnsemble, which="H", n: int = 1):
    """Per-particle and aggregate moments of ``H^W`` (``which="H"``) or ``P_i^W`` (``which=i``).

    On the level set of particle ``j`` the observable is constant, so its
    ``n``-th moment against the unit-mass density is the value to the ``n``.
    """
    values = ens.energies if which == "H" else ens.labels[:, int(which)]
    per = values ** n
    return per, float(np.sum(ens.weights * per))


def export_density_csv(path, W: WignerDensity):
    """Write ``W`` as CSV: header row of p values, then one row per q starting with q."""
    grid = W.grid
    with open(path, "w") as fh:
        fh.write("q\\p," + ",".join(f"{p:.10g}" for p in grid.p_nodes) + "\n")
        for q, row in zip(grid.q_nodes, W.W):
            fh.write(f"{q:.10g}," + ",".join(f"{v:.12g}" for v in row) + "\n")
