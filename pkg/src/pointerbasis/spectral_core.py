"""Spectral discretization, five-block observables/states and the dual pairing.

A Hamiltonian with a single bound level ``omega0 < 0`` and a continuum
``0 <= omega < omega_max`` (truncated) is discretized with a composite
Gauss-Legendre rule.  Operators and state functionals are stored as node
samples of their five component blocks:

=========  =======================  ===================
field      component                shape
=========  =======================  ===================
block_d0   X(omega0)                (M, M)
block_dc   X(omega_k)               (K, M, M)
block_c0   X(omega_k, omega0)       (K, M, M)
block_0c   X(omega0, omega_k)       (K, M, M)
block_cc   X(omega_k, omega_l)      (K, K, M, M)
=========  =======================  ===================

where ``M`` is the number of discrete labels and ``K`` the number of
continuum nodes.  A state is stored through the coefficients of its
co-basis expansion, so the pairing ``(rho|O)`` is the bilinear sum
``sum rho * O`` over all blocks, with continuum integrals replaced by
quadrature weights.  For a density operator these coefficients are
``rho(x, x')_{mm'} = <x', m'| rho |x, m>`` (see :func:`density_state`).

A functional concentrated at node ``k`` carries weight ``1 / w_k`` so that a
discrete integral reproduces ``delta(omega - eta)``; see :func:`cobasis_state`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SpectrumGrid",
    "QuantumNumbers",
    "ObservableFn",
    "StateFn",
    "ValidationReport",
    "make_spectrum_grid",
    "identity_observable",
    "hamiltonian_observable",
    "label_observable",
    "dual_pairing",
    "validate_state",
    "diagonal_power",
    "symmetrize",
    "adjoint",
    "cobasis_state",
    "gaussian_profile",
    "poly_exp_profile",
    "density_state",
    "diagonal_state",
    "tail_mass",
    "InvalidStateError",
    "require_valid",
    "HERMITICITY_TOL",
    "NEGATIVITY_TOL",
    "NORMALIZATION_TOL",
]

HERMITICITY_TOL = 1e-12
NEGATIVITY_TOL = -1e-12
NORMALIZATION_TOL = 1e-10

BLOCKS = ("block_d0", "block_dc", "block_c0", "block_0c", "block_cc")
OFF_DIAGONAL_BLOCKS = ("block_c0", "block_0c", "block_cc")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    """Bound energy plus composite Gauss-Legendre nodes on ``[0, omega_max]``."""

    omega0: float
    continuum_nodes: np.ndarray
    quad_weights: np.ndarray
    omega_max: float
    panels: np.ndarray
    panel_order: int

    def __post_init__(self):
        for name in ("continuum_nodes", "quad_weights", "panels"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not self.omega0 < 0:
            raise ValueError(f"bound energy must be negative, got {self.omega0}")
        nodes = self.continuum_nodes
        if nodes.size == 0 or nodes[0] <= 0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("continuum nodes must be positive and strictly increasing")
        if np.any(self.quad_weights <= 0) or self.quad_weights.shape != nodes.shape:
            raise ValueError("quadrature weights must be positive, one per node")

    @property
    def size(self) -> int:
        return self.continuum_nodes.size

    @property
    def n_panels(self) -> int:
        return self.panels.size - 1

    def panel_slices(self):
        """Yield ``(a, b, slice)`` for each panel."""
        p = self.panel_order
        for i in range(self.n_panels):
            yield self.panels[i], self.panels[i + 1], slice(i * p, (i + 1) * p)

    def max_spacing(self) -> float:
        """Largest gap between adjacent nodes inside any panel."""
        p = self.panel_order
        gaps = np.diff(self.continuum_nodes.reshape(self.n_panels, p), axis=1)
        return float(gaps.max()) if gaps.size else float(self.panels[1] - self.panels[0])

    def integrate(self, values: np.ndarray) -> complex:
        return np.tensordot(self.quad_weights, values, axes=(0, 0))

    def same_as(self, other: "SpectrumGrid") -> bool:
        return self is other or (
            self.omega0 == other.omega0
            and self.panel_order == other.panel_order
            and np.array_equal(self.continuum_nodes, other.continuum_nodes)
            and np.array_equal(self.quad_weights, other.quad_weights)
        )


def make_spectrum_grid(omega0, omega_max, n_panels, panel_order) -> SpectrumGrid:
    """Composite Gauss-Legendre grid with equal panels on ``[0, omega_max]``.

    Examples
    --------
    >>> g = make_spectrum_grid(-0.5, 10.0, 1, 2)
    >>> np.round(g.continuum_nodes, 6)
    array([2.113249, 7.886751])
    """
    vals = np.array([omega0, omega_max], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("grid parameters must be finite")
    if omega0 >= 0:
        raise ValueError(f"bound energy must be negative, got {omega0}")
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    if int(n_panels) < 1 or int(panel_order) < 2:
        raise ValueError("need n_panels >= 1 and panel_order >= 2")
    n_panels, panel_order = int(n_panels), int(panel_order)
    x, w = np.polynomial.legendre.leggauss(panel_order)
    edges = np.linspace(0.0, float(omega_max), n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return SpectrumGrid(float(omega0), nodes, weights, float(omega_max), edges, panel_order)


@dataclass(frozen=True, eq=False)
class QuantumNumbers:
    """Ordered multi-index labels ``m = (m_1, ..., m_N)`` shared by all sectors."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(tuple(float(v) if not float(v).is_integer() else int(v) for v in np.atleast_1d(lab))
                       for lab in self.labels)
        if not labels:
            raise ValueError("need at least one label")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        if len({len(lab) for lab in labels}) != 1:
            raise ValueError("all labels must have the same number of components")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_values(cls, values: Sequence) -> "QuantumNumbers":
        return cls(tuple(values))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def n_axes(self) -> int:
        return len(self.labels[0])

    @property
    def cardinalities(self) -> tuple:
        return tuple(len({lab[i] for lab in self.labels}) for i in range(self.n_axes))

    def values(self, axis: int) -> np.ndarray:
        return np.array([lab[axis] for lab in self.labels], dtype=float)


class _FiveBlock:
    """Shared storage and algebra for observables and states."""

    def __init__(self, grid: SpectrumGrid, qnums: QuantumNumbers, block_d0=None, block_dc=None,
                 block_c0=None, block_0c=None, block_cc=None):
        K, M = grid.size, qnums.size
        shapes = {
            "block_d0": (M, M),
            "block_dc": (K, M, M),
            "block_c0": (K, M, M),
            "block_0c": (K, M, M),
            "block_cc": (K, K, M, M),
        }
        given = dict(block_d0=block_d0, block_dc=block_dc, block_c0=block_c0,
                     block_0c=block_0c, block_cc=block_cc)
        for name, shape in shapes.items():
            a = given[name]
            a = np.zeros(shape, dtype=complex) if a is None else np.asarray(a, dtype=complex)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, _frozen(a))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "qnums", qnums)

    def __setattr__(self, key, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def blocks(self) -> dict:
        return {name: getattr(self, name) for name in BLOCKS}

    def replace(self, **blocks):
        data = self.blocks()
        data.update(blocks)
        return type(self)(self.grid, self.qnums, **data)

    def _check_compatible(self, other):
        if not self.grid.same_as(other.grid):
            raise ValueError("spectrum grids do not match")
        if self.qnums.labels != other.qnums.labels:
            raise ValueError("quantum number labels do not match")

    def __add__(self, other):
        self._check_compatible(other)
        return type(self)(self.grid, self.qnums,
                          **{n: getattr(self, n) + getattr(other, n) for n in BLOCKS})

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return type(self)(self.grid, self.qnums, **{n: scalar * getattr(self, n) for n in BLOCKS})

    __rmul__ = __mul__

    def is_energy_diagonal(self, atol: float = 0.0) -> bool:
        return all(np.max(np.abs(getattr(self, n)), initial=0.0) <= atol for n in OFF_DIAGONAL_BLOCKS)

    def hermiticity_defect(self) -> float:
        """Largest violation of the self-adjointness relations between blocks."""
        d0 = self.block_d0
        dc = self.block_dc
        defects = [
            np.abs(d0 - d0.conj().T).max(initial=0.0),
            np.abs(dc - dc.conj().transpose(0, 2, 1)).max(initial=0.0),
            np.abs(self.block_0c - self.block_c0.conj().transpose(0, 2, 1)).max(initial=0.0),
            np.abs(self.block_cc - self.block_cc.conj().transpose(1, 0, 3, 2)).max(initial=0.0),
        ]
        return float(max(defects))

    def is_self_adjoint(self, atol: float = HERMITICITY_TOL) -> bool:
        return self.hermiticity_defect() <= atol

    def allclose(self, other, atol: float = 0.0, rtol: float = 0.0) -> bool:
        self._check_compatible(other)
        return all(np.allclose(getattr(self, n), getattr(other, n), atol=atol, rtol=rtol) for n in BLOCKS)

    def max_abs_difference(self, other) -> float:
        self._check_compatible(other)
        return float(max(np.abs(getattr(self, n) - getattr(other, n)).max(initial=0.0) for n in BLOCKS))

    def __repr__(self):
        return (f"{type(self).__name__}(K={self.grid.size}, M={self.qnums.size}, "
                f"energy_diagonal={self.is_energy_diagonal()})")


class ObservableFn(_FiveBlock):
    """Observable with component functions sampled on the spectrum grid."""


class StateFn(_FiveBlock):
    """State functional with the same five-block layout as :class:`ObservableFn`.

    The stored entries are the expansion coefficients of ``rho`` on the
    co-basis functionals, so ``(rho|O) = sum rho O``.
    """

    def to_observable(self) -> ObservableFn:
        return ObservableFn(self.grid, self.qnums, **self.blocks())


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_defect: float
    negativity_defect: float
    normalization_defect: float
    hermiticity_ok: bool = field(init=False)
    negativity_ok: bool = field(init=False)
    normalization_ok: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "hermiticity_ok", self.hermiticity_defect <= HERMITICITY_TOL)
        object.__setattr__(self, "negativity_ok", self.negativity_defect >= NEGATIVITY_TOL)
        object.__setattr__(self, "normalization_ok", self.normalization_defect <= NORMALIZATION_TOL)

    @property
    def passed(self) -> bool:
        return self.hermiticity_ok and self.negativity_ok and self.normalization_ok

    def failures(self) -> list:
        return [name for name in ("hermiticity", "negativity", "normalization")
                if not getattr(self, f"{name}_ok")]


def identity_observable(grid: SpectrumGrid, qnums: QuantumNumbers) -> ObservableFn:
    M, K = qnums.size, grid.size
    eye = np.eye(M)
    return ObservableFn(grid, qnums, block_d0=eye, block_dc=np.broadcast_to(eye, (K, M, M)))


def hamiltonian_observable(grid: SpectrumGrid, qnums: QuantumNumbers) -> ObservableFn:
    """``H``: ``omega0 * Id`` on the bound sector, ``omega_k * Id`` at each node."""
    M = qnums.size
    eye = np.eye(M)
    return ObservableFn(grid, qnums, block_d0=grid.omega0 * eye,
                        block_dc=grid.continuum_nodes[:, None, None] * eye)


def label_observable(grid: SpectrumGrid, qnums: QuantumNumbers, axis: int = 0) -> ObservableFn:
    """The CSCO observable ``O_i``, diagonal with eigenvalue ``m_i`` on label ``m``."""
    d = np.diag(qnums.values(axis))
    return ObservableFn(grid, qnums, block_d0=d, block_dc=np.broadcast_to(d, (grid.size,) + d.shape))


def _check_pair(rho, O):
    if not rho.grid.same_as(O.grid):
        raise ValueError("state and observable live on different spectrum grids")
    if rho.qnums.labels != O.qnums.labels:
        raise ValueError("state and observable use different label sets")


def dual_pairing(rho: StateFn, O: ObservableFn) -> complex:
    """Mean value ``(rho|O)`` with continuum integrals done by quadrature."""
    _check_pair(rho, O)
    w = rho.grid.quad_weights
    total = np.sum(rho.block_d0 * O.block_d0)
    total += w @ np.einsum("kij,kij->k", rho.block_dc, O.block_dc)
    total += w @ np.einsum("kij,kij->k", rho.block_c0, O.block_c0)
    total += w @ np.einsum("kij,kij->k", rho.block_0c, O.block_0c)
    total += w @ np.einsum("klij,klij->kl", rho.block_cc, O.block_cc) @ w
    return complex(total)


def validate_state(rho: StateFn) -> ValidationReport:
    diag0 = np.diagonal(rho.block_d0)
    diagc = np.diagonal(rho.block_dc, axis1=1, axis2=2)
    herm = max(rho.hermiticity_defect(),
               float(np.abs(diag0.imag).max(initial=0.0)),
               float(np.abs(diagc.imag).max(initial=0.0)))
    neg = min(0.0, float(diag0.real.min()), float(diagc.real.min()))
    norm = abs(dual_pairing(rho, identity_observable(rho.grid, rho.qnums)) - 1.0)
    return ValidationReport(herm, neg, float(norm))


def diagonal_power(O: ObservableFn, n: int) -> ObservableFn:
    """Block-wise matrix power of an energy-diagonal observable."""
    if n < 0:
        raise ValueError("power must be non-negative")
    if not O.is_energy_diagonal():
        raise ValueError("diagonal_power needs an energy-diagonal observable "
                         "(composition of kernel blocks is not supported)")
    if n == 0:
        return identity_observable(O.grid, O.qnums)
    return ObservableFn(O.grid, O.qnums,
                        block_d0=np.linalg.matrix_power(O.block_d0, n),
                        block_dc=np.linalg.matrix_power(O.block_dc, n))


def adjoint(X):
    """Swap-and-conjugate the blocks; ``X`` is self-adjoint iff ``adjoint(X) == X``."""
    return type(X)(X.grid, X.qnums,
                   block_d0=X.block_d0.conj().T,
                   block_dc=X.block_dc.conj().transpose(0, 2, 1),
                   block_c0=X.block_0c.conj().transpose(0, 2, 1),
                   block_0c=X.block_c0.conj().transpose(0, 2, 1),
                   block_cc=X.block_cc.conj().transpose(1, 0, 3, 2))


def symmetrize(X):
    """Explicit projection onto the self-adjoint part, ``(X + X^dagger) / 2``."""
    return 0.5 * (X + adjoint(X))


def cobasis_state(grid: SpectrumGrid, qnums: QuantumNumbers, sector, r: int, s: int | None = None) -> StateFn:
    """Basis functional ``(x, rs|`` with ``sector`` either ``"bound"`` or a node index.

    Continuum functionals carry ``1 / w_k`` so the discrete integral acts as a delta.
    """
    s = r if s is None else s
    M = qnums.size
    if sector == "bound":
        d0 = np.zeros((M, M))
        d0[r, s] = 1.0
        return StateFn(grid, qnums, block_d0=d0)
    k = int(sector)
    dc = np.zeros((grid.size, M, M))
    dc[k, r, s] = 1.0 / grid.quad_weights[k]
    return StateFn(grid, qnums, block_dc=dc)


# -- profile constructors ---------------------------------------------------

def gaussian_profile(center: float, width: float, amplitude: float = 1.0) -> Callable:
    """``amplitude * exp(-(omega - center)^2 / (2 width^2))``."""
    def f(omega):
        omega = np.asarray(omega, dtype=float)
        return amplitude * np.exp(-0.5 * ((omega - center) / width) ** 2)
    return f


def poly_exp_profile(power: int, rate: float, amplitude: float = 1.0) -> Callable:
    """``amplitude * omega^power * exp(-rate * omega)``."""
    def f(omega):
        omega = np.asarray(omega, dtype=float)
        return amplitude * omega ** power * np.exp(-rate * omega)
    return f


def tail_mass(profile: Callable, omega_max: float, cutoff: float | None = None, n: int = 4001) -> float:
    """Estimate ``int_{omega_max}^{cutoff} |f|`` for a built-in profile."""
    cutoff = 20.0 * omega_max if cutoff is None else cutoff
    x = np.linspace(omega_max, cutoff, n)
    return float(np.trapezoid(np.abs(profile(x)), x))


def density_state(grid: SpectrumGrid, qnums: QuantumNumbers, bound_amplitudes=None,
                  continuum_amplitudes=None, mixture=None, normalize: bool = True) -> StateFn:
    """State functional of a density operator built from wave-packet amplitudes.

    Each pure component ``psi = sum_m b_m |omega0, m> + sum_m int phi_m(omega) |omega, m>``
    contributes ``psi psi^dagger`` to every block; the energy-diagonal blocks
    receive the diagonal restriction of the continuum kernel.  The stored
    coefficients are the complex conjugates of the matrix elements
    ``<x, m|rho|x', m'>``, which makes ``(rho|O) = Tr(rho O)``.

    Parameters
    ----------
    bound_amplitudes : array (M,) or (J, M)
    continuum_amplitudes : array (K, M) or (J, K, M)
        Samples of ``phi_m`` at the grid nodes.
    mixture : array (J,), optional
        Non-negative mixing weights (default equal).
    """
    K, M = grid.size, qnums.size
    b = np.zeros((1, M)) if bound_amplitudes is None else np.asarray(bound_amplitudes, dtype=complex)
    phi = np.zeros((1, K, M)) if continuum_amplitudes is None else np.asarray(continuum_amplitudes, dtype=complex)
    if b.ndim == 1:
        b = b[None]
    if phi.ndim == 2:
        phi = phi[None]
    J = max(b.shape[0], phi.shape[0])
    b = np.broadcast_to(b, (J, M))
    phi = np.broadcast_to(phi, (J, K, M))
    p = np.full(J, 1.0 / J) if mixture is None else np.asarray(mixture, dtype=float)
    if np.any(p < 0):
        raise ValueError("mixture weights must be non-negative")
    d0 = np.einsum("j,jm,jn->mn", p, b, b.conj())
    c0 = np.einsum("j,jkm,jn->kmn", p, phi, b.conj())
    cc = np.einsum("j,jkm,jln->klmn", p, phi, phi.conj())
    dc = np.einsum("j,jkm,jkn->kmn", p, phi, phi.conj())
    rho = StateFn(grid, qnums, block_d0=d0.conj(), block_dc=dc.conj(), block_c0=c0.conj(),
                  block_0c=c0.transpose(0, 2, 1), block_cc=cc.conj())
    if normalize:
        total = dual_pairing(rho, identity_observable(grid, qnums)).real
        if total <= 0:
            raise ValueError("state has no weight to normalize")
        rho = rho * (1.0 / total)
    return rho


def diagonal_state(grid: SpectrumGrid, qnums: QuantumNumbers, bound_block=None, continuum_blocks=None,
                   normalize: bool = True) -> StateFn:
    """Energy-diagonal state from a bound matrix and per-node continuum matrices."""
    M = qnums.size
    d0 = np.zeros((M, M)) if bound_block is None else bound_block
    dc = np.zeros((grid.size, M, M)) if continuum_blocks is None else continuum_blocks
    rho = StateFn(grid, qnums, block_d0=d0, block_dc=dc)
    if normalize:
        total = dual_pairing(rho, identity_observable(grid, qnums)).real
        if total <= 0:
            raise ValueError("state has no weight to normalize")
        rho = rho * (1.0 / total)
    return rho


class InvalidStateError(ValueError):
    """Raised when a state violates hermiticity, positivity or normalization."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(
            "invalid state: failed " + ", ".join(report.failures())
            + f" (hermiticity={report.hermiticity_defect:.3g}, negativity={report.negativity_defect:.3g},"
            f" normalization={report.normalization_defect:.3g}); use symmetrize() to project explicitly"
        )


def require_valid(rho: StateFn) -> StateFn:
    """Return ``rho`` unchanged or raise :class:`InvalidStateError`."""
    report = validate_state(rho)
    if not report.passed:
        raise InvalidStateError(report)
    return rho
