import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pointerbasis.dynamics import equilibrium_state
from pointerbasis.pointer import (
    TrackingError,
    commutator_expectation,
    diagonalize_blocks,
    identity_transform,
    inverse,
    max_offdiagonal,
    moment_check,
    moment_table,
    pointer_observables,
    pointer_state,
    transform_observable,
    transform_state,
)
from pointerbasis.random_states import random_hermitian, random_observable, random_smooth_state
from pointerbasis.spectral_core import (
    ObservableFn,
    QuantumNumbers,
    StateFn,
    diagonal_state,
    dual_pairing,
    hamiltonian_observable,
    identity_observable,
    make_spectrum_grid,
)


def closed_form_2x2(a, b, c):
    """Eigenpairs of the real symmetric ``[[a, c], [c, b]]``, descending, largest component positive."""
    mean, rad = (a + b) / 2, np.sqrt((a - b) ** 2 / 4 + c ** 2)
    vals = np.array([mean + rad, mean - rad])
    vecs = []
    for lam in vals:
        v = np.array([c, lam - a]) if abs(c) > 0 else np.array([1.0, 0.0]) if lam == a else np.array([0.0, 1.0])
        v = v / np.linalg.norm(v)
        vecs.append(v * np.sign(v[np.argmax(np.abs(v))]))
    return vals, np.stack(vecs, axis=1)


@pytest.fixture
def star(grid, qnums, rng):
    return equilibrium_state(random_smooth_state(grid, qnums, rng))


# -- construction -------------------------------------------------------------------

def test_sorted_diagonal_blocks_give_identity(grid, qnums):
    prof = np.exp(-grid.continuum_nodes)[:, None, None]
    rho = diagonal_state(grid, qnums, np.diag([0.3, 0.1]), prof * np.diag([1.0, 0.25]))
    U = diagonalize_blocks(rho)
    assert U.is_identity()
    assert transform_state(rho, U).allclose(rho)


@pytest.mark.parametrize("a,b,c", [(0.6, 0.2, 0.1), (0.2, 0.6, -0.3), (1.0, 1.0, 0.5)])
def test_constant_block_matches_closed_form(grid, qnums, a, b, c):
    A = np.array([[a, c], [c, b]])
    rho = StateFn(grid, qnums, block_d0=A, block_dc=np.broadcast_to(A, (grid.size, 2, 2)))
    U = diagonalize_blocks(rho)
    vals, vecs = closed_form_2x2(a, b, c)
    np.testing.assert_allclose(U.eigvals0, vals, rtol=0, atol=1e-14)
    np.testing.assert_allclose(U.eigvalsc, np.broadcast_to(vals, (grid.size, 2)), rtol=0, atol=1e-14)
    np.testing.assert_allclose(U.U0, vecs, rtol=0, atol=1e-14)
    np.testing.assert_allclose(U.Uc, np.broadcast_to(vecs, (grid.size, 2, 2)), rtol=0, atol=1e-14)


def test_random_hermitian_blocks_diagonalized(grid, rng):
    qn = QuantumNumbers(((0,), (1,), (2,)))
    base = random_hermitian(rng, 3)
    drift = random_hermitian(rng, 3)
    dc = np.array([base + 0.02 * x * drift for x in grid.continuum_nodes])
    rho = StateFn(grid, qn, block_d0=random_hermitian(rng, 3), block_dc=dc)
    U = diagonalize_blocks(rho)
    assert max_offdiagonal(transform_state(rho, U)) < 1e-12
    assert U.unitarity_defect() < 1e-12


def test_tracking_follows_smooth_rotation(grid, qnums):
    # eigenvectors rotate smoothly; eigenvalues cross at omega = 6
    theta = 0.1 * grid.continuum_nodes
    lam = np.stack([1.0 + 0.0 * theta, 0.5 + 0.1 * grid.continuum_nodes], axis=1)
    R = np.stack([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]).transpose(2, 0, 1)
    dc = np.einsum("kij,kj,klj->kil", R, lam, R)
    U = diagonalize_blocks(StateFn(grid, qnums, block_d0=np.diag([1.0, 0.5]), block_dc=dc))
    assert U.min_overlap > 0.99
    # the first vector stays the one with eigenvalue 1 through the crossing
    np.testing.assert_allclose(U.eigvalsc[:, 0], 1.0, atol=1e-12)


def test_tracking_failure_names_node(grid):
    # with two labels some assignment always keeps overlap >= 1/sqrt(2); three labels can defeat it
    qn = QuantumNumbers(((0,), (1,), (2,)))
    Q = np.array([[-0.6552778710440301, 0.6596557169517123, -0.36805603759879535],
                  [-0.3372937885629616, -0.6914830297810822, -0.6388146207794709],
                  [0.6759022206775529, 0.29445806937100166, -0.675611303535883]])
    D = np.diag([3.0, 2.0, 1.0])
    dc = np.broadcast_to(D, (grid.size, 3, 3)).copy()
    dc[7] = Q @ D @ Q.T
    with pytest.raises(TrackingError, match="node 7"):
        diagonalize_blocks(StateFn(grid, qn, block_d0=D, block_dc=dc))


def test_degenerate_blocks_deterministic(grid, qnums):
    rho = StateFn(grid, qnums, block_d0=np.eye(2), block_dc=np.broadcast_to(np.eye(2), (grid.size, 2, 2)))
    assert diagonalize_blocks(rho).is_identity()
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    U = diagonalize_blocks(rho, secondary=S)
    np.testing.assert_allclose(np.abs(U.U0), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-14)


# -- transforms ---------------------------------------------------------------------

def test_identity_transform_fixes_everything(grid, qnums, rng):
    rho = random_smooth_state(grid, qnums, rng)
    U = identity_transform(rho)
    assert transform_state(rho, U).allclose(rho)


def test_state_transform_diagonalizes_and_keeps_spectrum(star):
    U = diagonalize_blocks(star)
    rs = transform_state(star, U)
    assert max_offdiagonal(rs) < 1e-12
    before = np.sort(np.linalg.eigvalsh(star.block_dc), axis=1)
    after = np.sort(np.diagonal(rs.block_dc, axis1=1, axis2=2).real, axis=1)
    np.testing.assert_allclose(after, before, rtol=0, atol=1e-12)
    I = identity_observable(star.grid, star.qnums)
    assert abs(dual_pairing(rs, I) - 1.0) < 1e-10


def test_fixed_observables(star):
    U = diagonalize_blocks(star)
    for O in (identity_observable(star.grid, star.qnums), hamiltonian_observable(star.grid, star.qnums)):
        assert transform_observable(O, U).max_abs_difference(O) < 1e-14 * star.grid.omega_max


def test_pairing_invariance_including_coherences(grid, qnums, rng):
    rho = random_smooth_state(grid, qnums, rng)
    U = diagonalize_blocks(equilibrium_state(rho))
    for _ in range(5):
        O = random_observable(grid, qnums, rng)
        assert abs(dual_pairing(transform_state(rho, U), transform_observable(O, U)) - dual_pairing(rho, O)) < 1e-12


def test_inverse_round_trip(star, rng):
    U = diagonalize_blocks(star)
    O = random_observable(star.grid, star.qnums, rng)
    assert transform_observable(transform_observable(O, U), inverse(U)).max_abs_difference(O) < 1e-13


# -- pointer observables and moments ------------------------------------------------

def test_pointer_observables_diagonal_and_commuting(star):
    U = diagonalize_blocks(star)
    P = [transform_observable(p, U) for p in pointer_observables(U)]
    for p in P:
        assert max_offdiagonal(p) < 1e-14
        np.testing.assert_allclose(np.diagonal(p.block_dc, axis1=1, axis2=2).real,
                                   np.broadcast_to(star.qnums.values(0), (star.grid.size, 2)), atol=1e-14)
    A, B = P[0].block_dc, P[-1].block_dc
    assert np.abs(A @ B - B @ A).max() < 1e-14


def test_pointer_observables_are_self_adjoint_in_original_basis(star):
    for p in pointer_observables(diagonalize_blocks(star)):
        assert p.is_self_adjoint(1e-14)


def test_hamiltonian_cubed_moment_at_two():
    grid = make_spectrum_grid(-0.5, 4.0, 1, 3)           # middle node sits at 2
    qn = QuantumNumbers(((0,),))
    assert grid.continuum_nodes[1] == pytest.approx(2.0, abs=1e-15)
    assert moment_check(1, 0, hamiltonian_observable(grid, qn), 3) == pytest.approx(8.0, rel=1e-14)


def test_label_moment_sixteen(grid):
    qn = QuantumNumbers(((2,), (-1,)))
    P = ObservableFn(grid, qn, block_d0=np.diag([2.0, -1.0]), block_dc=np.broadcast_to(np.diag([2.0, -1.0]),
                                                                                      (grid.size, 2, 2)))
    assert moment_check(3, 0, P, 4) == pytest.approx(16.0, rel=1e-14)
    assert moment_check("bound", 1, P, 3) == -1.0


@given(st.integers(0, 8), st.integers(0, 127), st.integers(0, 1))
def test_moments_exact(grid, qnums, n, k, r):
    star = equilibrium_state(random_smooth_state(grid, qnums, np.random.default_rng(11)))
    U = diagonalize_blocks(star)
    H = transform_observable(hamiltonian_observable(grid, qnums), U)
    x = grid.continuum_nodes[k]
    assert abs(moment_check(k, r, H, n) - x ** n) <= 1e-12 * max(1.0, x ** n)
    for i, P in enumerate(pointer_observables(U)):
        Pp = transform_observable(P, U)
        v = float(qnums.values(i)[r]) ** n
        assert abs(moment_check(k, r, Pp, n) - v) <= 1e-12 * max(1.0, abs(v))


def test_moment_zero_power_is_one(star, rng):
    O = equilibrium_state(random_smooth_state(star.grid, star.qnums, rng)).to_observable()
    assert moment_check(0, 1, O, 0) == pytest.approx(1.0, rel=1e-14)


# -- homogeneity ---------------------------------------------------------------------

def test_commutator_expectation_vanishes(star, rng):
    U = diagonalize_blocks(star)
    rs = pointer_state(U)
    P = [transform_observable(p, U) for p in pointer_observables(U)]
    for _ in range(10):
        O = transform_observable(random_observable(star.grid, star.qnums, rng), U)
        for p in P:
            assert abs(commutator_expectation(rs, p, O)) < 1e-15
    assert commutator_expectation(rs, P[0], P[0]) == 0


def test_pointer_state_equals_transformed_equilibrium(star):
    U = diagonalize_blocks(star)
    assert pointer_state(U).max_abs_difference(transform_state(star, U)) < 1e-12


def test_commutator_requires_diagonal_state(grid, qnums, rng):
    rho = random_smooth_state(grid, qnums, rng)
    U = diagonalize_blocks(equilibrium_state(rho))
    P = transform_observable(pointer_observables(U)[0], U)
    with pytest.raises(ValueError):
        commutator_expectation(rho, P, identity_observable(grid, qnums))


def test_moment_table_matches_moment_check(star):
    U = diagonalize_blocks(star)
    for O in [transform_observable(hamiltonian_observable(star.grid, star.qnums), U)] + \
            [transform_observable(p, U) for p in pointer_observables(U)]:
        for n in (0, 3, 8):
            bound, cont = moment_table(O, n)
            assert bound[1] == moment_check("bound", 1, O, n)
            for k in (0, 17, star.grid.size - 1):
                assert cont[k, 0] == pytest.approx(moment_check(k, 0, O, n), rel=1e-15)
