import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pointerbasis.random_states import random_observable, random_smooth_state
from pointerbasis.spectral_core import (
    InvalidStateError,
    ObservableFn,
    QuantumNumbers,
    StateFn,
    adjoint,
    cobasis_state,
    density_state,
    diagonal_power,
    diagonal_state,
    dual_pairing,
    gaussian_profile,
    hamiltonian_observable,
    identity_observable,
    label_observable,
    make_spectrum_grid,
    require_valid,
    symmetrize,
    tail_mass,
    validate_state,
)


# -- grid ---------------------------------------------------------------------------

def test_two_point_rule_closed_form():
    g = make_spectrum_grid(-0.5, 10.0, 1, 2)
    np.testing.assert_allclose(g.continuum_nodes, 5.0 * (1 + np.array([-1, 1]) / np.sqrt(3)), rtol=1e-15)
    np.testing.assert_allclose(g.quad_weights, [5.0, 5.0], rtol=1e-15)


@given(st.floats(0.5, 50.0), st.integers(1, 12), st.integers(2, 14))
def test_weights_sum_to_omega_max(omega_max, n_panels, order):
    g = make_spectrum_grid(-1.0, omega_max, n_panels, order)
    assert g.quad_weights.sum() == pytest.approx(omega_max, rel=1e-13)
    assert g.size == n_panels * order


def test_exponential_integral():
    g = make_spectrum_grid(-0.5, 10.0, 4, 8)
    assert abs(g.integrate(np.exp(-g.continuum_nodes)) - (1 - np.exp(-10.0))) < 1e-12


@pytest.mark.parametrize("args", [(0.5, 10, 2, 4), (-0.5, -1, 2, 4), (-0.5, 10, 0, 4), (-0.5, 10, 2, 1)])
def test_grid_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        make_spectrum_grid(*args)


def test_labels_must_be_distinct():
    with pytest.raises(ValueError):
        QuantumNumbers(((1,), (1,)))


# -- pairing ------------------------------------------------------------------------

def test_identity_pairing_and_self_adjointness(grid, qnums, rng):
    I = identity_observable(grid, qnums)
    assert I.is_self_adjoint()
    for _ in range(5):
        rho = random_smooth_state(grid, qnums, rng)
        assert abs(dual_pairing(rho, I) - 1.0) < 1e-10


def test_single_bound_term(grid, qnums):
    d0 = np.zeros((2, 2))
    d0[0, 0] = 1.0
    rho = StateFn(grid, qnums, block_d0=d0)
    O = ObservableFn(grid, qnums, block_d0=5.0 * d0)
    assert dual_pairing(rho, O) == 5.0


def test_mean_energy_against_trapezoid_oracle(qnums):
    grid = make_spectrum_grid(-0.5, 10.0, 20, 10)
    prof = np.exp(-(grid.continuum_nodes - 1.0) ** 2)
    rho = diagonal_state(grid, qnums, continuum_blocks=prof[:, None, None] * np.eye(2))
    value = dual_pairing(rho, hamiltonian_observable(grid, qnums))
    w = np.linspace(0.0, 10.0, 1_000_001)
    f = np.exp(-(w - 1.0) ** 2)
    oracle = np.trapezoid(w * f, w) / np.trapezoid(f, w)
    assert abs(value - oracle) < 1e-9
    assert abs(value.imag) == 0.0


def test_pairing_is_bilinear(grid, qnums, rng):
    r1, r2 = random_smooth_state(grid, qnums, rng), random_smooth_state(grid, qnums, rng)
    O1, O2 = random_observable(grid, qnums, rng), random_observable(grid, qnums, rng)
    a, b = 0.3 - 0.7j, 1.9
    lhs = dual_pairing(a * r1 + b * r2, O1 + O2)
    rhs = sum(c * dual_pairing(r, O) for c, r in [(a, r1), (b, r2)] for O in (O1, O2))
    assert abs(lhs - rhs) < 1e-12


def test_pairing_real_for_self_adjoint(grid, qnums, rng):
    for _ in range(5):
        rho = random_smooth_state(grid, qnums, rng)
        assert abs(dual_pairing(rho, random_observable(grid, qnums, rng)).imag) < 1e-13


def test_pairing_matches_operator_trace():
    # one bound level and two continuum nodes: Tr(rho O) on the discretized space
    grid = make_spectrum_grid(-1.0, 2.0, 1, 2)
    qn = QuantumNumbers(((0,),))
    rng = np.random.default_rng(7)
    b, phi = rng.normal(size=1) + 1j * rng.normal(size=1), rng.normal(size=(2, 1)) + 1j * rng.normal(size=(2, 1))
    rho = density_state(grid, qn, b, phi, normalize=False)
    # orthonormal discrete vectors |k> = sqrt(w_k)|omega_k>
    sw = np.sqrt(grid.quad_weights)
    psi = np.concatenate([b, phi[:, 0] * sw])
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    A = A + A.conj().T
    O = ObservableFn(grid, qn, block_d0=A[:1, :1],
                     block_dc=np.zeros((2, 1, 1)),
                     block_c0=(A[1:, :1] / sw[:, None])[:, :, None],
                     block_0c=(A[:1, 1:] / sw[None, :]).T[:, :, None],
                     block_cc=(A[1:, 1:] / np.outer(sw, sw))[:, :, None, None])
    trace = psi.conj() @ A @ psi
    assert abs(dual_pairing(rho, O) - trace) < 1e-12


def test_pairing_rejects_mismatched_grids(qnums):
    g1, g2 = make_spectrum_grid(-0.5, 10, 2, 4), make_spectrum_grid(-0.5, 11, 2, 4)
    with pytest.raises(ValueError):
        dual_pairing(StateFn(g1, qnums), identity_observable(g2, qnums))


# -- validation ---------------------------------------------------------------------

def test_constructors_produce_valid_states(grid, qnums, rng):
    for _ in range(10):
        assert validate_state(random_smooth_state(grid, qnums, rng)).passed


def test_hermiticity_defect_definition(grid, qnums):
    d0 = np.eye(2) / 2
    d0[0, 1] = 1.0
    rep = validate_state(StateFn(grid, qnums, block_d0=d0))
    assert rep.hermiticity_defect == 1.0
    assert rep.failures() == ["hermiticity"]
    with pytest.raises(InvalidStateError, match="hermiticity"):
        require_valid(StateFn(grid, qnums, block_d0=d0))


def test_normalization_defect_of_doubled_state(grid, qnums, rng):
    rho = random_smooth_state(grid, qnums, rng)
    assert validate_state(2.0 * rho).normalization_defect == pytest.approx(1.0, abs=1e-12)


def test_negativity_reported(grid, qnums):
    rho = StateFn(grid, qnums, block_d0=np.diag([1.5, -0.5]))
    rep = validate_state(rho)
    assert rep.negativity_defect == -0.5 and not rep.negativity_ok


def test_symmetrize_projects(grid, qnums, rng):
    A = rng.normal(size=(2, 2))
    X = StateFn(grid, qnums, block_d0=A)
    assert symmetrize(X).hermiticity_defect() < 1e-15
    assert adjoint(adjoint(X)).allclose(X)


def test_states_are_immutable(grid, qnums):
    rho = StateFn(grid, qnums)
    with pytest.raises(AttributeError):
        rho.block_d0 = np.eye(2)
    with pytest.raises(ValueError):
        rho.block_d0[0, 0] = 1.0


# -- diagonal power -----------------------------------------------------------------

def test_hamiltonian_cubed(grid, qnums):
    H3 = diagonal_power(hamiltonian_observable(grid, qnums), 3)
    np.testing.assert_allclose(H3.block_d0, grid.omega0 ** 3 * np.eye(2))
    np.testing.assert_allclose(H3.block_dc, grid.continuum_nodes[:, None, None] ** 3 * np.eye(2), rtol=1e-15)


def test_power_zero_is_identity(grid, qnums):
    assert diagonal_power(label_observable(grid, qnums), 0).allclose(identity_observable(grid, qnums))


def test_involution_squares_to_identity(grid, qnums):
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    O = ObservableFn(grid, qnums, block_d0=X, block_dc=np.broadcast_to(X, (grid.size, 2, 2)))
    assert diagonal_power(O, 2).allclose(identity_observable(grid, qnums))


def test_power_rejects_kernel_observables(grid, qnums):
    O = ObservableFn(grid, qnums, block_cc=np.ones((grid.size, grid.size, 2, 2)))
    with pytest.raises(ValueError):
        diagonal_power(O, 2)


# -- cobasis and profiles -----------------------------------------------------------

def test_cobasis_picks_single_entry(grid, qnums, rng):
    O = random_observable(grid, qnums, rng)
    assert dual_pairing(cobasis_state(grid, qnums, "bound", 1, 0), O) == O.block_d0[1, 0]
    assert dual_pairing(cobasis_state(grid, qnums, 5, 0, 1), O) == pytest.approx(O.block_dc[5, 0, 1], rel=1e-14)


def test_tail_mass_of_gaussian():
    assert tail_mass(gaussian_profile(1.0, 0.2), 10.0) < 1e-8
    assert tail_mass(gaussian_profile(9.0, 2.0), 10.0) > 1e-2
