import numpy as np
import pytest

from pointerbasis.dynamics import equilibrium_state
from pointerbasis.model_deltawell import deltawell_model, wavepacket_amplitudes
from pointerbasis.pointer import diagonalize_blocks, pointer_state, transform_state
from pointerbasis.spectral_core import (
    ObservableFn,
    StateFn,
    density_state,
    diagonal_state,
    dual_pairing,
    hamiltonian_observable,
    identity_observable,
    label_observable,
)
from pointerbasis.wigner_classical import (
    ClassicalEnsemble,
    ResolutionError,
    classical_equilibrium_density,
    classical_moments,
    completion_tail,
    loglog_slope,
    make_phase_space_grid,
    moyal_vs_poisson_residual,
    phase_space_pairing,
    poisson_bracket,
    position_kernel,
    product_correspondence_residual,
    resolved_mask,
    wigner_observable,
    wigner_state,
)


@pytest.fixture(scope="module")
def setup():
    model = deltawell_model(1.0, 1.0)
    spectrum = model.spectrum_grid(18.0, 60, 10)
    grid = make_phase_space_grid(24.0, 1024, 1.0)
    return model, spectrum, grid


@pytest.fixture(scope="module")
def packet(setup):
    model, spectrum, grid = setup
    b, phi = wavepacket_amplitudes(model, spectrum, -8.0, 3.0, 0.3)
    rho = density_state(spectrum, model.qnums, b, phi)
    return rho, wigner_state(position_kernel(rho, model, grid))


def bound_state(model, spectrum):
    return density_state(spectrum, model.qnums, np.array([1.0, 0.0]), None)


# -- kernels ------------------------------------------------------------------------

def test_bound_state_kernel_is_outer_product(setup):
    model, spectrum, grid = setup
    K = position_kernel(bound_state(model, spectrum), model, grid).K
    psi = model.psi0(grid.q_nodes)
    np.testing.assert_allclose(K, np.outer(psi, psi), rtol=0, atol=1e-15)


def test_kernel_trace_and_hermiticity(setup, packet):
    model, spectrum, grid = setup
    K = position_kernel(packet[0], model, grid)
    assert abs(K.trace() - 1.0) < 1e-6
    assert K.hermiticity_defect() < 1e-10


def test_kernel_matches_wavefunction(setup, packet):
    model, spectrum, grid = setup
    rho = packet[0]
    b, phi = wavepacket_amplitudes(model, spectrum, -8.0, 3.0, 0.3)
    q = grid.q_nodes
    psi = np.einsum("k,qkm,km->q", spectrum.quad_weights, model.continuum_functions(spectrum.continuum_nodes, q), phi)
    # <q'|rho|q> = psi(q') conj(psi(q)), up to normalization
    K = position_kernel(rho, model, grid).K
    norm = np.sum(spectrum.quad_weights[:, None] * np.abs(phi) ** 2)
    np.testing.assert_allclose(K, np.outer(psi.conj(), psi) / norm, rtol=0, atol=1e-12)


def test_odd_bound_weight_rejected(setup):
    model, spectrum, grid = setup
    d0 = np.diag([0.5, 0.5])
    rho = StateFn(spectrum, model.qnums, block_d0=d0)
    with pytest.raises(ValueError, match="odd bound"):
        position_kernel(rho, model, grid)


def test_unresolved_q_grid_rejected(setup):
    model, spectrum, _ = setup
    coarse = make_phase_space_grid(24.0, 64, 1.0)
    with pytest.raises(ResolutionError, match="refine the q grid"):
        position_kernel(bound_state(model, spectrum), model, coarse)


def test_decay_guard(setup):
    model, spectrum, _ = setup
    small = make_phase_space_grid(6.0, 256, 1.0)
    b, phi = wavepacket_amplitudes(model, spectrum, -8.0, 3.0, 0.3)
    rho = density_state(spectrum, model.qnums, b, phi)
    with pytest.raises(ResolutionError, match="enlarge L"):
        wigner_state(position_kernel(rho, model, small))


# -- Wigner densities ---------------------------------------------------------------

def test_packet_density_normalized_and_real(packet):
    W = packet[1]
    assert abs(W.normalization - 1.0) < 1e-6
    assert W.imag_residue < 1e-10


def test_packet_moments(packet):
    W = packet[1]
    g = W.grid
    w = W.W * g.dq * g.dp
    assert np.sum(w * g.q_nodes[:, None]) == pytest.approx(-8.0, abs=1e-6)
    assert np.sum(w * g.p_nodes[None, :]) == pytest.approx(3.0, abs=1e-6)


def _bound_W00(n_q, L=20.0):
    model = deltawell_model(1.0)
    spectrum = model.spectrum_grid(2.0, 2, 4)
    grid = make_phase_space_grid(L, n_q, 1.0)
    W = wigner_state(position_kernel(bound_state(model, spectrum), model, grid))
    i, n = n_q // 2, grid.n_p // 2
    return W, grid, W.W[i, n]


def test_bound_state_origin_value_against_lambda_oracle():
    # brute-force lambda integral of the analytic kernel psi0(lam) psi0(-lam) = kappa exp(-2 kappa |lam|)
    lam = np.linspace(-20.0, 20.0, 100_001)
    oracle = np.trapezoid(np.exp(-2.0 * np.abs(lam)), lam) / np.pi
    assert oracle == pytest.approx(1.0 / np.pi, abs=1e-7)
    errors = []
    for n_q in (1025, 2049):
        W, grid, w00 = _bound_W00(n_q)
        # grid value equals the discrete lambda sum: (dq / pi) coth(dq) exactly
        assert w00 == pytest.approx(grid.dq / np.tanh(grid.dq) / np.pi, rel=1e-12)
        errors.append(abs(w00 - oracle))
        assert errors[-1] < grid.dq ** 2 / 3
    # second order in the q spacing
    assert np.log2(errors[0] / errors[1]) == pytest.approx(2.0, abs=0.05)


def test_bound_state_normalization_converges():
    errs = []
    for n_q in (513, 1025):
        W, grid, _ = _bound_W00(n_q)
        errs.append(abs(W.normalization - 1.0))
        assert errs[-1] < grid.dq ** 2 / 2
        assert W.imag_residue < 1e-10
    assert errs[1] < errs[0] / 3.5


# -- symbols -----------------------------------------------------------------------

def test_identity_symbol(setup):
    model, spectrum, grid = setup
    IW = wigner_observable(identity_observable(spectrum, model.qnums), model, grid)
    assert np.abs(IW.values - 1.0).max() < 1e-6
    assert completion_tail(identity_observable(spectrum, model.qnums)) == pytest.approx((1.0, 0.0))


def test_hamiltonian_symbol_free_away_from_origin(setup):
    model, spectrum, grid = setup
    HW = wigner_observable(hamiltonian_observable(spectrum, model.qnums), model, grid).values
    mask = resolved_mask(grid, spectrum.omega_max)
    target = np.broadcast_to(0.5 * grid.p_nodes[None, :] ** 2, HW.shape)
    assert np.abs(HW - target)[mask].max() < 1e-3 * spectrum.omega_max


def test_symbol_linearity(setup, rng):
    model, spectrum, grid = setup
    H = hamiltonian_observable(spectrum, model.qnums)
    P = label_observable(spectrum, model.qnums)
    a, b = 0.7, -1.3
    combo = wigner_observable(a * H + b * P, model, grid).values
    sep = a * wigner_observable(H, model, grid).values + b * wigner_observable(P, model, grid).values
    assert np.abs(combo - sep).max() < 1e-12 * max(1.0, np.abs(sep).max())


# -- pairings ----------------------------------------------------------------------

def test_pairing_with_unit_symbol(packet):
    W = packet[1]
    assert phase_space_pairing(W, np.ones_like(W.W)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kind", ["identity", "hamiltonian", "parity"])
def test_packet_pairings(setup, packet, kind):
    model, spectrum, grid = setup
    rho, W = packet
    O = {"identity": identity_observable, "hamiltonian": hamiltonian_observable,
         "parity": label_observable}[kind](spectrum, model.qnums)
    assert abs(phase_space_pairing(W, wigner_observable(O, model, grid)) - dual_pairing(rho, O).real) < 1e-4


def test_bound_state_energy_pairing():
    # H^W = p^2/2 + V exactly; the residual is the cusp's 1/p^4 momentum tail cut at the grid edge,
    # first order in the q spacing
    model = deltawell_model(1.0)
    spectrum = model.spectrum_grid(2.0, 2, 4)
    rho = bound_state(model, spectrum)
    H = hamiltonian_observable(spectrum, model.qnums)
    assert dual_pairing(rho, H) == model.omega0
    errors = []
    for n_q in (1025, 2049):
        grid = make_phase_space_grid(20.0, n_q, 1.0)
        W = wigner_state(position_kernel(rho, model, grid))
        errors.append(abs(phase_space_pairing(W, wigner_observable(H, model, grid)) - model.omega0))
        assert errors[-1] < 0.12 * grid.dq
    assert np.log2(errors[0] / errors[1]) == pytest.approx(1.0, abs=0.1)


def test_pairing_rejects_shape_mismatch(packet):
    with pytest.raises(ValueError):
        phase_space_pairing(packet[1], np.ones((3, 3)))


# -- classical-limit residuals -----------------------------------------------------

def test_poisson_bracket_of_quadratics():
    grid = make_phase_space_grid(5.0, 101, 1.0)
    q, p = np.meshgrid(grid.q_nodes, grid.p_nodes, indexing="ij")
    pb = poisson_bracket(0.5 * p ** 2 + 0.5 * q ** 2, q * p, grid)
    inner = (slice(1, -1), slice(1, -1))
    np.testing.assert_allclose(pb[inner], (q ** 2 - p ** 2)[inner], atol=1e-10)


def test_stationary_state_has_no_residual(setup):
    model, spectrum, grid = setup
    prof = np.exp(-0.5 * ((spectrum.continuum_nodes - 4.5) / 1.0) ** 2)
    dc = prof[:, None, None] * np.diag([1.0, 0.6])
    star = diagonal_state(spectrum, model.qnums, None, dc)
    # an energy-diagonal functional has no position kernel: both sides vanish identically
    assert moyal_vs_poisson_residual(star, model, grid) < 1e-6


def test_residual_invariant_under_adding_stationary_part(setup, packet):
    model, spectrum, grid = setup
    rho = packet[0]
    star = equilibrium_state(rho)
    r1 = moyal_vs_poisson_residual(rho, model, grid)
    r2 = moyal_vs_poisson_residual(0.7 * rho + 0.3 * star, model, grid)
    r3 = moyal_vs_poisson_residual(0.7 * rho, model, grid)
    assert abs(r2 - r3) < 1e-8
    assert r3 == pytest.approx(0.7 * r1, rel=1e-10)


def test_product_with_identity_is_exact(setup):
    model, spectrum, grid = setup
    for O in (hamiltonian_observable(spectrum, model.qnums), label_observable(spectrum, model.qnums)):
        assert product_correspondence_residual(O, identity_observable(spectrum, model.qnums), model, grid) < 1e-10


def test_loglog_slope_recovers_power():
    h = np.array([1.0, 0.5, 0.25])
    assert loglog_slope(h, 3.0 * h ** 1.5) == pytest.approx(1.5, rel=1e-12)


# -- classical ensemble ------------------------------------------------------------

def test_pure_bound_pointer_state_single_particle(setup):
    model, spectrum, _ = setup
    star = bound_state(model, spectrum)
    ens = classical_equilibrium_density(transform_state(star, diagonalize_blocks(star)))
    assert ens.weights.tolist() == [1.0]
    assert ens.energies.tolist() == [model.omega0]
    assert ens.labels.tolist() == [[1.0]]
    assert ens.sectors == ("bound",)


def test_packet_ensemble_weights(packet):
    star = equilibrium_state(packet[0])
    U = diagonalize_blocks(star)
    ens = classical_equilibrium_density(pointer_state(U))
    assert np.all(ens.weights >= 0)
    assert abs(ens.total - 1.0) < 1e-10
    for n in range(9):
        per, agg = classical_moments(ens, "H", n)
        np.testing.assert_array_equal(per, ens.energies ** n)
        per, _ = classical_moments(ens, 0, n)
        np.testing.assert_array_equal(per, ens.labels[:, 0] ** n)


def test_ensemble_requires_diagonal_input(packet):
    with pytest.raises(ValueError):
        classical_equilibrium_density(packet[0])


def test_moment_examples():
    ens = ClassicalEnsemble(np.array([0.5, 0.5]), np.array([1.0, 3.0]), np.array([[1.0], [-1.0]]))
    assert classical_moments(ens, "H", 1)[1] == 2.0
    assert classical_moments(ens, "H", 0)[0].tolist() == [1.0, 1.0]
    single = ClassicalEnsemble(np.array([1.0]), np.array([2.0]), np.array([[1.0]]))
    assert classical_moments(single, "H", 3)[0][0] == 8.0


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        ClassicalEnsemble(np.array([-0.1, 1.1]), np.zeros(2), np.zeros((2, 1)))


def test_density_depends_only_on_symbol_values():
    ens = ClassicalEnsemble(np.array([0.25, 0.75]), np.array([1.0, 3.0]), np.array([[1.0], [-1.0]]))
    h = np.linspace(-4, 8, 1201)
    p = np.linspace(-4, 4, 801)
    H, P = np.meshgrid(h, p, indexing="ij")
    dens = ens.density(H, P, width=0.2)
    assert np.all(dens >= 0)
    assert np.trapezoid(np.trapezoid(dens, p, axis=1), h) == pytest.approx(1.0, abs=1e-8)
    # two phase-space points with equal (H^W, P^W) values get equal density
    assert ens.density(np.array([3.0, 3.0]), np.array([-1.0, -1.0]), 0.2)[0] == \
        ens.density(np.array([3.0]), np.array([-1.0]), 0.2)[0]
