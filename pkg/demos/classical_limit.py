"""Wigner picture of a scattering packet on the attractive delta well.

Builds a Gaussian packet, transforms it to phase space, compares pairings
with phase-space integrals and prints the classical-limit residuals as hbar
shrinks.  The residuals do not fall off at first order on this model.

Run with ``python3 demos/classical_limit.py`` (about one minute).
"""
from pointerbasis import (
    deltawell_model,
    density_state,
    dual_pairing,
    hamiltonian_observable,
    label_observable,
    make_phase_space_grid,
    moyal_vs_poisson_residual,
    phase_space_pairing,
    position_kernel,
    product_correspondence_residual,
    wavepacket_amplitudes,
    wigner_observable,
    wigner_state,
)
from pointerbasis.wigner_classical import loglog_slope

hbars, moyal, hh = (1.0, 0.5, 0.25), [], []
for hbar in hbars:
    model = deltawell_model(1.0, hbar)
    spectrum = model.spectrum_grid(18.0, 100, 10)
    grid = make_phase_space_grid(24.0, 1024, hbar)
    rho = density_state(spectrum, model.qnums, *wavepacket_amplitudes(model, spectrum, -8.0, 3.0, 0.3))
    H = hamiltonian_observable(spectrum, model.qnums)
    W = wigner_state(position_kernel(rho, model, grid))
    for name, O in (("H", H), ("parity", label_observable(spectrum, model.qnums))):
        quantum = dual_pairing(rho, O).real
        classical = phase_space_pairing(W, wigner_observable(O, model, grid))
        print(f"hbar={hbar:<5} {name:>6}: (rho|O) = {quantum:.6f}, int rho^W O^W = {classical:.6f}")
    moyal.append(moyal_vs_poisson_residual(rho, model, grid, H))
    hh.append(product_correspondence_residual(H, H, model, grid))

print(f"Moyal vs Poisson residuals {moyal}, log-log slope {loglog_slope(hbars, moyal):+.2f}")
print(f"(H H)^W vs H^W H^W residuals {hh}, log-log slope {loglog_slope(hbars, hh):+.2f}")
