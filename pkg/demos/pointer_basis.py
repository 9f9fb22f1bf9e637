"""Pointer basis of an equilibrium state and its exact pointer observables.

The energy-diagonal blocks of a random smooth equilibrium state are
diagonalized node by node.  In the rotated basis the state is diagonal, the
pointer observables have sharp moments and commute with the state in pairing.

Run with ``python3 demos/pointer_basis.py``.
"""
import numpy as np

from pointerbasis import (
    QuantumNumbers,
    commutator_expectation,
    diagonalize_blocks,
    equilibrium_state,
    hamiltonian_observable,
    make_spectrum_grid,
    moment_table,
    pointer_observables,
    transform_observable,
)
from pointerbasis.pointer import max_offdiagonal, pointer_state
from pointerbasis.random_states import random_observable, random_smooth_state

rng = np.random.default_rng(7)
grid = make_spectrum_grid(-0.5, 12.0, 16, 8)
qn = QuantumNumbers(((1,), (-1,)))

star = equilibrium_state(random_smooth_state(grid, qn, rng))
U = diagonalize_blocks(star)
rs = pointer_state(U)
print(f"off-diagonal residue after rotation: {max_offdiagonal(rs):.1e}")
print(f"unitarity defect of U:               {U.unitarity_defect():.1e}")
print("eigenvalues at the bound node:      ", U.eigvals0)

H = transform_observable(hamiltonian_observable(grid, qn), U)
bound, continuum = moment_table(H, 3)
print(f"(w0, r| H^3) = {bound[0]:.6f}   w0^3 = {grid.omega0 ** 3:.6f}")
k = grid.size // 2
print(f"(w, r| H^3) at node {k} = {continuum[k, 0]:.6f}   w^3 = {grid.continuum_nodes[k] ** 3:.6f}")

P = [transform_observable(p, U) for p in pointer_observables(U)]
worst = max(abs(commutator_expectation(rs, p, transform_observable(random_observable(grid, qn, rng), U)))
            for p in P for _ in range(20))
print(f"max |(rho_*|[P, O])| over 20 random observables: {worst:.1e}")
