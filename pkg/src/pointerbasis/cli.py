"""Command line front end: ``pointerbasis {evolve,pointer,wigner,check}``.

Each command reads a JSON config (``--config``), writes CSV tables plus a
``summary.json`` into ``--out`` and exits with 0 on success, 1 when the
config or the configured state is invalid and 2 when a numerical check fails.
Column headers spell out the formula each column evaluates.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError
from .dynamics import (
    ResolutionError,
    decay_scan,
    decoherence_deficit,
    dyadic_suprema,
    equilibrium_state,
    evolve_state,
    expectation,
    liouvillian_apply,
)
from .pointer import (
    TrackingError,
    commutator_expectation,
    diagonalize_blocks,
    max_offdiagonal,
    moment_check,
    moment_table,
    pointer_observables,
    pointer_state,
    transform_observable,
    transform_state,
)
from .random_states import random_observable, random_smooth_state
from .spectral_core import (
    InvalidStateError,
    dual_pairing,
    hamiltonian_observable,
    identity_observable,
    label_observable,
    make_spectrum_grid,
    validate_state,
)
from .wigner_classical import ResolutionError as WignerResolutionError
from .wigner_classical import (
    classical_equilibrium_density,
    classical_moments,
    loglog_slope,
    moyal_vs_poisson_residual,
    phase_space_pairing,
    position_kernel,
    product_correspondence_residual,
    wigner_observable,
    wigner_state,
)

log = logging.getLogger("pointerbasis")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class CheckFailure(RuntimeError):
    """A numerical verdict failed; outputs were still written."""


# -- output helpers -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    return obj


def write_json(path: Path, data):
    _atomic_write(path, json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _check(name, value, threshold, passed, **extra):
    return {"name": name, "value": value, "threshold": threshold, "passed": bool(passed), **extra}


# -- commands -------------------------------------------------------------------

def cmd_evolve(cfg: dict, out: Path) -> dict:
    grid, qnums = cfgmod.build_grid(cfg), cfgmod.build_qnums(cfg)
    rho = cfgmod.build_state(cfg, grid=grid, qnums=qnums)
    validate_or_raise(rho)
    O = cfgmod.build_observable(cfg, grid=grid, qnums=qnums)
    times = cfgmod.build_times(cfg)
    tc = cfg["time"]
    scan = decay_scan(rho, O, times, mode=tc["mode"], observable_id=cfgmod.observable_id(cfg["observable"]))
    write_csv(out / "decay.csv",
              ["t", "<O>(t) = (rho(t)|O)", "(rho_*|O)", "|<O>(t) - (rho_*|O)|", "<O>(t) - (rho_*|O)"],
              zip(scan.times, scan.expectations, np.full(times.size, scan.equilibrium_value),
                  scan.deficits, scan.signed))
    initial = decoherence_deficit(rho, O, 0.0, mode=tc["mode"])
    sups = dyadic_suprema(rho, O, tc["dyadic_T"], levels=tc["dyadic_levels"], mode=tc["mode"])
    stationary = bool(np.all(sups == 0.0))
    decreasing = stationary or bool(np.all(np.diff(sups) < 0))
    write_csv(out / "dyadic.csv", ["window start 2^j T", "window end 2^(j+1) T",
                                   "sup |<O>(t) - (rho_*|O)| over window"],
              [(2.0 ** j * tc["dyadic_T"], 2.0 ** (j + 1) * tc["dyadic_T"], s) for j, s in enumerate(sups)])
    summary = {
        "command": "evolve",
        "state_valid": True,
        "observable": scan.observable_id,
        "equilibrium_value": scan.equilibrium_value,
        "initial_deficit": initial,
        "final_time": float(times[-1]),
        "final_deficit": float(scan.deficits[-1]),
        "final_over_initial": float(scan.deficits[-1] / initial) if initial > 0 else 0.0,
        "dyadic_suprema": sups,
        "dyadic_verdict": "stationary" if stationary else ("decreasing" if decreasing else "not decreasing"),
        "passed": decreasing,
    }
    write_json(out / "summary.json", summary)
    if not decreasing:
        raise CheckFailure("dyadic suprema of the deficit are not strictly decreasing")
    return summary


def _secondary(cfg, M):
    pc = cfg["pointer"]
    if pc["degeneracy_policy"] != "secondary":
        return None
    if "secondary" not in pc:
        raise ConfigError("pointer.degeneracy_policy 'secondary' needs pointer.secondary")
    S = np.asarray(pc["secondary"], dtype=float)
    if S.shape != (M, M) or not np.allclose(S, S.T):
        raise ConfigError(f"pointer.secondary must be a symmetric {M}x{M} matrix")
    return S


def cmd_pointer(cfg: dict, out: Path) -> dict:
    grid, qnums = cfgmod.build_grid(cfg), cfgmod.build_qnums(cfg)
    rho = cfgmod.build_state(cfg, grid=grid, qnums=qnums)
    validate_or_raise(rho)
    pc = cfg["pointer"]
    tol = pc["tolerance"]
    rho_star = equilibrium_state(rho)
    U = diagonalize_blocks(rho_star, _secondary(cfg, qnums.size))
    M = qnums.size
    lam_cols = [f"lambda_{r}(x): eigenvalue {r} of rho(x)" for r in range(M)]
    rows = [("bound", grid.omega0, *U.eigvals0)]
    rows += [(k, x, *U.eigvalsc[k]) for k, x in enumerate(grid.continuum_nodes)]
    write_csv(out / "eigenvalues.csv", ["sector", "x"] + lam_cols, rows)

    rs = transform_state(rho_star, U)
    rng = np.random.default_rng(cfg["seed"])
    H = hamiltonian_observable(grid, qnums)
    probes = [("H", H), ("I", identity_observable(grid, qnums))]
    probes += [(f"random_{i}", random_observable(grid, qnums, rng)) for i in range(3)]
    pairing_dev = max(abs(dual_pairing(rs, transform_observable(O, U)) - dual_pairing(rho_star, O))
                      for _, O in probes)
    checks = [
        _check("max offdiag of U^dagger rho(x) U", max_offdiagonal(rs), tol, max_offdiagonal(rs) < tol),
        _check("max |U^dagger U - Id|", U.unitarity_defect(), tol, U.unitarity_defect() < tol),
        _check("max |(U rho|U O) - (rho|O)|", pairing_dev, tol, pairing_dev < tol),
        _check("min successive-node eigenvector overlap", U.min_overlap, 0.5, U.min_overlap >= 0.5),
        _check("U is identity", float(U.is_identity(atol=tol)), None, True),
    ]

    P_ptr = [transform_observable(P, U) for P in pointer_observables(U)]
    H_ptr = transform_observable(H, U)
    nmax = pc["max_power"]
    mom_rows = []
    worst = 0.0
    observables = [("H", H_ptr, lambda x, r: x)] + [
        (f"P_{i}", P, lambda x, r, i=i: float(qnums.values(i)[r])) for i, P in enumerate(P_ptr)]
    sectors = [("bound", grid.omega0)] + list(enumerate(grid.continuum_nodes))
    for name, O, target in observables:
        for n in range(nmax + 1):
            bound, cont = moment_table(O, n)
            for sector, x in sectors:
                values = bound if sector == "bound" else cont[sector]
                for r in range(M):
                    exp = float(target(x, r)) ** n
                    err = abs(values[r] - exp) / max(1.0, abs(exp))
                    worst = max(worst, err)
                    mom_rows.append((sector, x, r, name, n, values[r], exp, err))
    # spot-check the table against the pairing with the co-basis functional
    for sector in ("bound", 0, grid.size - 1):
        for name, O, _ in observables:
            b, c = moment_table(O, nmax)
            ref = b[0] if sector == "bound" else c[sector, 0]
            worst = max(worst, abs(moment_check(sector, 0, O, nmax) - ref) / max(1.0, abs(ref)))
    write_csv(out / "moments.csv", ["sector", "x", "r", "observable", "n", "(x, rr| O^n)", "x^n or r_i^n",
                                    "relative error"], mom_rows)
    checks.append(_check("max relative moment error (x, rr|O^n) vs x^n, r_i^n", worst, tol, worst < tol))

    star = pointer_state(U)
    comm_rows = []
    cworst = 0.0
    targets = [("H", H_ptr)] + [(f"P_{j}", P) for j, P in enumerate(P_ptr)]
    targets += [(f"random_{i}", transform_observable(random_observable(grid, qnums, rng), U)) for i in range(5)]
    for i, P in enumerate(P_ptr):
        for name, O in targets:
            v = commutator_expectation(star, P, O)
            cworst = max(cworst, abs(v))
            comm_rows.append((f"P_{i}", name, v.real, v.imag))
    write_csv(out / "commutators.csv", ["P", "O", "Re (rho_*|[P, O])", "Im (rho_*|[P, O])"], comm_rows)
    checks.append(_check("max |(rho_*|[P_i, O])|", cworst, tol, cworst < tol))
    write_csv(out / "pointer_checks.csv", ["check", "value", "threshold", "passed"],
              [(c["name"], c["value"], "" if c["threshold"] is None else c["threshold"], c["passed"])
               for c in checks])
    summary = {"command": "pointer", "identity_transform": U.is_identity(atol=tol), "checks": checks,
               "eigvals_bound": U.eigvals0, "passed": all(c["passed"] for c in checks)}
    write_json(out / "summary.json", summary)
    if not summary["passed"]:
        raise CheckFailure("pointer checks failed: " + ", ".join(c["name"] for c in checks if not c["passed"]))
    return summary


def _wigner_observable_specs(cfg):
    return [(cfgmod.observable_id(s), s) for s in cfg["wigner"]["observables"]]


def cmd_wigner(cfg: dict, out: Path) -> dict:
    wc = cfg["wigner"]
    hbars = list(wc["hbar_list"])
    checks = []

    # pairing table, normalization and realness at the first hbar
    model, spectrum, grid = cfgmod.build_wigner_setup(cfg, hbars[0])
    packets = wc["packets"]
    states = [(p.get("id", f"packet_{i}"), cfgmod.build_packet_state(model, spectrum, p))
              for i, p in enumerate(packets)]
    densities = []
    for sid, rho in states:
        W = wigner_state(position_kernel(rho, model, grid))
        densities.append((sid, rho, W))
        checks.append(_check(f"{sid}: |int int rho^W dq dp - 1|", abs(W.normalization - 1.0), 1e-6,
                             abs(W.normalization - 1.0) < 1e-6))
        checks.append(_check(f"{sid}: max |Im rho^W|", W.imag_residue, 1e-10, W.imag_residue < 1e-10))
    _write_density(out / "wigner_density.csv", densities[0][2])
    pair_rows = []
    for oid, spec in _wigner_observable_specs(cfg):
        O = cfgmod.build_observable(cfg, spec, grid=spectrum, qnums=model.qnums)
        OW = wigner_observable(O, model, grid)
        for sid, rho, W in densities:
            q = dual_pairing(rho, O).real
            c = phase_space_pairing(W, OW)
            pair_rows.append((sid, oid, hbars[0], q, c, abs(q - c), abs(q - c) < 1e-4))
    write_csv(out / "pairing.csv", ["state", "observable", "hbar", "(rho|O)", "int rho^W O^W dq dp",
                                    "|difference|", "passed"], pair_rows)
    worst = max(r[5] for r in pair_rows)
    checks.append(_check("max |int rho^W O^W - (rho|O)|", worst, 1e-4, worst < 1e-4))

    # classical equilibrium ensemble of the first packet
    rho = densities[0][1]
    rho_star = equilibrium_state(rho)
    U = diagonalize_blocks(rho_star)
    ens = classical_equilibrium_density(transform_state(rho_star, U))
    write_csv(out / "ensemble.csv", ["sector", "weight rho_r(x) w", "x (level of H^W)"]
              + [f"r_{i} (level of P_{i}^W)" for i in range(ens.labels.shape[1])],
              [(s, w, x, *lab) for s, w, x, lab in zip(ens.sectors, ens.weights, ens.energies, ens.labels)])
    mom_rows = []
    for which in ["H"] + list(range(ens.labels.shape[1])):
        for n in range(wc["max_power"] + 1):
            per, agg = classical_moments(ens, which, n)
            target = ens.energies if which == "H" else ens.labels[:, which]
            err = float(np.abs(per - target ** n).max(initial=0.0))
            mom_rows.append(("H^W" if which == "H" else f"P_{which}^W", n, agg, err))
    write_csv(out / "ensemble_moments.csv", ["observable", "n", "sum_j weight_j value_j^n",
                                             "max |per-particle moment - value^n|"], mom_rows)
    checks.append(_check("min ensemble weight", float(ens.weights.min(initial=0.0)), 0.0,
                         bool(np.all(ens.weights >= 0))))
    checks.append(_check("|sum of ensemble weights - 1|", abs(ens.total - 1.0), 1e-10, abs(ens.total - 1.0) < 1e-10))

    # hbar scaling
    scale_rows, slopes = _scaling(cfg, hbars, packets[0])
    write_csv(out / "scaling.csv", ["relation", "hbar", "residual", "log-log slope", "threshold", "passed"],
              scale_rows)
    for rel, slope in slopes.items():
        ok = slope is not None and slope >= wc["slope_threshold"]
        checks.append(_check(f"slope {rel}", slope, wc["slope_threshold"], ok))
    summary = {"command": "wigner", "hbar_list": hbars, "checks": checks, "slopes": slopes,
               "passed": all(c["passed"] for c in checks)}
    write_json(out / "summary.json", summary)
    if not summary["passed"]:
        raise CheckFailure("wigner checks failed: " + ", ".join(c["name"] for c in checks if not c["passed"]))
    return summary


RELATIONS = ("{H^W, rho^W} vs [L rho]^W", "(H H)^W vs H^W H^W", "(P H)^W vs P^W H^W")


def _scaling(cfg, hbars, packet):
    res = {rel: [] for rel in RELATIONS}
    for hbar in hbars:
        model, spectrum, grid = cfgmod.build_wigner_setup(cfg, hbar)
        rho = cfgmod.build_packet_state(model, spectrum, packet)
        H = hamiltonian_observable(spectrum, model.qnums)
        P = label_observable(spectrum, model.qnums, 0)
        res[RELATIONS[0]].append(moyal_vs_poisson_residual(rho, model, grid, H))
        res[RELATIONS[1]].append(product_correspondence_residual(H, H, model, grid))
        res[RELATIONS[2]].append(product_correspondence_residual(P, H, model, grid))
    thr = cfg["wigner"]["slope_threshold"]
    rows, slopes = [], {}
    for rel, values in res.items():
        ok = len(hbars) >= 2 and all(v > 0 for v in values)
        slope = loglog_slope(hbars, values) if ok else None
        slopes[rel] = slope
        for h, v in zip(hbars, values):
            rows.append((rel, h, v, "" if slope is None else slope, thr,
                         slope is not None and slope >= thr))
    return rows, slopes


def _write_density(path: Path, W):
    grid = W.grid
    header = ["q \\ p"] + [_fmt(p) for p in grid.p_nodes]
    write_csv(path, header, ([q, *row] for q, row in zip(grid.q_nodes, W.W)))


# -- property suite ---------------------------------------------------------------

def _suite_spectral(cfg, rng, grid, qnums, rho):
    out = []
    rep = validate_state(rho)
    out.append(_check("state.hermiticity", rep.hermiticity_defect, 1e-12, rep.hermiticity_ok, kind="validation"))
    out.append(_check("state.negativity", rep.negativity_defect, -1e-12, rep.negativity_ok, kind="validation"))
    out.append(_check("state.normalization", rep.normalization_defect, 1e-10, rep.normalization_ok,
                      kind="validation"))
    w_err = abs(grid.quad_weights.sum() - grid.omega_max) / grid.omega_max
    out.append(_check("grid.weights_sum", w_err, 1e-12, w_err < 1e-12))
    g = make_spectrum_grid(-0.5, 10.0, 4, 8)
    e = abs(g.integrate(np.exp(-g.continuum_nodes)).real - (1 - np.exp(-10.0)))
    out.append(_check("grid.exp_integral", e, 1e-12, e < 1e-12))
    n = cfg["check"]["n_random"]
    sym = lin = clos = 0.0
    I = identity_observable(grid, qnums)
    for _ in range(n):
        r1, r2 = random_smooth_state(grid, qnums, rng), random_smooth_state(grid, qnums, rng)
        O1, O2 = random_observable(grid, qnums, rng), random_observable(grid, qnums, rng)
        a, b = rng.normal(size=2)
        lin = max(lin, abs(dual_pairing(r1 * a + r2 * b, O1) - a * dual_pairing(r1, O1) - b * dual_pairing(r2, O1)),
                  abs(dual_pairing(r1, O1 * a + O2 * b) - a * dual_pairing(r1, O1) - b * dual_pairing(r1, O2)))
        sym = max(sym, abs(dual_pairing(r1, O1).imag))
        clos = max(clos, abs(dual_pairing(r1, I) - 1))
    out.append(_check("pairing.linearity", lin, 1e-12, lin < 1e-12))
    out.append(_check("pairing.real_for_self_adjoint", sym, 1e-12, sym < 1e-12))
    out.append(_check("pairing.normalization", clos, 1e-10, clos < 1e-10))
    return out


def _suite_dynamics(cfg, rng, grid, qnums, rho):
    out = []
    n = cfg["check"]["n_random"]
    add = agree = stat = fd = 0.0
    herm_ok = True
    for _ in range(n):
        r = random_smooth_state(grid, qnums, rng)
        O = random_observable(grid, qnums, rng)
        t1, t2 = rng.uniform(-1, 1, 2)
        add = max(add, evolve_state(evolve_state(r, t1), t2).max_abs_difference(evolve_state(r, t1 + t2)))
        agree = max(agree, abs(expectation(r, O, t1, mode="plain") - dual_pairing(evolve_state(r, t1), O).real))
        star = equilibrium_state(r)
        stat = max(stat, liouvillian_apply(star).max_abs_difference(star * 0.0),
                   evolve_state(star, 37.0).max_abs_difference(star))
        h = 1e-5
        d = (expectation(r, O, h) - expectation(r, O, -h)) / (2 * h)
        fd = max(fd, abs(d - dual_pairing(liouvillian_apply(r), O).real) / max(1.0, abs(d)))
        herm_ok &= validate_state(evolve_state(r, t1 * 10)).passed
    out.append(_check("evolve.additivity", add, 1e-14, add < 1e-14))
    out.append(_check("expectation.plain_equals_pairing", agree, 1e-12, agree < 1e-12))
    out.append(_check("equilibrium.stationary", stat, 0.0, stat == 0.0))
    out.append(_check("liouvillian.central_difference", fd, 1e-8, fd < 1e-8))
    out.append(_check("evolve.preserves_validity", float(herm_ok), None, herm_ok))
    # weak limit on random Gaussian mixtures
    fails = 0
    worst_ratio = 0.0
    ident = identity_observable(grid, qnums)
    for _ in range(n):
        r = random_smooth_state(grid, qnums, rng, bound=False)
        O = random_observable(grid, qnums, rng)
        if abs(dual_pairing(r, ident) - 1) > 1e-10:
            fails += 1
            continue
        sups = dyadic_suprema(r, O, 2.0, levels=4)
        fails += int(not np.all(np.diff(sups) < 0))
        d0 = decoherence_deficit(r, O, 0.0)
        if d0 > 0:
            worst_ratio = max(worst_ratio, sups[-1] / d0)
    out.append(_check("weak_limit.dyadic_decrease_failures", fails, 0, fails == 0))
    return out


def _suite_pointer(cfg, rng, grid, qnums, rho):
    out = []
    n = cfg["check"]["n_random"]
    off = uni = inv = spec = mom = comm = 0.0
    H = hamiltonian_observable(grid, qnums)
    for _ in range(n):
        r = equilibrium_state(random_smooth_state(grid, qnums, rng))
        U = diagonalize_blocks(r)
        rs = transform_state(r, U)
        off = max(off, max_offdiagonal(rs))
        uni = max(uni, U.unitarity_defect())
        O = random_observable(grid, qnums, rng)
        inv = max(inv, abs(dual_pairing(rs, transform_observable(O, U)) - dual_pairing(r, O)))
        before = np.sort(np.linalg.eigvalsh(r.block_dc), axis=1)
        after = np.sort(np.diagonal(rs.block_dc, axis1=1, axis2=2).real, axis=1)
        spec = max(spec, np.abs(before - after).max())
        P = [transform_observable(p, U) for p in pointer_observables(U)]
        Hp = transform_observable(H, U)
        k = int(rng.integers(grid.size))
        for rr in range(qnums.size):
            for p in range(cfg["pointer"]["max_power"] + 1):
                x = grid.continuum_nodes[k]
                mom = max(mom, abs(moment_check(k, rr, Hp, p) - x ** p) / max(1.0, abs(x) ** p))
                for i, Pi in enumerate(P):
                    v = qnums.values(i)[rr] ** p
                    mom = max(mom, abs(moment_check(k, rr, Pi, p) - v) / max(1.0, abs(v)))
        star = pointer_state(U)
        comm = max(comm, max(abs(commutator_expectation(star, Pi, transform_observable(O, U))) for Pi in P))
    out.append(_check("pointer.offdiagonal", off, 1e-12, off < 1e-12))
    out.append(_check("pointer.unitarity", uni, 1e-12, uni < 1e-12))
    out.append(_check("pointer.pairing_invariance", inv, 1e-12, inv < 1e-12))
    out.append(_check("pointer.spectrum_preserved", spec, 1e-12, spec < 1e-12))
    out.append(_check("pointer.moments", mom, 1e-12, mom < 1e-12))
    out.append(_check("pointer.homogeneity", comm, 1e-12, comm < 1e-12))
    return out


def _suite_wigner(cfg, rng, grid, qnums, rho):
    wc = cfg["wigner"]
    model, spectrum, pgrid = cfgmod.build_wigner_setup(cfg, wc["hbar_list"][0])
    out = []
    st = cfgmod.build_packet_state(model, spectrum, wc["packets"][0])
    W = wigner_state(position_kernel(st, model, pgrid))
    out.append(_check("wigner.normalization", abs(W.normalization - 1), 1e-6, abs(W.normalization - 1) < 1e-6))
    out.append(_check("wigner.realness", W.imag_residue, 1e-10, W.imag_residue < 1e-10))
    worst = 0.0
    for spec in wc["observables"]:
        O = cfgmod.build_observable(cfg, spec, grid=spectrum, qnums=model.qnums)
        worst = max(worst, abs(phase_space_pairing(W, wigner_observable(O, model, pgrid)) - dual_pairing(st, O).real))
    out.append(_check("wigner.pairing", worst, 1e-4, worst < 1e-4))
    return out


def _suite_ensemble(cfg, rng, grid, qnums, rho):
    out = []
    r = equilibrium_state(rho)
    U = diagonalize_blocks(r)
    ens = classical_equilibrium_density(transform_state(r, U))
    out.append(_check("ensemble.nonnegative", float(ens.weights.min(initial=0.0)), 0.0,
                      bool(np.all(ens.weights >= 0))))
    out.append(_check("ensemble.unit_mass", abs(ens.total - 1), 1e-10, abs(ens.total - 1) < 1e-10))
    err = 0.0
    for n in range(cfg["pointer"]["max_power"] + 1):
        per, _ = classical_moments(ens, "H", n)
        err = max(err, float(np.abs(per - ens.energies ** n).max(initial=0.0)))
    out.append(_check("ensemble.moments", err, 0.0, err == 0.0))
    return out


def _suite_scaling(cfg, rng, grid, qnums, rho):
    wc = cfg["wigner"]
    _, slopes = _scaling(cfg, wc["hbar_list"], wc["packets"][0])
    return [_check(f"scaling.{rel}", s, wc["slope_threshold"], s is not None and s >= wc["slope_threshold"])
            for rel, s in slopes.items()]


SUITES = {"spectral": _suite_spectral, "dynamics": _suite_dynamics, "pointer": _suite_pointer,
          "wigner": _suite_wigner, "ensemble": _suite_ensemble, "scaling": _suite_scaling}


def cmd_check(cfg: dict, out: Path) -> dict:
    grid, qnums = cfgmod.build_grid(cfg), cfgmod.build_qnums(cfg)
    rho = cfgmod.build_state(cfg, grid=grid, qnums=qnums) if "state" in cfg else \
        random_smooth_state(grid, qnums, np.random.default_rng(cfg["seed"]))
    rng = np.random.default_rng(cfg["seed"])
    results = []
    state_ok = validate_state(rho).passed
    for name in cfg["check"]["suites"]:
        if name in ("ensemble",) and not state_ok:
            results.append(_check(f"{name}.skipped_invalid_state", None, None, False))
            continue
        for c in SUITES[name](cfg, rng, grid, qnums, rho):
            c["suite"] = name
            results.append(c)
    failed = [c["name"] for c in results if not c["passed"]]
    report = {"command": "check", "seed": cfg["seed"], "suites": cfg["check"]["suites"],
              "checks": results, "failed": failed, "passed": not failed}
    write_json(out / "report.json", report)
    if failed:
        kind = EXIT_INVALID if any(c.get("kind") == "validation" for c in results if not c["passed"]) \
            else EXIT_NUMERIC
        report["exit_code"] = kind
    return report


def validate_or_raise(rho):
    rep = validate_state(rho)
    if not rep.passed:
        raise InvalidStateError(rep)


COMMANDS = {"evolve": cmd_evolve, "pointer": cmd_pointer, "wigner": cmd_wigner, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointerbasis", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config (default: the shipped default config)")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, default=None, help="random seed (overrides config)")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = cfgmod.load_config(args.config or cfgmod.default_config_path())
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg["seed"] = args.seed
        out = args.out if args.out is not None else Path(cfg["output_dir"])
        result = COMMANDS[args.command](cfg, out)
    except (ConfigError, InvalidStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ResolutionError, WignerResolutionError, TrackingError, CheckFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "check" and not result["passed"]:
        print("failed checks: " + ", ".join(result["failed"]), file=sys.stderr)
        return result["exit_code"]
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
