"""Experiment configuration: JSON schema, defaults and object builders.

A config is a JSON object validated against :data:`SCHEMA` before anything
is computed; unknown keys are rejected at every level.  Matrices are nested
lists of reals, with an optional ``*_imag`` companion for the imaginary part.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema
import numpy as np

from .model_deltawell import deltawell_model, wavepacket_amplitudes
from .spectral_core import (
    ObservableFn,
    QuantumNumbers,
    StateFn,
    density_state,
    diagonal_power,
    diagonal_state,
    gaussian_profile,
    hamiltonian_observable,
    identity_observable,
    label_observable,
    make_spectrum_grid,
    poly_exp_profile,
)

__all__ = ["SCHEMA", "ConfigError", "load_config", "validate_config", "with_defaults",
           "build_grid", "build_qnums", "build_state", "build_observable", "build_times",
           "default_config_path", "DEMO_CONFIGS"]

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_matrix = {"type": "array", "items": {"type": "array", "items": _num, "minItems": 1}, "minItems": 1}

_profile = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["type", "center", "width"],
         "properties": {"type": {"const": "gaussian"}, "center": _num, "width": _pos, "amplitude": _num}},
        {"type": "object", "additionalProperties": False, "required": ["type"],
         "properties": {"type": {"const": "constant"}, "amplitude": _num}},
        {"type": "object", "additionalProperties": False, "required": ["type", "power", "rate"],
         "properties": {"type": {"const": "poly_exp"}, "power": {"type": "integer", "minimum": 0},
                        "rate": _pos, "amplitude": _num}},
    ]
}

_continuum_term = {
    "type": "object", "additionalProperties": False, "required": ["profile"],
    "properties": {
        "label": {"type": "integer", "minimum": 0},
        "matrix": _matrix,
        "matrix_imag": _matrix,
        "profile": _profile,
        "phase": _num,
        "delay": _num,
    },
}

_state = {
    "type": "object", "additionalProperties": False, "required": ["kind"],
    "properties": {
        "kind": {"enum": ["packet", "diagonal"]},
        "bound": {"type": "array", "items": _num},
        "bound_imag": {"type": "array", "items": _num},
        "bound_block": _matrix,
        "bound_block_imag": _matrix,
        "continuum": {"type": "array", "items": _continuum_term},
        "normalize": {"type": "boolean"},
        "perturb_hermiticity": _num,
    },
}

_observable = {
    "type": "object", "additionalProperties": False, "required": ["type"],
    "properties": {
        "type": {"enum": ["identity", "hamiltonian", "label", "offdiagonal_constant", "hamiltonian_power"]},
        "axis": {"type": "integer", "minimum": 0},
        "value": _num,
        "power": {"type": "integer", "minimum": 0},
        "id": {"type": "string"},
    },
}

_packet = {
    "type": "object", "additionalProperties": False, "required": ["position", "momentum", "momentum_width"],
    "properties": {"position": _num, "momentum": _num, "momentum_width": _pos, "id": {"type": "string"}},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pointerbasis experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["spectrum", "labels"],
    "properties": {
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "spectrum": {
            "type": "object", "additionalProperties": False,
            "required": ["omega0", "omega_max", "n_panels", "panel_order"],
            "properties": {
                "omega0": {"type": "number", "exclusiveMaximum": 0},
                "omega_max": _pos,
                "n_panels": {"type": "integer", "minimum": 1},
                "panel_order": {"type": "integer", "minimum": 2},
            },
        },
        "labels": {"type": "array", "minItems": 1,
                   "items": {"type": "array", "items": {"type": "integer"}, "minItems": 1}},
        "state": _state,
        "observable": _observable,
        "time": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "t_min": _pos, "t_max": _pos, "n": {"type": "integer", "minimum": 1},
                "spacing": {"enum": ["log", "linear"]},
                "include_zero": {"type": "boolean"},
                "mode": {"enum": ["auto", "plain", "filon"]},
                "dyadic_T": _pos,
                "dyadic_levels": {"type": "integer", "minimum": 2},
            },
        },
        "pointer": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "degeneracy_policy": {"enum": ["lexicographic", "secondary"]},
                "secondary": _matrix,
                "max_power": {"type": "integer", "minimum": 0},
                "tolerance": _pos,
            },
        },
        "wigner": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "g": _pos,
                "hbar_list": {"type": "array", "items": _pos, "minItems": 1},
                "L": _pos,
                "n_q": {"type": "integer", "minimum": 16},
                "n_p": {"type": "integer", "minimum": 16},
                "q_cut_cells": {"type": "number", "minimum": 0},
                "edge_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "omega_max": _pos,
                "n_panels": {"type": "integer", "minimum": 1},
                "panel_order": {"type": "integer", "minimum": 2},
                "packets": {"type": "array", "items": _packet, "minItems": 1},
                "observables": {"type": "array", "items": _observable},
                "max_power": {"type": "integer", "minimum": 0},
                "slope_threshold": _num,
            },
        },
        "check": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "suites": {"type": "array", "uniqueItems": True,
                           "items": {"enum": ["spectral", "dynamics", "pointer", "wigner", "ensemble",
                                              "scaling"]}},
                "n_random": {"type": "integer", "minimum": 1},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "time": {"t_min": 0.1, "t_max": 25.0, "n": 40, "spacing": "log", "include_zero": True, "mode": "auto",
             "dyadic_T": 2.0, "dyadic_levels": 4},
    "pointer": {"degeneracy_policy": "lexicographic", "max_power": 8, "tolerance": 1e-12},
    "wigner": {"g": 1.0, "hbar_list": [1.0, 0.5, 0.25], "L": 24.0, "n_q": 1024, "q_cut_cells": 2.0,
               "edge_fraction": 0.25, "omega_max": 18.0, "n_panels": 100, "panel_order": 10,
               "packets": [{"position": -8.0, "momentum": 3.0, "momentum_width": 0.3, "id": "packet"}],
               "observables": [{"type": "identity"}, {"type": "hamiltonian"}, {"type": "label"}],
               "max_power": 4, "slope_threshold": 0.9},
    "check": {"suites": ["spectral", "dynamics", "pointer", "wigner", "ensemble"], "n_random": 10},
    "observable": {"type": "identity"},
}

CONFIG_DIR = Path(__file__).parent / "configs"
DEMO_CONFIGS = ("default", "gaussian_offdiagonal", "diagonal", "constant_block", "broken_hermiticity")


class ConfigError(ValueError):
    """Config failed schema validation or could not be turned into objects."""


def default_config_path(name: str = "default") -> Path:
    return CONFIG_DIR / f"{name}.json"


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    return cfg


def with_defaults(cfg: dict) -> dict:
    """Validated copy of ``cfg`` with section defaults filled in."""
    validate_config(cfg)
    out = copy.deepcopy(cfg)
    for key, value in DEFAULTS.items():
        if isinstance(value, dict):
            merged = copy.deepcopy(value)
            merged.update(out.get(key, {}))
            out[key] = merged
        else:
            out.setdefault(key, value)
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return with_defaults(cfg)


# -- builders -----------------------------------------------------------------

def _complex_matrix(real, imag=None) -> np.ndarray:
    a = np.asarray(real, dtype=float)
    if imag is not None:
        b = np.asarray(imag, dtype=float)
        if b.shape != a.shape:
            raise ConfigError("matrix and matrix_imag shapes differ")
        return a + 1j * b
    return a.astype(complex)


def build_grid(cfg: dict):
    s = cfg["spectrum"]
    return make_spectrum_grid(s["omega0"], s["omega_max"], s["n_panels"], s["panel_order"])


def build_qnums(cfg: dict) -> QuantumNumbers:
    try:
        return QuantumNumbers(tuple(tuple(int(v) for v in lab) for lab in cfg["labels"]))
    except ValueError as exc:
        raise ConfigError(f"labels: {exc}") from None


def _profile(spec: dict):
    if spec["type"] == "constant":
        a = spec.get("amplitude", 1.0)
        return lambda omega: np.full(np.shape(omega), a, dtype=float)
    if spec["type"] == "gaussian":
        return gaussian_profile(spec["center"], spec["width"], spec.get("amplitude", 1.0))
    return poly_exp_profile(spec["power"], spec["rate"], spec.get("amplitude", 1.0))


def _term_matrix(term: dict, M: int) -> np.ndarray:
    if "matrix" in term:
        A = _complex_matrix(term["matrix"], term.get("matrix_imag"))
        if A.shape != (M, M):
            raise ConfigError(f"continuum matrix must be {M}x{M}")
        return A
    A = np.zeros((M, M), dtype=complex)
    label = term.get("label", 0)
    if label >= M:
        raise ConfigError(f"label index {label} out of range for {M} labels")
    A[label, label] = 1.0
    return A


def build_state(cfg: dict, spec: dict | None = None, grid=None, qnums=None) -> StateFn:
    """State from ``cfg["state"]`` (or ``spec``).

    ``packet``: pure state with bound amplitudes ``bound`` and continuum
    amplitudes ``profile(omega) exp(i (phase + omega delay))`` on ``label``.
    ``diagonal``: energy-diagonal state ``bound_block`` plus
    ``sum matrix * profile(omega)``.
    """
    spec = cfg.get("state") if spec is None else spec
    if spec is None:
        raise ConfigError("config has no state section")
    grid = build_grid(cfg) if grid is None else grid
    qnums = build_qnums(cfg) if qnums is None else qnums
    M, K = qnums.size, grid.size
    w = grid.continuum_nodes
    normalize = spec.get("normalize", True)
    terms = spec.get("continuum", [])
    if spec["kind"] == "packet":
        b = np.zeros(M, dtype=complex)
        if "bound" in spec:
            b = _complex_matrix([spec["bound"]], [spec["bound_imag"]] if "bound_imag" in spec else None)[0]
            if b.size != M:
                raise ConfigError(f"bound amplitudes need {M} entries")
        phi = np.zeros((K, M), dtype=complex)
        for t in terms:
            label = t.get("label", 0)
            if label >= M:
                raise ConfigError(f"label index {label} out of range for {M} labels")
            phi[:, label] += _profile(t["profile"])(w) * np.exp(1j * (t.get("phase", 0.0) + w * t.get("delay", 0.0)))
        rho = density_state(grid, qnums, b, phi, normalize=normalize)
    else:
        d0 = np.zeros((M, M), dtype=complex)
        if "bound_block" in spec:
            d0 = _complex_matrix(spec["bound_block"], spec.get("bound_block_imag"))
            if d0.shape != (M, M):
                raise ConfigError(f"bound_block must be {M}x{M}")
        dc = np.zeros((K, M, M), dtype=complex)
        for t in terms:
            dc += _profile(t["profile"])(w)[:, None, None] * _term_matrix(t, M)[None]
        rho = diagonal_state(grid, qnums, d0, dc, normalize=normalize)
    eps = spec.get("perturb_hermiticity", 0.0)
    if eps and M > 1:
        d0 = rho.block_d0.copy()
        d0[0, 1] += eps
        rho = rho.replace(block_d0=d0)
    return rho


def build_observable(cfg: dict, spec: dict | None = None, grid=None, qnums=None) -> ObservableFn:
    spec = cfg.get("observable", {"type": "identity"}) if spec is None else spec
    grid = build_grid(cfg) if grid is None else grid
    qnums = build_qnums(cfg) if qnums is None else qnums
    kind = spec["type"]
    if kind == "identity":
        return identity_observable(grid, qnums)
    if kind == "hamiltonian":
        return hamiltonian_observable(grid, qnums)
    if kind == "hamiltonian_power":
        return diagonal_power(hamiltonian_observable(grid, qnums), spec.get("power", 2))
    if kind == "label":
        axis = spec.get("axis", 0)
        if axis >= qnums.n_axes:
            raise ConfigError(f"label axis {axis} out of range")
        return label_observable(grid, qnums, axis)
    # kernel observable equal to `value` (times the label identity) on the continuum-continuum block
    M, K = qnums.size, grid.size
    cc = spec.get("value", 1.0) * np.broadcast_to(np.eye(M), (K, K, M, M))
    return ObservableFn(grid, qnums, block_cc=cc)


def observable_id(spec: dict) -> str:
    if "id" in spec:
        return spec["id"]
    extra = {"label": f"[{spec.get('axis', 0)}]", "hamiltonian_power": f"^{spec.get('power', 2)}"}
    return spec["type"] + extra.get(spec["type"], "")


def build_times(cfg: dict) -> np.ndarray:
    t = cfg["time"]
    if t["t_max"] <= t["t_min"]:
        raise ConfigError("time.t_max must exceed time.t_min")
    if t["spacing"] == "log":
        times = np.geomspace(t["t_min"], t["t_max"], t["n"])
    else:
        times = np.linspace(t["t_min"], t["t_max"], t["n"])
    return np.concatenate([[0.0], times]) if t["include_zero"] else times


def build_wigner_setup(cfg: dict, hbar: float):
    """Model, spectrum grid and phase-space grid of the ``wigner`` section at ``hbar``."""
    from .wigner_classical import make_phase_space_grid
    wc = cfg["wigner"]
    model = deltawell_model(wc["g"], hbar)
    spectrum = model.spectrum_grid(wc["omega_max"], wc["n_panels"], wc["panel_order"])
    grid = make_phase_space_grid(wc["L"], wc["n_q"], hbar, wc.get("n_p"), wc["q_cut_cells"], wc["edge_fraction"])
    return model, spectrum, grid


def build_packet_state(model, spectrum, packet: dict) -> StateFn:
    b, phi = wavepacket_amplitudes(model, spectrum, packet["position"], packet["momentum"],
                                   packet["momentum_width"])
    return density_state(spectrum, model.qnums, b, phi)
