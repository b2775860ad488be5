"""JSON Schemas (draft 2020-12) for every JSON document the command line reads or writes."""

from __future__ import annotations

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_VECTOR = {"type": "array", "items": _NUM}

SIGNAL = {
    "type": "object",
    "required": ["t_begin", "t_end", "initial_mode", "switches"],
    "properties": {
        "schema": {"const": "switchstab/1"},
        "t_begin": _NUM,
        "t_end": _NUM,
        "initial_mode": {"type": "integer"},
        "switches": {
            "type": "array",
            "items": {"type": "array", "prefixItems": [_NUM, {"type": "integer"}], "minItems": 2, "maxItems": 2},
        },
    },
}

SIGNAL_CLASS = {
    # its own resource, so the recursive "#" below still means this schema when embedded
    "$id": "urn:switchstab:signal-class",
    "type": "object",
    "required": ["class"],
    "properties": {
        "class": {"enum": ["adt", "dwell", "ergodic", "graph", "intersection"]},
        "tau_d": {"type": "number", "exclusiveMinimum": 0},
        "n0": {"type": "integer", "minimum": 1},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "modes": {"type": "array", "items": {"type": "integer"}},
        "H": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "integer"}}},
        "members": {"type": "array", "items": {"$ref": "#"}},
    },
}

VALIDATION = {
    "type": "object",
    "required": ["schema", "kind", "ok", "spec", "reason", "witness"],
    "properties": {
        "schema": {"const": "switchstab/1"},
        "kind": {"const": "validation"},
        "ok": {"type": "boolean"},
        "spec": {"type": "string"},
        "reason": {"type": "string"},
    },
}

_SET_ESTIMATE = {
    "type": "object",
    "required": ["cluster_tol", "points"],
    "properties": {
        "cluster_tol": _NUM,
        "points": {"type": "array", "items": _VECTOR},
        "modes": {"type": "array", "items": {"type": "integer"}},
    },
}

LIMITS = {
    "type": "object",
    "required": ["schema", "kind", "omega", "omega_sharp", "sharp_to_omega"],
    "properties": {
        "schema": {"const": "switchstab/1"},
        "kind": {"const": "limits"},
        "omega": _SET_ESTIMATE,
        "omega_sharp": _SET_ESTIMATE,
        "sharp_to_omega": _NUM,
        "params": {"type": "object"},
    },
}

_SUBSPACE = {
    "type": "object",
    "required": ["ambient", "basis"],
    "properties": {"ambient": {"type": "integer"}, "basis": {"type": "array", "items": _VECTOR}},
}

CERTIFICATE = {
    "type": "object",
    "required": ["schema", "kind", "theorem", "verdict", "stability", "hypotheses", "predicted_limit"],
    "properties": {
        "schema": {"const": "switchstab/1"},
        "kind": {"const": "certificate"},
        "theorem": {"enum": ["convergence0", "ergodicconv", "convergence1", "convergence2", "guas1", "guas2",
                             "guas2bis", "corollary_final", "meagre_output"]},
        "class": {"type": "string"},
        "verdict": {"enum": ["Certified", "SupportedByEvidence", "Refuted"]},
        "stability": {"enum": ["GAS", "LAS", None]},
        "hypotheses": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "status", "analytic", "detail", "margin", "witness"],
                "properties": {
                    "name": {"type": "string"},
                    "status": {"enum": ["holds", "evidence", "fails"]},
                    "analytic": {"type": "boolean"},
                    "detail": {"type": "string"},
                    "margin": _NUM_OR_NULL,
                },
            },
        },
        "predicted_limit": {
            "type": ["object", "null"],
            "required": ["description"],
            "properties": {
                "description": {"type": "string"},
                "subspaces": {"type": "array", "items": _SUBSPACE},
                "points": {"type": "array", "items": _VECTOR},
            },
        },
        "conclusion": {"type": ["object", "null"]},
    },
}

SWEEP_SUMMARY = {
    "type": "object",
    "required": ["schema", "kind", "n_trials", "n_errors", "n_converged", "eps", "max_gain", "max_final_distance"],
    "properties": {
        "schema": {"const": "switchstab/1"},
        "kind": {"const": "stability_sweep"},
        "n_trials": {"type": "integer"},
        "n_errors": {"type": "integer"},
        "n_converged": {"type": "integer"},
        "eps": _NUM,
        "max_gain": _NUM_OR_NULL,
        "max_final_distance": _NUM_OR_NULL,
        "limit": {"type": "string"},
    },
}

CONFIG = {
    "type": "object",
    "required": ["schema"],
    "properties": {
        "schema": {"const": "switchstab/1"},
        "seed": {"type": "integer"},
        "system": {"type": "object"},
        "signal_class": SIGNAL_CLASS,
        "signal": {"type": "object"},
        "pair": {"type": "object"},
        "x0": _VECTOR,
        "options": {"type": "object"},
    },
}

BY_KIND = {
    "signal": SIGNAL,
    "validation": VALIDATION,
    "limits": LIMITS,
    "certificate": CERTIFICATE,
    "stability_sweep": SWEEP_SUMMARY,
    "config": CONFIG,
}
