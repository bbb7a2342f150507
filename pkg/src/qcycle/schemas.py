"""JSON schemas for the machine-readable CLI outputs."""

RATIONAL = {"type": "string", "pattern": r"^-?\d+/\d+$"}
SIGN = {"enum": [1, -1]}

INTERSECT = {
    "type": "object",
    "required": ["value", "negative", "p", "alpha", "chi_eps", "chi_eta_star", "chi_eta_star_eps1"],
    "properties": {
        "value": {"type": "integer"},
        "negative": {"type": "boolean"},
        "p": {"type": "integer"},
        "alpha": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "chi_eps": {"type": "array", "items": SIGN, "minItems": 2, "maxItems": 2},
        "chi_eta_star": SIGN,
        "chi_eta_star_eps1": SIGN,
        "classes": {"type": "array", "items": SIGN},
        "beta": {"type": "array", "items": {"type": "integer"}},
    },
}

THMC_ROW = {
    "type": "object",
    "required": ["p", "beta2", "beta3", "classes", "status"],
    "properties": {
        "p": {"type": "integer"},
        "beta2": {"type": "integer"},
        "beta3": {"type": "integer"},
        "classes": {"type": "array", "items": SIGN, "minItems": 3, "maxItems": 3},
        "status": {"enum": ["pass", "fail", "skip"]},
        "reason": {"type": "string"},
        "case": {"type": "string"},
        "triple_product": {"type": ["integer", "null"]},
        "scaled_derivative": {"anyOf": [RATIONAL, {"type": "null"}]},
        "alpha_prime": {"anyOf": [RATIONAL, {"type": "null"}]},
        "intermediate_ok": {"type": ["boolean", "null"]},
        "typo_reading": {"type": "boolean"},
    },
}

THMC_REPORT = {
    "type": "object",
    "required": ["summary", "rows"],
    "properties": {
        "summary": {
            "type": "object",
            "required": ["pass", "fail", "skip", "strict_p3_intro"],
            "properties": {
                "pass": {"type": "integer"},
                "fail": {"type": "integer"},
                "skip": {"type": "integer"},
                "strict_p3_intro": {"type": "boolean"},
            },
        },
        "rows": {"type": "array", "items": THMC_ROW},
    },
}

POLY = {"type": "array", "items": RATIONAL}

DENSITY = {
    "type": "object",
    "required": ["p", "T", "invariants", "representable", "F_tilde", "gamma_tilde", "f_T", "A_ST",
                 "alpha_prime"],
    "properties": {
        "p": {"type": "integer"},
        "T": {"type": "object", "required": ["betas", "classes"]},
        "invariants": {"type": "object", "required": ["xi_tilde", "sigma", "eta"]},
        "representable": {"type": "boolean"},
        "F_tilde": POLY,
        "gamma_tilde": POLY,
        "f_T": POLY,
        "A_ST": POLY,
        "alpha_prime": RATIONAL,
    },
}

COUNT = {
    "type": "object",
    "required": ["p", "results"],
    "properties": {
        "p": {"type": "integer"},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["raw", "normalized", "t", "method", "wall_ms"],
                "properties": {
                    "raw": {"type": "integer"},
                    "normalized": RATIONAL,
                    "t": {"type": "integer"},
                    "method": {"enum": ["naive", "columns", "rows"]},
                    "wall_ms": {"type": "number"},
                },
            },
        },
        "stabilized": {"anyOf": [RATIONAL, {"type": "null"}]},
    },
}

VERTEX = {
    "type": "object",
    "required": ["a", "b"],
    "properties": {"a": {"type": "integer"}, "b": RATIONAL},
}

TREE = {
    "type": "object",
    "required": ["p", "radius", "edges"],
    "properties": {
        "p": {"type": "integer"},
        "radius": {"type": "integer"},
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["u", "v"],
                "properties": {
                    "u": VERTEX,
                    "v": VERTEX,
                    "case": {"enum": ["i", "ii", "iii"]},
                    "m": {"type": "integer"},
                    "equation": {
                        "type": "object",
                        "required": ["template", "coefficients"],
                    },
                    "violations": {"type": "array", "items": {"type": "string"}},
                    "error": {"type": "string"},
                },
            },
        },
        "fixed_vertices": {"type": "array", "items": VERTEX},
        "fixed_midpoints": {"type": "array"},
    },
}

SWEEP_CONFIG = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "p_list": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "beta_max": {"type": "integer", "minimum": 1},
        "class_combos": {
            "anyOf": [
                {"const": "all"},
                {"type": "array", "items": {"type": "array", "items": SIGN, "minItems": 3, "maxItems": 3}},
            ]
        },
        "output": {"type": "string"},
        "format": {"enum": ["json", "table"]},
        "strict_p3_intro": {"type": "boolean"},
    },
}
