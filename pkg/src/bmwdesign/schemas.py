"""JSON Schemas for the reports written by the command-line tool."""

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}

BALANCE_ROW = {
    "type": "object",
    "required": [
        "name",
        "control_mean",
        "treatment_mean",
        "control_variance",
        "treatment_variance",
        "smd",
    ],
    "properties": {
        "name": {"type": "string"},
        "control_mean": _NUM,
        "treatment_mean": _NUM,
        "control_variance": {"type": "number", "minimum": 0},
        "treatment_variance": {"type": "number", "minimum": 0},
        "smd": _NUM_OR_NULL,
    },
}

KDE_SUMMARY = {
    "type": "object",
    "required": ["partition", "group", "bandwidth", "integral", "points"],
    "properties": {
        "partition": {"enum": ["random", "bmw"]},
        "group": {"enum": ["A", "B"]},
        "bandwidth": {"type": "number", "exclusiveMinimum": 0},
        "integral": _NUM,
        "points": {"type": "integer", "minimum": 2},
    },
}

DESIGN_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "delta_k",
        "best_repetition",
        "M",
        "seed",
        "n_subjects",
        "n_per_group",
        "features",
        "excluded_features",
        "pairs",
        "propensity",
        "scores",
        "balance_table",
        "trace",
        "config",
    ],
    "properties": {
        "delta_k": {"type": "number", "minimum": 0},
        "best_repetition": {"type": "integer", "minimum": 1},
        "M": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "n_subjects": {"type": "integer"},
        "n_per_group": {"type": "integer"},
        "features": {"type": "array", "items": {"type": "string"}},
        "excluded_features": {"type": "array", "items": {"type": "string"}},
        "pairs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["control_id", "treatment_id", "delta"],
                "properties": {
                    "control_id": {"type": "string"},
                    "treatment_id": {"type": "string"},
                    "delta": {"type": "number", "minimum": 0},
                },
            },
        },
        "propensity": {
            "type": "object",
            "required": ["intercept", "coefficients", "converged"],
        },
        "scores": {
            "type": "object",
            "additionalProperties": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        },
        "balance_table": {"type": "array", "items": BALANCE_ROW},
        "random_split_balance_table": {"type": "array", "items": BALANCE_ROW},
        "kde": {"type": "array", "items": KDE_SUMMARY},
        "trace": {
            "type": "array",
            "items": {"type": "array", "prefixItems": [{"type": "integer"}, _NUM], "minItems": 2, "maxItems": 2},
        },
        "nonconverged_fits": {"type": "integer", "minimum": 0},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "config": {"type": "object"},
    },
}

SWEEP_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["points", "elbow", "epsilon", "seed"],
    "properties": {
        "points": {"type": "array", "items": {"type": "object", "required": ["M", "min_delta_k"]}},
        "elbow": {"type": ["integer", "null"]},
        "epsilon": _NUM,
        "seed": {"type": "integer"},
    },
}

EFFECT_ESTIMATE = {
    "type": "object",
    "required": ["method", "ate", "sd_control", "sd_treatment", "pooled_sd", "n_per_group"],
    "properties": {
        "method": {"enum": ["difference_in_means", "regression_adjusted", "paired"]},
        "ate": _NUM,
        "sd_control": {"type": "number", "minimum": 0},
        "sd_treatment": {"type": "number", "minimum": 0},
        "pooled_sd": {"type": ["number", "null"], "minimum": 0},
        "n_per_group": {"type": "integer", "minimum": 1},
    },
}

EFFECT_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["difference_in_means"],
    "properties": {
        "difference_in_means": EFFECT_ESTIMATE,
        "regression_adjusted": EFFECT_ESTIMATE,
        "paired": EFFECT_ESTIMATE,
        "comparison": {
            "type": "object",
            "required": ["matched_ate", "paired_ate", "sd_reduction_pct"],
            "properties": {"sd_reduction_pct": _NUM_OR_NULL},
        },
    },
}

BENCH_RESULT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "replications",
        "sd_ate_random",
        "sd_ate_bmw",
        "mse_random",
        "mse_bmw",
        "mse_paired",
        "sd_reduction_pct",
        "mse_improvement_pct",
    ],
    "properties": {
        "replications": {"type": "integer", "minimum": 2},
        "sd_ate_random": {"type": "number", "minimum": 0},
        "sd_ate_bmw": {"type": "number", "minimum": 0},
        "sd_ate_paired": {"type": "number", "minimum": 0},
        "mse_random": {"type": "number", "minimum": 0},
        "mse_bmw": {"type": "number", "minimum": 0},
        "mse_paired": {"type": "number", "minimum": 0},
        "sd_reduction_pct": _NUM_OR_NULL,
        "mse_improvement_pct": _NUM_OR_NULL,
    },
}
