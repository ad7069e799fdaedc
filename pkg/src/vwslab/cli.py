"""Config-driven command line front end.

Every experiment and probe is a subcommand taking a JSON config validated
against a strict schema (unknown keys rejected).  Reports are deterministic:
JSON with sorted keys plus a plot-ready CSV; the timestamp lives in a
separate metadata file so identical configs produce byte-identical reports.

Exit codes: 0 verdict pass, 2 verdict fail, 1 error (bad config, I/O, ...).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
import warnings

import numpy as np
from jsonschema import ValidationError, validate

from . import distributions as dist
from .grids import BoundaryDecayWarning
from .harness import (
    COEFF_SCALE_EPS_GRID,
    DEFAULT_EPS_GRID,
    build_net,
    fit_loglog,
    fit_powerlaw,
    problem_for_eps,
    run_classical,
    run_consistency,
    run_existence,
    run_uniqueness,
    template_by_name,
)
from .mollifiers import (
    DEFAULT_COEFF_SCALE,
    IDENTITY_SCALE,
    EpsilonScale,
    pair_by_name,
    regularization_error,
    regularize,
)
from .psido import (
    bessel_symbol,
    composition_residual,
    conjugation_identity_error,
    conjugation_test_sets,
    cv_bound_probe,
    garding_probe,
    multiplication_symbol,
    multiplier_symbol,
    separable_symbol,
)
from .solver import solve
from .functions import sech_fn
from .grids import field_from_callable

FORMAT_VERSION = "1"


def bundled_config_path(name: str) -> str:
    """Filesystem path of a bundled example config."""
    from importlib.resources import files

    path = files("vwslab").joinpath("configs", name)
    return str(path)

# ---------------------------------------------------------------------------
# Config schemas (strict: unknown keys rejected)

_SCALE_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["identity", "power", "iterated_log"]},
        "power": {"type": "number"},
        "depth": {"type": "integer", "minimum": 1, "maximum": 4},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_EPS_GRID_SCHEMA = {
    "type": "array",
    "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "minItems": 5,
}

SCHEMAS = {
    "regularize": {
        "type": "object",
        "properties": {
            "distribution": {"type": "object"},
            "pair": {"enum": ["gaussian", "flat"]},
            "eps_grid": _EPS_GRID_SCHEMA,
            "measure": {"enum": ["norm", "error"]},
            "weight_power": {"type": "integer", "minimum": 0},
            "deriv_order": {"type": "integer", "minimum": 0},
            "expect_slope": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "required": ["distribution", "pair", "measure"],
        "additionalProperties": False,
    },
    "solve": {
        "type": "object",
        "properties": {
            "template": {"type": "string"},
            "eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "pair": {"enum": ["gaussian", "flat"]},
            "scale": _SCALE_SCHEMA,
        },
        "required": ["template", "eps"],
        "additionalProperties": False,
    },
    "net": {
        "type": "object",
        "properties": {
            "template": {"type": "string"},
            "eps_grid": _EPS_GRID_SCHEMA,
            "pair": {"enum": ["gaussian", "flat"]},
            "scale": _SCALE_SCHEMA,
            "ladder": {
                "type": "array",
                "items": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0, "maximum": 3},
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
        },
        "required": ["template"],
        "additionalProperties": False,
    },
    "existence": {
        "type": "object",
        "properties": {
            "template": {"type": "string"},
            "eps_grid": _EPS_GRID_SCHEMA,
            "pair": {"enum": ["gaussian", "flat"]},
            "scale": _SCALE_SCHEMA,
        },
        "required": ["template"],
        "additionalProperties": False,
    },
    "uniqueness": {
        "type": "object",
        "properties": {
            "template": {"type": "string"},
            "q": {"type": "number", "minimum": 0},
            "eps_grid": _EPS_GRID_SCHEMA,
            "pair": {"enum": ["gaussian", "flat"]},
        },
        "required": ["template", "q"],
        "additionalProperties": False,
    },
    "consistency": {
        "type": "object",
        "properties": {
            "template": {"type": "string"},
            "eps_grid": _EPS_GRID_SCHEMA,
            "pair": {"enum": ["gaussian", "flat"]},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["template"],
        "additionalProperties": False,
    },
    "classical": {
        "type": "object",
        "properties": {
            "template": {"type": "string"},
            "m": {"type": "number"},
            "s": {"type": "number"},
            "eps_grid": _EPS_GRID_SCHEMA,
            "pair": {"enum": ["gaussian", "flat"]},
        },
        "required": ["template"],
        "additionalProperties": False,
    },
    "conjugate-check": {
        "type": "object",
        "properties": {
            "s_values": {
                "type": "array",
                "items": {"type": "integer", "minimum": 0},
                "minItems": 1,
            },
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["s_values"],
        "additionalProperties": False,
    },
    "psido-probe": {
        "type": "object",
        "properties": {
            "probe": {"enum": ["cv", "garding", "composition"]},
            "symbol": {"enum": ["bessel1", "bessel2", "sech", "sech_bessel1",
                                "xi", "xi2"]},
            "s": {"type": "number"},
            "expansion_order": {"type": "integer", "minimum": 1},
            "points": {"type": "integer", "minimum": 16},
        },
        "required": ["probe", "symbol"],
        "additionalProperties": False,
    },
}


def _scale_from_config(cfg, default):
    if cfg is None:
        return default
    return EpsilonScale(
        kind=cfg["kind"],
        power=cfg.get("power", 1.0),
        depth=cfg.get("depth", 1),
    )


def _probe_symbol(name):
    import sympy as sp

    xi = sp.Symbol("xi", real=True)
    if name == "bessel1":
        return bessel_symbol(1)
    if name == "bessel2":
        return bessel_symbol(2)
    if name == "sech":
        return multiplication_symbol(sech_fn())
    if name == "sech_bessel1":
        return separable_symbol(sech_fn(), sp.sqrt(1 + xi ** 2), 1)
    if name == "xi":
        return multiplier_symbol(xi, 1)
    if name == "xi2":
        return multiplier_symbol(xi ** 2, 2)
    raise ValueError(f"unknown probe symbol {name!r}")


# ---------------------------------------------------------------------------
# Subcommand implementations: each returns (report dict, csv rows, exit code)


def _cmd_regularize(cfg, jobs):
    u = dist.from_json(cfg["distribution"])
    pair = pair_by_name(cfg["pair"])
    eps_grid = cfg.get("eps_grid", list(COEFF_SCALE_EPS_GRID))
    if cfg["measure"] == "norm":
        from .grids import Grid, l2_norm
        from .distributions import sample

        grid = Grid(40.0, 4096)
        values = [
            l2_norm(sample(regularize(u, pair, IDENTITY_SCALE, e), grid))
            for e in eps_grid
        ]
    else:
        values = [
            regularization_error(
                dist.as_function(u), pair, e,
                cfg.get("weight_power", 0), cfg.get("deriv_order", 0),
            )
            for e in eps_grid
        ]
    fit = fit_loglog(eps_grid, values)
    report = {
        "measure": cfg["measure"],
        "eps": list(eps_grid),
        "values": values,
        "fit": dataclasses.asdict(fit),
    }
    code = 0
    if "expect_slope" in cfg:
        lo, hi = cfg["expect_slope"]
        report["expected_slope"] = [lo, hi]
        code = 0 if lo <= fit.slope <= hi else 2
    rows = [("eps", "value")] + list(zip(eps_grid, values))
    return report, rows, code


def _cmd_solve(cfg, jobs):
    template = template_by_name(cfg["template"])
    pair = pair_by_name(cfg.get("pair", "gaussian"))
    scale = _scale_from_config(cfg.get("scale"), DEFAULT_COEFF_SCALE)
    ladder = ((0, 0), (1, 1), (2, 2))
    spec = problem_for_eps(
        template, pair, scale, IDENTITY_SCALE, cfg["eps"], ladder
    )
    report_obj = solve(spec)
    rows = [("t", "m", "M", "norm")]
    for (m, big_m), vals in sorted(report_obj.norms.items()):
        for t, v in zip(report_obj.t_nodes, vals):
            rows.append((t, m, big_m, v))
    report = {
        "template": template.name,
        "eps": cfg["eps"],
        "aborted": report_obj.aborted,
        "aborted_t": report_obj.aborted_t,
        "steps": report_obj.steps,
        "t_nodes": list(map(float, report_obj.t_nodes)),
        "norms": {
            f"H{m},{big_m}": list(map(float, vals))
            for (m, big_m), vals in sorted(report_obj.norms.items())
        },
    }
    return report, rows, 2 if report_obj.aborted else 0


def _cmd_net(cfg, jobs):
    template = template_by_name(cfg["template"])
    pair = pair_by_name(cfg.get("pair", "gaussian"))
    scale = _scale_from_config(cfg.get("scale"), DEFAULT_COEFF_SCALE)
    eps_grid = tuple(cfg.get("eps_grid", COEFF_SCALE_EPS_GRID))
    ladder = tuple(tuple(p) for p in cfg.get("ladder", [(0, 0), (1, 1)]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryDecayWarning)
        net = build_net(
            template, eps_grid, pair, scale, norm_ladder=ladder, jobs=jobs
        )
        fits = {mm: fit_powerlaw(net, *mm) for mm in ladder}
    rows = [("eps", "t", "m", "M", "norm")]
    for eps, rep in zip(net.eps_values, net.reports):
        for (m, big_m), vals in sorted(rep.norms.items()):
            for t, v in zip(rep.t_nodes, vals):
                rows.append((eps, t, m, big_m, v))
    report = {
        "template": template.name,
        "eps": list(eps_grid),
        "aborted_eps": list(net.aborted_eps),
        "fits": {
            f"H{m},{big_m}": dataclasses.asdict(fit)
            for (m, big_m), fit in fits.items()
        },
    }
    ok = not net.aborted_eps and all(f.is_moderate for f in fits.values())
    return report, rows, 0 if ok else 2


def _cmd_existence(cfg, jobs):
    template = template_by_name(cfg["template"])
    pair = pair_by_name(cfg.get("pair", "gaussian"))
    scale = _scale_from_config(cfg.get("scale"), DEFAULT_COEFF_SCALE)
    eps_grid = tuple(cfg.get("eps_grid", COEFF_SCALE_EPS_GRID))
    res = run_existence(template, eps_grid, pair, scale)
    report = {
        "template": res["template"],
        "eps": res["eps"],
        "aborted_eps": res["aborted_eps"],
        "verdict": res["verdict"],
        "fits": {
            f"H{m},{big_m}": dataclasses.asdict(fit)
            for (m, big_m), fit in res["fits"].items()
        },
    }
    rows = [("m", "M", "slope", "r_squared", "verdict")]
    for (m, big_m), fit in sorted(res["fits"].items()):
        rows.append((m, big_m, fit.slope, fit.r_squared, fit.verdict))
    return report, rows, 0 if res["verdict"] == "moderate" else 2


def _cmd_uniqueness(cfg, jobs):
    template = template_by_name(cfg["template"])
    pair = pair_by_name(cfg.get("pair", "gaussian"))
    eps_grid = tuple(cfg.get("eps_grid", DEFAULT_EPS_GRID))
    res = run_uniqueness(template, cfg["q"], eps_grid, pair)
    report = {
        "template": res["template"],
        "q": res["q"],
        "verdict": res["verdict"],
        "fits": {
            f"H{m},{big_m}": dataclasses.asdict(fit)
            for (m, big_m), fit in res["fits"].items()
        },
    }
    rows = [("m", "M", "decay_slope")]
    for (m, big_m), fit in sorted(res["fits"].items()):
        rows.append((m, big_m, -fit.slope))
    return report, rows, 0 if res["verdict"] == "negligible" else 2


def _cmd_consistency(cfg, jobs):
    template = template_by_name(cfg["template"])
    pair = pair_by_name(cfg.get("pair", "gaussian"))
    eps_grid = tuple(cfg.get("eps_grid", DEFAULT_EPS_GRID))
    res = run_consistency(
        template, eps_grid, pair, tolerance=cfg.get("tolerance", 1e-3)
    )
    rows = [("eps", "error")] + list(zip(res["eps"], res["errors"]))
    report = {k: res[k] for k in
              ("template", "pair", "eps", "errors", "monotone",
               "final_error", "verdict")}
    return report, rows, 0 if res["verdict"] == "consistent" else 2


def _cmd_classical(cfg, jobs):
    template = template_by_name(cfg["template"])
    pair = pair_by_name(cfg.get("pair", "gaussian"))
    eps_grid = tuple(cfg.get("eps_grid", COEFF_SCALE_EPS_GRID))
    res = run_classical(
        template, cfg.get("m", 2), cfg.get("s", 1), eps_grid, pair
    )
    report = dict(res)
    rows = [("eps", "ratio")]
    if "ratios" in res:
        rows += list(zip(eps_grid, res["ratios"]))
    # the non-decaying template is *supposed* to land outside the regime
    expected = "outside-regime" if not res["decay_ok"] else "uniform"
    return report, rows, 0 if res["verdict"] == expected else 2


def _cmd_conjugate_check(cfg, jobs):
    from .grids import Grid

    tol = cfg.get("tolerance", 1e-8)
    grid = Grid(40.0, 2048)
    v = field_from_callable(
        grid, lambda x: (1 + 0.3 * x) * np.exp(-x ** 2 / 2)
    )
    rows = [("set", "s", "relative_error")]
    worst = 0.0
    for k, coeffs in enumerate(conjugation_test_sets()):
        for s in cfg["s_values"]:
            err = conjugation_identity_error(coeffs, s, 0.0, v)
            rows.append((k, s, err))
            worst = max(worst, err)
    report = {
        "s_values": list(cfg["s_values"]),
        "tolerance": tol,
        "worst_error": worst,
        "errors": [
            {"set": r[0], "s": r[1], "error": r[2]} for r in rows[1:]
        ],
    }
    return report, rows, 0 if worst < tol else 2


def _cmd_psido_probe(cfg, jobs):
    from .grids import Grid

    p = _probe_symbol(cfg["symbol"])
    n = cfg.get("points", 512)
    coarse, fine = Grid(20.0, n), Grid(20.0, 2 * n)
    probe = cfg["probe"]
    if probe == "cv":
        s = cfg.get("s", 0.0)
        a, b = cv_bound_probe(p, s, coarse), cv_bound_probe(p, s, fine)
    elif probe == "garding":
        a, b = garding_probe(p, coarse), garding_probe(p, fine)
    else:
        big_n = cfg.get("expansion_order", 2)
        q2 = multiplication_symbol(sech_fn())
        a = composition_residual(p, q2, big_n, coarse)
        b = composition_residual(p, q2, big_n, fine)
    denom = max(abs(a), abs(b), 1e-30)
    stable = abs(a - b) / denom < 0.05 or max(abs(a), abs(b)) < 1e-9
    report = {
        "probe": probe,
        "symbol": cfg["symbol"],
        "coarse_value": a,
        "fine_value": b,
        "refinement_stable": stable,
    }
    rows = [("resolution", "value"), (n, a), (2 * n, b)]
    ok = stable and (probe != "garding" or min(a, b) > -1e-10)
    return report, rows, 0 if ok else 2


COMMANDS = {
    "regularize": _cmd_regularize,
    "solve": _cmd_solve,
    "net": _cmd_net,
    "existence": _cmd_existence,
    "uniqueness": _cmd_uniqueness,
    "consistency": _cmd_consistency,
    "classical": _cmd_classical,
    "conjugate-check": _cmd_conjugate_check,
    "psido-probe": _cmd_psido_probe,
}


# ---------------------------------------------------------------------------
# Report output


def _jsonify(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), -float("inf"))):
        return repr(obj)
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not serializable: {obj!r}")


def _sanitize(obj):
    """Replace non-finite floats so the JSON stays strictly standard."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not np.isfinite(obj):
        return repr(float(obj))
    return obj


def write_report(out_dir, name, report, rows, fmt):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, f"{name}_report.json")
        with open(path, "w") as fh:
            json.dump(_sanitize(report), fh, sort_keys=True, indent=2,
                      default=_jsonify)
            fh.write("\n")
        paths.append(path)
    if fmt in ("csv", "both") and rows:
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        paths.append(path)
    meta = {
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "format_version": FORMAT_VERSION,
    }
    with open(os.path.join(out_dir, f"{name}_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return paths


def _offending_key(exc: ValidationError) -> str:
    if exc.validator == "additionalProperties":
        # message looks like: Additional properties are not allowed ('x' ...)
        import re

        m = re.search(r"\('([^']+)'", exc.message)
        if m:
            return m.group(1)
    return "/".join(str(p) for p in exc.absolute_path) or "(root)"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vwslab",
        description="Very weak solution laboratory: experiments and probes",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="reports")
        p.add_argument("--format", choices=("json", "csv", "both"),
                       default="both")
        p.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        validate(cfg, SCHEMAS[args.command])
    except ValidationError as exc:
        print(
            f"error: invalid config key {_offending_key(exc)!r}: {exc.message}",
            file=sys.stderr,
        )
        return 1

    try:
        report, rows, code = COMMANDS[args.command](cfg, args.jobs)
    except (ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    full = {
        "command": args.command,
        "config": cfg,
        "format_version": FORMAT_VERSION,
        "report": report,
    }
    stem = os.path.splitext(os.path.basename(args.config))[0]
    write_report(args.out, f"{args.command}_{stem}", full, rows, args.format)
    print(f"{args.command}: {'pass' if code == 0 else 'fail'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
