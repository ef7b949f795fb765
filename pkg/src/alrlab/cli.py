"""Batch front end: JSON experiment specs in, CSV/JSON curves and manifests out.

Every run reads a single JSON document (no environment configuration), emits
deterministic output files plus a run manifest, and exits 0 on success, 2 on
spec validation failure, 3 on a computation error.  CSV numbers carry 17
significant digits; complex columns split into _re/_im; grid sweeps record
per-point failures as marker rows instead of truncating the file.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import mpmath
import numpy
import scipy

from . import __version__
from .errors import AlrError, SpecValidationError
from .fields import dissipation_energy, eval_field
from .np_spectrum import (
    np_alpha,
    np_eigenpair,
    np_field_values,
    solve_nocore_via_np,
)
from .resonance import (
    _assemble_curve,
    dichotomy_experiment,
    find_resonant_pair,
    sweep_point,
)
from .scaled import ScaledComplex
from .scatter import (
    PlasmonConfig,
    SourceCoefficients,
    point_source_coefficients,
    solve,
    solve_nocore,
)

COMMANDS = ("solve", "energy-curve", "find-resonance", "sweep-condition",
            "dichotomy", "np-spectrum", "np-crosscheck")

_ALLOWED_KEYS: dict[str, frozenset[str]] = {
    "solve": frozenset({"command", "config", "source", "points", "output"}),
    "energy-curve": frozenset({"command", "config", "source", "grid", "output"}),
    "find-resonance": frozenset({"command", "config", "n0", "initial", "output"}),
    "sweep-condition": frozenset({"command", "config", "n0", "grid",
                                  "quantity", "output"}),
    "dichotomy": frozenset({"command", "config", "n0_values",
                            "source_radius_inside", "source_radius_outside",
                            "grid", "probe_factor", "probe_samples", "output"}),
    "np-spectrum": frozenset({"command", "config", "grid", "m", "output"}),
    "np-crosscheck": frozenset({"command", "config", "source", "points",
                                "output"}),
}

_QUANTITY_ALIASES = {
    "condition-nocore": "condition_nocore",
    "condition_nocore": "condition_nocore",
    "condition-coreshell": "condition_coreshell",
    "condition_coreshell": "condition_coreshell",
    "denominator": "denominator",
}

_CONFIG_KEYS = ("dim", "k", "r_e", "eps_s", "delta", "r_i", "eps_c")


# ---------------------------------------------------------------------------
# formatting and file emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, payload: Mapping[str, Any]) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: Sequence[str],
               rows: Sequence[Sequence[str]],
               sections: Sequence[tuple[str, Sequence[str],
                                        Sequence[Sequence[str]]]] = ()) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    for title, sec_header, sec_rows in sections:
        buf.write(f"\n# {title}\n")
        w.writerow(sec_header)
        for row in sec_rows:
            w.writerow(row)
    _write_text(path, buf.getvalue())


def _error_row(first: str, message: str, width: int) -> list[str]:
    return [first, f"error:{message}"] + [""] * (width - 2)


# ---------------------------------------------------------------------------
# spec ingestion
# ---------------------------------------------------------------------------

def _load_spec(path: Path) -> dict[str, Any]:
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecValidationError("spec", f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SpecValidationError("spec", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecValidationError("spec", "top level must be a JSON object")
    return doc


def _check_keys(command: str, doc: Mapping[str, Any]) -> None:
    allowed = _ALLOWED_KEYS[command]
    for key in doc:
        if key not in allowed:
            raise SpecValidationError(
                key, f"unknown field for {command}; allowed: "
                     f"{', '.join(sorted(allowed))}")
    if "command" in doc and doc["command"] != command:
        raise SpecValidationError(
            "command", f"spec names {doc['command']!r} but the CLI was "
                       f"invoked with {command!r}")


def _need(doc: Mapping[str, Any], field: str) -> Any:
    if field not in doc:
        raise SpecValidationError(field, "required field is missing")
    return doc[field]


def _as_number(field: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecValidationError(field, f"expected a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise SpecValidationError(field, f"must be finite, got {value!r}")
    return float(value)


def _as_int(field: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecValidationError(field, f"expected an integer, got {value!r}")
    return value


def _parse_config(doc: Mapping[str, Any]) -> PlasmonConfig:
    raw = _need(doc, "config")
    if not isinstance(raw, dict):
        raise SpecValidationError("config", "must be an object")
    for key in raw:
        if key not in _CONFIG_KEYS:
            raise SpecValidationError(
                f"config.{key}", f"unknown field; allowed: {', '.join(_CONFIG_KEYS)}")
    kwargs: dict[str, Any] = {}
    for key in ("k", "r_e", "eps_s", "delta", "r_i", "eps_c"):
        if key in raw:
            kwargs[key] = _as_number(f"config.{key}", raw[key])
    if "dim" in raw:
        kwargs["dim"] = _as_int("config.dim", raw["dim"])
    for key in ("dim", "k", "r_e", "eps_s"):
        if key not in kwargs:
            raise SpecValidationError(f"config.{key}", "required field is missing")
    try:
        return PlasmonConfig(**kwargs)
    except ValueError as exc:
        raise SpecValidationError("config", str(exc)) from exc


def _parse_source(doc: Mapping[str, Any],
                  config: PlasmonConfig) -> SourceCoefficients:
    raw = _need(doc, "source")
    if not isinstance(raw, dict):
        raise SpecValidationError("source", "must be an object")
    kind = raw.get("type")
    try:
        if kind == "point":
            radius = _as_number("source.radius", _need(raw, "radius"))
            strength = _as_number("source.strength", raw.get("strength", 1.0))
            n_max = _as_int("source.n_max", raw.get("n_max", 40))
            min_order = _as_int("source.min_order", raw.get("min_order", 0))
            extra = set(raw) - {"type", "radius", "strength", "n_max", "min_order"}
            if extra:
                raise SpecValidationError(
                    f"source.{sorted(extra)[0]}", "unknown field for a point source")
            return point_source_coefficients(
                config.dim, config.k, radius, strength=strength,
                n_max=n_max, min_order=min_order)
        if kind == "modes":
            support = _as_number("source.support_radius",
                                 _need(raw, "support_radius"))
            entries = _need(raw, "coeffs")
            extra = set(raw) - {"type", "support_radius", "coeffs"}
            if extra:
                raise SpecValidationError(
                    f"source.{sorted(extra)[0]}", "unknown field for a mode list")
            if not isinstance(entries, list) or not entries:
                raise SpecValidationError("source.coeffs",
                                          "must be a nonempty list")
            coeffs: dict[int, ScaledComplex] = {}
            for i, ent in enumerate(entries):
                if not isinstance(ent, dict):
                    raise SpecValidationError(
                        f"source.coeffs[{i}]", "must be an object {n, re, im}")
                n = _as_int(f"source.coeffs[{i}].n", _need(ent, "n"))
                re = _as_number(f"source.coeffs[{i}].re", ent.get("re", 0.0))
                im = _as_number(f"source.coeffs[{i}].im", ent.get("im", 0.0))
                if n in coeffs:
                    raise SpecValidationError(
                        f"source.coeffs[{i}].n", f"duplicate mode {n}")
                coeffs[n] = ScaledComplex.from_complex(complex(re, im))
            return SourceCoefficients(dim=config.dim, coeffs=coeffs,
                                      support_radius=support)
    except ValueError as exc:
        raise SpecValidationError("source", str(exc)) from exc
    raise SpecValidationError("source.type", "must be 'point' or 'modes'")


def _parse_grid(doc: Mapping[str, Any],
                parameters: Sequence[str]) -> tuple[str, tuple[float, ...]]:
    raw = _need(doc, "grid")
    if not isinstance(raw, dict):
        raise SpecValidationError("grid", "must be an object")
    parameter = raw.get("parameter")
    if parameter not in parameters:
        raise SpecValidationError(
            "grid.parameter", f"must be one of {', '.join(parameters)}")
    if "values" in raw:
        extra = set(raw) - {"parameter", "values"}
        if extra:
            raise SpecValidationError(
                f"grid.{sorted(extra)[0]}",
                "explicit values exclude start/stop/count/spacing")
        values = raw["values"]
        if not isinstance(values, list) or not values:
            raise SpecValidationError("grid.values", "must be a nonempty list")
        xs = tuple(_as_number(f"grid.values[{i}]", v)
                   for i, v in enumerate(values))
    else:
        extra = set(raw) - {"parameter", "start", "stop", "count", "spacing"}
        if extra:
            raise SpecValidationError(f"grid.{sorted(extra)[0]}", "unknown field")
        start = _as_number("grid.start", _need(raw, "start"))
        stop = _as_number("grid.stop", _need(raw, "stop"))
        count = _as_int("grid.count", _need(raw, "count"))
        spacing = raw.get("spacing", "linear")
        if count < 2:
            raise SpecValidationError("grid.count", "need at least two points")
        if spacing == "linear":
            xs = tuple(start + (stop - start) * i / (count - 1)
                       for i in range(count))
        elif spacing == "log":
            if start <= 0.0 or stop <= 0.0:
                raise SpecValidationError(
                    "grid.spacing", "log spacing needs positive endpoints")
            la, lb = math.log(start), math.log(stop)
            xs = tuple(math.exp(la + (lb - la) * i / (count - 1))
                       for i in range(count))
        else:
            raise SpecValidationError("grid.spacing",
                                      "must be 'linear' or 'log'")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise SpecValidationError("grid", "points must be strictly increasing")
    return parameter, xs


def _parse_points(doc: Mapping[str, Any],
                  dim: int) -> tuple[tuple[float, ...], ...]:
    raw = doc.get("points", [])
    if not isinstance(raw, list):
        raise SpecValidationError("points", "must be a list of coordinates")
    pts: list[tuple[float, ...]] = []
    for i, ent in enumerate(raw):
        if not isinstance(ent, list) or len(ent) != dim:
            raise SpecValidationError(
                f"points[{i}]", f"must be a list of {dim} coordinates")
        pts.append(tuple(_as_number(f"points[{i}][{j}]", v)
                         for j, v in enumerate(ent)))
    return tuple(pts)


def _resolve_output(doc: Mapping[str, Any], command: str,
                    outdir: Path) -> tuple[Path, str]:
    raw = doc.get("output", {})
    if not isinstance(raw, dict):
        raise SpecValidationError("output", "must be an object")
    extra = set(raw) - {"path", "format"}
    if extra:
        raise SpecValidationError(f"output.{sorted(extra)[0]}", "unknown field")
    fmt = raw.get("format", "json")
    if fmt not in ("csv", "json"):
        raise SpecValidationError("output.format", "must be 'csv' or 'json'")
    path = raw.get("path", f"{command}.{fmt}")
    if not isinstance(path, str) or not path:
        raise SpecValidationError("output.path", "must be a nonempty string")
    p = Path(path)
    return (p if p.is_absolute() else outdir / p), fmt


# ---------------------------------------------------------------------------
# worker-pool plumbing (module-level callables so payloads pickle)
# ---------------------------------------------------------------------------

def _map_points(fn: Callable[[Any], Any], payloads: Sequence[Any],
                jobs: int) -> list[Any]:
    if jobs <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    workers = min(jobs, len(payloads))
    chunk = max(1, len(payloads) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads, chunksize=chunk))


def _sweep_worker(payload: tuple) -> tuple[complex, str | None]:
    quantity, parameter, x, template, n0, source = payload
    return sweep_point(quantity, parameter, x, template, n0, source)


def _np_worker(payload: tuple) -> tuple[tuple[complex, ...] | None, str | None]:
    m, k, R = payload
    try:
        pair = np_eigenpair(m, k, R)
        alpha = np_alpha(m, k, R)
    except (AlrError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return (pair.lam, pair.chi, pair.gamma, alpha, pair.funk_hecke), None


def _dichotomy_worker(payload: tuple):
    (template, n0, inside, outside, k_grid, probe_factor,
     probe_samples) = payload
    kwargs: dict[str, Any] = {"probe_factor": probe_factor,
                              "probe_samples": probe_samples}
    if k_grid is not None:
        kwargs["k_grid"] = k_grid
    try:
        return dichotomy_experiment(template, (n0,), inside, outside,
                                    **kwargs), None
    except (AlrError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# command runners; each returns (primary payload dict, csv writer thunk)
# ---------------------------------------------------------------------------

def _complex_cols(prefix: str, v: complex) -> dict[str, float]:
    return {f"{prefix}_re": v.real, f"{prefix}_im": v.imag}


def _run_solve(doc: Mapping[str, Any], outdir: Path,
               jobs: int) -> tuple[Path, list[Path]]:
    config = _parse_config(doc)
    source = _parse_source(doc, config)
    points = _parse_points(doc, config.dim)
    out_path, fmt = _resolve_output(doc, "solve", outdir)

    sol = solve(config, source)
    energy = dissipation_energy(sol)
    e_by_mode = dict(zip(energy.orders, energy.per_mode))
    fields = [eval_field(sol, p) for p in points]

    mode_rows = []
    for rec in sol.modes:
        row: dict[str, Any] = {"n": rec.n}
        for name in ("a", "b", "c", "d", "e", "g"):
            row.update(_complex_cols(name, getattr(rec, name).to_complex()))
        row["energy"] = e_by_mode.get(rec.n, 0.0)
        mode_rows.append(row)

    if fmt == "json":
        payload = {
            "command": "solve",
            "config": _config_dict(config),
            "energy": {
                "total": energy.total,
                "crosscheck_residual": energy.crosscheck_residual,
                "truncation_order": energy.truncation_order,
            },
            "modes": mode_rows,
            "field": [
                {"point": list(p), "u_re": u.real, "u_im": u.imag}
                for p, u in zip(points, fields)
            ],
        }
        _write_json(out_path, payload)
    else:
        header = ["n"]
        for name in ("a", "b", "c", "d", "e", "g"):
            header += [f"{name}_re", f"{name}_im"]
        header.append("energy")
        rows = [[str(r["n"])] + [_fmt(r[col]) for col in header[1:]]
                for r in mode_rows]
        sections = []
        if points:
            axes = ("x", "y", "z")[:config.dim]
            sec_rows = [[_fmt(c) for c in p] + [_fmt(u.real), _fmt(u.imag)]
                        for p, u in zip(points, fields)]
            sections.append(("field", list(axes) + ["u_re", "u_im"], sec_rows))
        _write_csv(out_path, header, rows, sections)
    return out_path, [out_path]


def _run_energy_curve(doc: Mapping[str, Any], outdir: Path,
                      jobs: int) -> tuple[Path, list[Path]]:
    config = _parse_config(doc)
    source = _parse_source(doc, config)
    parameter, xs = _parse_grid(doc, ("delta", "k"))
    out_path, fmt = _resolve_output(doc, "energy-curve", outdir)

    payloads = [("energy", parameter, x, config, None, source) for x in xs]
    results = _map_points(_sweep_worker, payloads, jobs)
    values = [v for v, _ in results]
    errors = [(i, msg) for i, (_, msg) in enumerate(results) if msg]
    curve = _assemble_curve("energy", parameter, xs, values, errors,
                            config, None)

    err_by_index = dict(errors)
    if fmt == "json":
        payload = {
            "command": "energy-curve",
            "config": _config_dict(config),
            "parameter": parameter,
            "argmax_at": curve.argmax_at,
            "rows": [
                {parameter: x, "energy": v.real}
                if i not in err_by_index else
                {parameter: x, "error": err_by_index[i]}
                for i, (x, v) in enumerate(zip(xs, values))
            ],
        }
        _write_json(out_path, payload)
    else:
        header = [parameter, "energy"]
        rows = []
        for i, (x, v) in enumerate(zip(xs, values)):
            if i in err_by_index:
                rows.append(_error_row(_fmt(x), err_by_index[i], len(header)))
            else:
                rows.append([_fmt(x), _fmt(v.real)])
        _write_csv(out_path, header, rows)
    return out_path, [out_path]


def _run_find_resonance(doc: Mapping[str, Any], outdir: Path,
                        jobs: int) -> tuple[Path, list[Path]]:
    raw_cfg = _need(doc, "config")
    if not isinstance(raw_cfg, dict):
        raise SpecValidationError("config", "must be an object")
    dim = _as_int("config.dim", _need(raw_cfg, "dim"))
    k = _as_number("config.k", _need(raw_cfg, "k"))
    r_e = _as_number("config.r_e", _need(raw_cfg, "r_e"))
    if dim not in (2, 3):
        raise SpecValidationError("config.dim", f"must be 2 or 3, got {dim}")
    if k <= 0.0 or r_e <= 0.0:
        raise SpecValidationError("config", "k and r_e must be positive")
    n0 = _as_int("n0", _need(doc, "n0"))
    initial = None
    if "initial" in doc:
        raw_init = doc["initial"]
        if (not isinstance(raw_init, list)) or len(raw_init) != 2:
            raise SpecValidationError("initial", "must be [eps_s, delta]")
        initial = (_as_number("initial[0]", raw_init[0]),
                   _as_number("initial[1]", raw_init[1]))
    out_path, fmt = _resolve_output(doc, "find-resonance", outdir)

    pair = find_resonant_pair(dim, n0, k, r_e, initial=initial)
    if fmt == "json":
        _write_json(out_path, {
            "command": "find-resonance",
            "dim": dim, "k": k, "r_e": r_e, "n0": n0,
            "eps_s": pair.eps_s, "delta": pair.delta,
            "residual_norm": pair.residual_norm,
            "iterations": pair.iterations,
        })
    else:
        _write_csv(out_path,
                   ["n0", "eps_s", "delta", "residual_norm", "iterations"],
                   [[str(n0), _fmt(pair.eps_s), _fmt(pair.delta),
                     _fmt(pair.residual_norm), str(pair.iterations)]])
    return out_path, [out_path]


def _run_sweep_condition(doc: Mapping[str, Any], outdir: Path,
                         jobs: int) -> tuple[Path, list[Path]]:
    config = _parse_config(doc)
    n0 = _as_int("n0", _need(doc, "n0"))
    parameter, xs = _parse_grid(doc, ("k", "delta"))
    raw_q = doc.get("quantity")
    if raw_q is None:
        quantity = ("condition_coreshell" if config.has_core
                    else "condition_nocore")
    else:
        if raw_q not in _QUANTITY_ALIASES:
            raise SpecValidationError(
                "quantity", f"must be one of {', '.join(sorted(set(_QUANTITY_ALIASES)))}")
        quantity = _QUANTITY_ALIASES[raw_q]
    out_path, fmt = _resolve_output(doc, "sweep-condition", outdir)

    payloads = [(quantity, parameter, x, config, n0, None) for x in xs]
    results = _map_points(_sweep_worker, payloads, jobs)
    values = [v for v, _ in results]
    errors = [(i, msg) for i, (_, msg) in enumerate(results) if msg]
    curve = _assemble_curve(quantity, parameter, xs, values, errors,
                            config, n0)

    err_by_index = dict(errors)
    if fmt == "json":
        payload = {
            "command": "sweep-condition",
            "config": _config_dict(config),
            "quantity": quantity,
            "parameter": parameter,
            "n0": n0,
            "rows": [
                {parameter: x, "re_lhs": v.real, "im_lhs": v.imag}
                if i not in err_by_index else
                {parameter: x, "error": err_by_index[i]}
                for i, (x, v) in enumerate(zip(xs, values))
            ],
            "re_brackets": [list(b) for b in curve.re_brackets],
            "im_brackets": [list(b) for b in curve.im_brackets],
            "near_zeros": list(curve.near_zeros),
        }
        _write_json(out_path, payload)
    else:
        header = [parameter, "re_lhs", "im_lhs"]
        rows = []
        for i, (x, v) in enumerate(zip(xs, values)):
            if i in err_by_index:
                rows.append(_error_row(_fmt(x), err_by_index[i], len(header)))
            else:
                rows.append([_fmt(x), _fmt(v.real), _fmt(v.imag)])
        sections = [
            ("brackets",
             ["component", f"{parameter}_lo", f"{parameter}_hi"],
             [["re", _fmt(lo), _fmt(hi)] for lo, hi in curve.re_brackets]
             + [["im", _fmt(lo), _fmt(hi)] for lo, hi in curve.im_brackets]),
            ("near_zeros", [parameter],
             [[_fmt(x)] for x in curve.near_zeros]),
        ]
        _write_csv(out_path, header, rows, sections)
    return out_path, [out_path]


def _run_dichotomy(doc: Mapping[str, Any], outdir: Path,
                   jobs: int) -> tuple[Path, list[Path]]:
    config = _parse_config(doc)
    raw_n0 = _need(doc, "n0_values")
    if not isinstance(raw_n0, list) or not raw_n0:
        raise SpecValidationError("n0_values", "must be a nonempty list")
    n0_values = [_as_int(f"n0_values[{i}]", v) for i, v in enumerate(raw_n0)]
    inside = _as_number("source_radius_inside",
                        _need(doc, "source_radius_inside"))
    outside = _as_number("source_radius_outside",
                         _need(doc, "source_radius_outside"))
    k_grid: tuple[float, ...] | None = None
    if "grid" in doc:
        parameter, k_grid = _parse_grid(doc, ("k",))
    probe_factor = _as_number("probe_factor", doc.get("probe_factor", 1.05))
    probe_samples = _as_int("probe_samples", doc.get("probe_samples", 64))
    out_path, fmt = _resolve_output(doc, "dichotomy", outdir)

    payloads = [(config, n0, inside, outside, k_grid, probe_factor,
                 probe_samples) for n0 in n0_values]
    results = _map_points(_dichotomy_worker, payloads, jobs)

    rows: list[dict[str, Any]] = []
    critical = None
    bound_radius = None
    for n0, (rep, msg) in zip(n0_values, results):
        if rep is None:
            rows.append({"n0": n0, "error": msg})
            continue
        critical = rep.critical
        bound_radius = rep.bound_radius
        p_in, p_out = rep.inside_probes[0], rep.outside_probes[0]
        rows.append({
            "n0": n0,
            "k": rep.k_values[0],
            "energy_inside": rep.inside_energies[0],
            "energy_outside": rep.outside_energies[0],
            "probe_inside": p_in.sup_estimate,
            "probe_outside": p_out.sup_estimate,
            "probe_detail": {
                "probe_radius": p_in.probe_radius,
                "inside": {"sampled_max": p_in.sampled_max,
                           "tail_bound": p_in.tail_bound,
                           "sample_count": p_in.sample_count},
                "outside": {"sampled_max": p_out.sampled_max,
                            "tail_bound": p_out.tail_bound,
                            "sample_count": p_out.sample_count},
            },
        })

    if fmt == "json":
        _write_json(out_path, {
            "command": "dichotomy",
            "config": _config_dict(config),
            "critical_radius": critical,
            "bound_radius": bound_radius,
            "source_radius_inside": inside,
            "source_radius_outside": outside,
            "rows": rows,
        })
    else:
        header = ["n0", "k", "energy_inside", "energy_outside",
                  "probe_inside", "probe_outside"]
        csv_rows = []
        for row in rows:
            if "error" in row:
                csv_rows.append(_error_row(str(row["n0"]), row["error"],
                                           len(header)))
            else:
                csv_rows.append([str(row["n0"])]
                                + [_fmt(row[c]) for c in header[1:]])
        _write_csv(out_path, header, csv_rows)
    return out_path, [out_path]


def _run_np_spectrum(doc: Mapping[str, Any], outdir: Path,
                     jobs: int) -> tuple[Path, list[Path]]:
    raw_cfg = _need(doc, "config")
    if not isinstance(raw_cfg, dict):
        raise SpecValidationError("config", "must be an object")
    dim = _as_int("config.dim", raw_cfg.get("dim", 3))
    if dim != 3:
        raise SpecValidationError("config.dim",
                                  "the boundary spectrum is 3D only")
    k = _as_number("config.k", _need(raw_cfg, "k"))
    R = _as_number("config.r_e", _need(raw_cfg, "r_e"))
    parameter, xs = _parse_grid(doc, ("m", "k"))
    if parameter == "m":
        degrees = []
        for x in xs:
            if x != int(x) or x < 0:
                raise SpecValidationError(
                    "grid.values", f"degrees must be integers >= 0, got {x}")
            degrees.append(int(x))
        payloads = [(m, k, R) for m in degrees]
        firsts = [str(m) for m in degrees]
    else:
        m_fixed = _as_int("m", _need(doc, "m"))
        payloads = [(m_fixed, x, R) for x in xs]
        firsts = [_fmt(x) for x in xs]
    out_path, fmt = _resolve_output(doc, "np-spectrum", outdir)

    results = _map_points(_np_worker, payloads, jobs)
    names = ("lam", "chi", "gamma", "alpha", "funk_hecke")
    if fmt == "json":
        rows = []
        for first, (vals, msg) in zip(firsts, results):
            entry: dict[str, Any] = {parameter: (int(first) if parameter == "m"
                                                 else float(first))}
            if vals is None:
                entry["error"] = msg
            else:
                for name, v in zip(names, vals):
                    entry.update(_complex_cols(name, v))
            rows.append(entry)
        _write_json(out_path, {
            "command": "np-spectrum",
            "k": k, "r_e": R, "parameter": parameter,
            "rows": rows,
        })
    else:
        header = [parameter]
        for name in names:
            header += [f"{name}_re", f"{name}_im"]
        rows = []
        for first, (vals, msg) in zip(firsts, results):
            if vals is None:
                rows.append(_error_row(first, msg, len(header)))
            else:
                flat: list[str] = [first]
                for v in vals:
                    flat += [_fmt(v.real), _fmt(v.imag)]
                rows.append(flat)
        _write_csv(out_path, header, rows)
    return out_path, [out_path]


def _run_np_crosscheck(doc: Mapping[str, Any], outdir: Path,
                       jobs: int) -> tuple[Path, list[Path]]:
    config = _parse_config(doc)
    if config.dim != 3:
        raise SpecValidationError("config.dim",
                                  "the boundary spectrum is 3D only")
    if config.has_core:
        raise SpecValidationError(
            "config.r_i", "the layer-potential route applies to solid balls")
    source = _parse_source(doc, config)
    points = _parse_points(doc, config.dim)
    out_path, fmt = _resolve_output(doc, "np-crosscheck", outdir)

    phi, report = solve_nocore_via_np(config, source)
    sol = solve_nocore(config, source)
    series = dissipation_energy(sol)
    np_vals = np_field_values(config, source, points) if points else ()
    series_vals = [eval_field(sol, p) for p in points]

    mode_rows = [
        {"n": n, "phi_re": p.real, "phi_im": p.imag, "energy": e}
        for n, p, e in zip(report.orders, phi, report.per_mode)
    ]
    field_rows = [
        {"point": list(pt), "np_re": a.real, "np_im": a.imag,
         "series_re": b.real, "series_im": b.imag,
         "abs_gap": abs(a - b)}
        for pt, a, b in zip(points, np_vals, series_vals)
    ]

    if fmt == "json":
        _write_json(out_path, {
            "command": "np-crosscheck",
            "config": _config_dict(config),
            "energy_np": report.total,
            "energy_series": series.total,
            "relative_gap": report.crosscheck_residual,
            "modes": mode_rows,
            "field": field_rows,
        })
    else:
        header = ["n", "phi_re", "phi_im", "energy"]
        rows = [[str(r["n"]), _fmt(r["phi_re"]), _fmt(r["phi_im"]),
                 _fmt(r["energy"])] for r in mode_rows]
        sections = []
        if points:
            sec_rows = [[_fmt(c) for c in r["point"]]
                        + [_fmt(r[c]) for c in
                           ("np_re", "np_im", "series_re", "series_im")]
                        for r in field_rows]
            sections.append(("field",
                             ["x", "y", "z", "np_re", "np_im",
                              "series_re", "series_im"], sec_rows))
        sections.append(("totals",
                         ["energy_np", "energy_series", "relative_gap"],
                         [[_fmt(report.total), _fmt(series.total),
                           _fmt(report.crosscheck_residual)]]))
        _write_csv(out_path, header, rows, sections)
    return out_path, [out_path]


_RUNNERS = {
    "solve": _run_solve,
    "energy-curve": _run_energy_curve,
    "find-resonance": _run_find_resonance,
    "sweep-condition": _run_sweep_condition,
    "dichotomy": _run_dichotomy,
    "np-spectrum": _run_np_spectrum,
    "np-crosscheck": _run_np_crosscheck,
}


def _config_dict(config: PlasmonConfig) -> dict[str, Any]:
    return {"dim": config.dim, "k": config.k, "r_e": config.r_e,
            "eps_s": config.eps_s, "delta": config.delta,
            "r_i": config.r_i, "eps_c": config.eps_c}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _versions() -> dict[str, str]:
    return {
        "alrlab": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
    }


def _manifest_path(out_path: Path) -> Path:
    return out_path.with_name(out_path.stem + ".manifest.json")


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="alr",
        description="Radial Helmholtz transmission experiments from JSON specs")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--spec", required=True,
                        help="path to the JSON experiment document")
    parser.add_argument("--out", default=".",
                        help="directory for outputs (default: current)")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for grid sweeps")
    args = parser.parse_args(argv)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    try:
        doc = _load_spec(Path(args.spec))
        _check_keys(args.command, doc)
        spec_sha = hashlib.sha256(
            Path(args.spec).read_bytes()).hexdigest()
    except SpecValidationError as exc:
        record = {"error": type(exc).__name__, "field": exc.field,
                  "message": str(exc)}
        _write_json(outdir / "error.json", record)
        print(f"alr: {exc}", file=sys.stderr)
        return 2

    manifest: dict[str, Any] = {
        "command": args.command,
        "spec_path": str(args.spec),
        "spec_sha256": spec_sha,
        "spec": doc,
        "jobs": args.jobs,
        "versions": _versions(),
    }

    try:
        out_path, outputs = _RUNNERS[args.command](doc, outdir, args.jobs)
    except SpecValidationError as exc:
        record = {"error": type(exc).__name__, "field": exc.field,
                  "message": str(exc)}
        _write_json(outdir / "error.json", record)
        print(f"alr: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # engine-level argument rejections are spec problems, not failures
        # of a started computation
        record = {"error": type(exc).__name__, "message": str(exc)}
        _write_json(outdir / "error.json", record)
        print(f"alr: {exc}", file=sys.stderr)
        return 2
    except AlrError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        err_path = outdir / "error.json"
        _write_json(err_path, record)
        manifest.update(status="error", error=record,
                        wall_time_s=round(time.perf_counter() - t0, 6),
                        outputs=[err_path.name])
        _write_json(outdir / "run.manifest.json", manifest)
        print(f"alr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    manifest.update(status="ok",
                    wall_time_s=round(time.perf_counter() - t0, 6),
                    outputs=[p.name for p in outputs])
    _write_json(_manifest_path(out_path), manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
