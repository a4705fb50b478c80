"""Command-line surface: ingest tuples or functions, run pipelines, emit JSON reports.

One command per process; every report is a single JSON document printed to
stdout (and optionally written to a file), with a fixed key order so that
identical configuration and seed reproduce identical bytes apart from the
timestamp field.

Exit codes: 0 success, 1 parse error, 2 non-commuting input, 3 not a pure
hypercontraction, 4 inconclusive inner-function check.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from .charfn import (
    ThetaFunction,
    char_data,
    partial_isometry_check,
    phi_agreement_residual,
    phi_variant,
    purely_contractive_check,
)
from .linalg import DEFAULT_TOLERANCES, Tolerances
from .optuple import NonCommutingError, classify, defect_data
from .realization import evaluate, extract, ki_check, km_inner_check
from .serialize import (
    poly_from_dict,
    poly_to_dict,
    realization_to_dict,
    tuple_from_dict,
)
from .wandering_inner import wandering_match, wt_build

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NONCOMMUTING = 2
EXIT_NOT_PURE = 3
EXIT_INCONCLUSIVE = 4


@dataclasses.dataclass
class RunConfig:
    command: str
    input_path: str
    m: int
    degree: int | None
    tol: Tolerances
    samples: int
    seed: int
    out: str | None


def _parse_tolerances(pairs) -> Tolerances:
    overrides = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValueError(f"tolerance override must look like KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = float(value)
    try:
        return DEFAULT_TOLERANCES.replace(**overrides)
    except TypeError as exc:
        raise ValueError(f"unknown tolerance name in {sorted(overrides)}") from exc


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _base_report(config: RunConfig) -> dict:
    return {
        "command": config.command,
        "input": config.input_path,
        "m": config.m,
        "degree": config.degree,
        "samples": config.samples,
        "seed": config.seed,
        "tolerances": dataclasses.asdict(config.tol),
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _spectrum(matrix) -> list[float]:
    return [float(v) for v in np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))]


def _sample_points(rng: np.random.Generator, n: int, count: int, radius: float = 0.6) -> list:
    pts = []
    for _ in range(count):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v *= rng.uniform(0.05, radius) / max(np.linalg.norm(v), 1e-12)
        pts.append(v)
    return pts


def _default_degree(m: int, report) -> int:
    base = 2 * m + 4
    if report.nilpotency_length is not None:
        base = max(base, report.nilpotency_length + m + 2)
    return base


def _load_tuple(config: RunConfig):
    doc = _load_json(config.input_path)
    return tuple_from_dict(doc, config.tol)


def cmd_classify(config: RunConfig) -> int:
    report = _base_report(config)
    try:
        t = _load_tuple(config)
    except NonCommutingError as exc:
        report["verdict"] = "non-commuting"
        report["error"] = str(exc)
        _emit(report, config.out)
        return EXIT_NONCOMMUTING
    cls = classify(t, config.m, config.tol)
    from .optuple import defect

    report.update(
        {
            "n": t.n,
            "dim": t.dim,
            "commutator_residual": t.commutator_residual,
            "defect_spectra": {str(k): _spectrum(defect(t, k, config.tol)) for k in range(config.m + 1)},
            "psd_ok": list(cls.psd_ok),
            "min_eigenvalues": list(cls.min_eigenvalues),
            "is_hypercontraction": cls.is_hypercontraction,
            "defect_chain_ok": cls.chain_ok,
            "pure": cls.pure,
            "pure_at": cls.pure_at,
            "nilpotent": cls.nilpotent,
            "nilpotency_length": cls.nilpotency_length,
            "decay": list(cls.decay),
        }
    )
    _emit(report, config.out)
    return EXIT_OK


def _gate_pure(t, config: RunConfig, report: dict) -> tuple[int | None, object]:
    cls = classify(t, config.m, config.tol)
    report["classification"] = {
        "is_hypercontraction": cls.is_hypercontraction,
        "pure": cls.pure,
        "pure_at": cls.pure_at,
        "nilpotent": cls.nilpotent,
    }
    if not (cls.is_hypercontraction and cls.pure):
        report["verdict"] = "refused: tuple is not a pure m-hypercontraction"
        _emit(report, config.out)
        return EXIT_NOT_PURE, cls
    return None, cls


def cmd_inner(config: RunConfig) -> int:
    report = _base_report(config)
    try:
        t = _load_tuple(config)
    except NonCommutingError as exc:
        report["verdict"] = "non-commuting"
        report["error"] = str(exc)
        _emit(report, config.out)
        return EXIT_NONCOMMUTING
    code, cls = _gate_pure(t, config, report)
    if code is not None:
        return code
    degree = config.degree if config.degree is not None else _default_degree(config.m, cls)
    report["degree"] = degree
    data = defect_data(t, config.m, config.tol)
    wt = wt_build(t, data, degree, config.tol)
    inner_rep = km_inner_check(wt.taylor, config.tol)
    match = wandering_match(t, data, degree, config.tol, wt=wt)
    isometry = [
        abs(wt.space.norm(wt.apply(np.eye(wt.input_dim)[:, k])) - 1.0)
        for k in range(wt.input_dim)
    ]
    from .dilation import build, defect_identity_check

    j = build(t, data, config.m, degree, config.tol)
    report.update(
        {
            "realization": realization_to_dict(wt.realization),
            "taylor": poly_to_dict(wt.taylor),
            "km_inner": {
                "verdict": inner_rep.verdict,
                "gram_residual": inner_rep.gram_residual,
                "orthogonality_residual": inner_rep.orthogonality_residual,
            },
            "isometry_residuals": isometry,
            "wandering_angles": [float(a) for a in match["angles"]],
            "wandering_dims": [match["dim_wandering"], match["dim_span"]],
            "truncation_caveat": not wt.taylor.exact,
            "dilation": {
                "truncation_residuals": [float(v) for v in j.truncation_residuals],
                "defect_identity_residuals": defect_identity_check(t, data, degree, config.tol),
            },
        }
    )
    _emit(report, config.out)
    return EXIT_OK


def cmd_realize(config: RunConfig) -> int:
    report = _base_report(config)
    doc = _load_json(config.input_path)
    w = poly_from_dict(doc)
    report["m"] = w.m
    inner_rep = km_inner_check(w, config.tol)
    report["km_inner"] = {
        "verdict": inner_rep.verdict,
        "gram_residual": inner_rep.gram_residual,
        "orthogonality_residual": inner_rep.orthogonality_residual,
    }
    if inner_rep.verdict != "km_inner":
        report["verdict"] = f"refused: inner check returned {inner_rep.verdict}"
        _emit(report, config.out)
        return EXIT_INCONCLUSIVE
    rng = np.random.default_rng(config.seed)
    grid = _sample_points(rng, w.n, config.samples)
    result = extract(w, config.tol, grid=grid)
    ki = ki_check(result.realization, config.tol)
    report.update(
        {
            "realization": realization_to_dict(result.realization),
            "state_dim": result.state_dim,
            "ki_residuals": {
                "defect_output": ki.defect_output,
                "cross": ki.cross,
                "input_gram": ki.input_gram,
                "koszul_surrogate": ki.koszul_surrogate,
            },
            "match_table": [
                {"z": [[float(c.real), float(c.imag)] for c in z], "error": err}
                for z, err in zip(result.match_points, result.match_errors)
            ],
            "max_match_error": result.max_match_error,
            "u_isometry_residual": result.u_isometry_residual,
            "column_isometry_residual": result.column_isometry_residual,
        }
    )
    _emit(report, config.out)
    return EXIT_OK


def cmd_charfn(config: RunConfig) -> int:
    report = _base_report(config)
    try:
        t = _load_tuple(config)
    except NonCommutingError as exc:
        report["verdict"] = "non-commuting"
        report["error"] = str(exc)
        _emit(report, config.out)
        return EXIT_NONCOMMUTING
    code, cls = _gate_pure(t, config, report)
    if code is not None:
        return code
    degree = config.degree if config.degree is not None else max(_default_degree(config.m, cls), 2 * config.m)
    report["degree"] = degree
    data = defect_data(t, config.m, config.tol)
    rng = np.random.default_rng(config.seed)
    p = data.defect_basis.shape[1]
    samples = []
    for _ in range(config.samples):
        z, w = _sample_points(rng, t.n, 2)
        x = rng.standard_normal(p) + 1j * rng.standard_normal(p)
        y = rng.standard_normal(p) + 1j * rng.standard_normal(p)
        samples.append((z, w, x, y))
    trend_degrees = sorted({max(2 * config.m, degree - 2 * k) for k in range(3)} | {degree})
    trend = []
    theta = None
    for deg in trend_degrees:
        cd = char_data(t, data, deg, config.tol)
        th = ThetaFunction(cd)
        trend.append({"degree": deg, "residual": partial_isometry_check(th, samples)})
        if deg == degree:
            theta = th
    assert theta is not None
    zero = theta.eval_at_zero()
    singvals = np.linalg.svd(zero, compute_uv=False) if zero.size else np.zeros(0)
    pure_rep = purely_contractive_check(theta, config.tol)
    variant = phi_variant(theta, config.tol)
    agreement = phi_agreement_residual(theta, variant, [s[0] for s in samples[: min(5, len(samples))]])
    per_sample = [
        partial_isometry_check(theta, [s]) for s in samples
    ]
    report.update(
        {
            "theta0_singular_values": [float(v) for v in singvals],
            "sigma_max": pure_rep.sigma_max,
            "purely_contractive": pure_rep.purely_contractive,
            "near_boundary": pure_rep.near_boundary,
            "partial_isometry_residuals": per_sample,
            "partial_isometry_max": max(per_sample) if per_sample else 0.0,
            "degree_trend": trend,
            "phi_agreement_residual": agreement,
            "factor_residual": theta.data.factor_residual,
            "unitarity_residual": theta.data.unitarity_residual,
            "m_dim": theta.data.m_dim,
        }
    )
    _emit(report, config.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opmodel",
        description="Defect operators, dilations, inner and characteristic functions "
        "for commuting matrix tuples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("classify", "defect spectra, hypercontraction verdict and purity decay"),
        ("inner", "canonical inner function with isometry and wandering reports"),
        ("realize", "extract a realization from a serialized inner function"),
        ("charfn", "characteristic function report with kernel-identity residuals"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input", help="path to the JSON input document")
        p.add_argument("--m", type=int, default=1, help="hypercontraction order (default 1)")
        p.add_argument("--degree", type=int, default=None, help="truncation degree override")
        p.add_argument(
            "--tol",
            action="append",
            metavar="KEY=VAL",
            help="tolerance override, repeatable (psd_slack, residual, rank_cutoff, purity_decay)",
        )
        p.add_argument("--samples", type=int, default=10, help="sample count for point checks")
        p.add_argument("--seed", type=int, default=0, help="RNG seed for sample points")
        p.add_argument("--out", default=None, help="also write the JSON report to this path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(
            command=args.command,
            input_path=args.input,
            m=args.m,
            degree=args.degree,
            tol=_parse_tolerances(args.tol),
            samples=args.samples,
            seed=args.seed,
            out=args.out,
        )
    except ValueError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_PARSE
    handlers = {
        "classify": cmd_classify,
        "inner": cmd_inner,
        "realize": cmd_realize,
        "charfn": cmd_charfn,
    }
    try:
        return handlers[config.command](config)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(json.dumps({"error": str(exc), "input": config.input_path}), file=sys.stderr)
        return EXIT_PARSE


def console_main() -> None:
    sys.exit(main())
