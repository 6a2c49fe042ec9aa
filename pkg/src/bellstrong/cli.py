"""Command-line front end.

Subcommands: qm, evaluate, verify-theorem, lhv, optimize. Angles are always
degrees. Every subcommand accepts ``--format {json,csv}``, ``--threads`` and
``--config FILE`` (a JSON object whose keys are flag names; explicit flags
win over the file).

Exit codes: 0 ok, 2 usage or invalid input, 3 degenerate denominator,
4 theorem bound breached, 5 hidden-variable model contract violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .core import Apparatus, ArmOptics, DegenerateExperimentError, DomainError, InequalityName, expectation
from .inequalities import OPTIMAL_SETTINGS, evaluate as evaluate_inputs
from .lhv import ModelContractError, UnknownModelError, check_gr, check_supplementary, estimate_strong, make_model
from .optimizer import IdealQuantumSource, LhvSource, RealQuantumSource, evaluate_at, scan_full, scan_symmetric
from .quantum import depolarization_is_approximate, ideal_predictions, real_joint, real_singles
from .theorem import TOL as THEOREM_TOL, verify_random, verify_vertices

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_THEOREM, EXIT_MODEL = 0, 2, 3, 4, 5

SETTING_FLAGS = ("a", "b", "a_prime", "b_prime", "r")


class UsageError(Exception):
    pass


def _float_list(value: Any) -> list[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    try:
        return [float(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {value!r}") from None


def _arm_optics(value: Any) -> ArmOptics:
    if value in (None, "ideal"):
        return ArmOptics.ideal()
    vals = _float_list(value)
    if len(vals) != 4:
        raise UsageError("--prisms takes 'ideal' or four numbers t_par,t_perp,r_par,r_perp")
    return ArmOptics(*vals)


def _apparatus(args) -> Apparatus:
    arm1 = _arm_optics(args.prisms)
    arm2 = _arm_optics(args.prisms2) if args.prisms2 is not None else arm1
    return Apparatus(args.eta, args.phi_deg, arm1, arm2, use_depolarization=args.depolarization)


def _meta(args, **extra) -> dict[str, Any]:
    meta = {
        "seed": getattr(args, "seed", None),
        "shots": getattr(args, "shots", None),
        "eta": None,
        "phi_deg": None,
    }
    meta.update(extra)
    return meta


def _settings_from_args(args) -> dict[str, float]:
    return {k: float(getattr(args, k)) for k in SETTING_FLAGS}


def _emit(payload: dict[str, Any], fmt: str, rows: list[dict[str, Any]] | None = None) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    if rows is None:
        rows = [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# -- subcommands -------------------------------------------------------------

def cmd_qm(args) -> str:
    angles = _float_list(args.angles)
    rows = []
    if args.ideal:
        meta = _meta(args)
        for t in angles:
            e, j, s = ideal_predictions(t)
            rows.append({"angle_deg": t, "E": e, **j.as_dict(), **s.as_dict(), "total": j.total})
    else:
        app = _apparatus(args)
        meta = _meta(args, eta=app.eta, phi_deg=app.phi_deg, depolarization=app.use_depolarization)
        if app.use_depolarization:
            meta["depolarization_approximate"] = depolarization_is_approximate(app.phi_deg)
        singles = real_singles(app)
        for t in angles:
            j = real_joint(app, t, 0.0)
            rows.append({"angle_deg": t, "E": expectation(j), **j.as_dict(), **singles.as_dict(), "total": j.total})
    payload = {"branch": "ideal" if args.ideal else "real", "unit": "deg", "rows": rows, "meta": meta}
    return _emit(payload, args.format, rows)


def _settings_mapping(raw: Any) -> dict[str, float] | None:
    if not raw:
        return None
    if isinstance(raw, dict):
        return {k: float(v) for k, v in raw.items()}
    return {item["label"]: float(item["deg"]) for item in raw}


def cmd_evaluate(args) -> str:
    if args.input is not None:
        try:
            doc = json.loads(Path(args.input).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read input file: {exc}") from None
        if not isinstance(doc, dict) or "inputs" not in doc:
            raise UsageError("input file must be a JSON object with an 'inputs' member")
        name = args.inequality or doc.get("inequality")
        if name is None:
            raise UsageError("no inequality given (flag or 'inequality' member)")
        report = evaluate_inputs(name, doc["inputs"], _settings_mapping(doc.get("settings")))
        meta = doc.get("meta") or _meta(args)
    elif args.from_qm:
        if args.inequality is None:
            raise UsageError("--inequality is required with --from-qm")
        if args.ideal:
            source, meta = IdealQuantumSource(), _meta(args)
        else:
            app = _apparatus(args)
            source, meta = RealQuantumSource(app), _meta(args, eta=app.eta, phi_deg=app.phi_deg)
        report = evaluate_at(args.inequality, source, _settings_from_args(args))
    else:
        raise UsageError("evaluate needs --input FILE or --from-qm")
    payload = report.to_dict()
    payload["meta"] = meta
    return _emit(payload, args.format)


def cmd_verify_theorem(args) -> tuple[str, int]:
    vmax, argmax = verify_vertices(args.u, args.v)
    sampled = verify_random(args.u, args.v, args.samples, args.seed)
    passed = vmax <= THEOREM_TOL and sampled <= vmax + THEOREM_TOL
    payload = {
        "U": args.u,
        "V": args.v,
        "vertex_max_z": vmax,
        "vertex_argmax": {k: getattr(argmax, k) for k in ("x1p", "x1m", "x2p", "x2m", "y1p", "y1m", "y2p", "y2m")},
        "sampled_max_z": sampled,
        "samples": args.samples,
        "seed": args.seed,
        "tolerance": THEOREM_TOL,
        "passed": passed,
    }
    return _emit(payload, args.format), EXIT_OK if passed else EXIT_THEOREM


def _model_from_args(args):
    params = dict(json.loads(args.params)) if args.params else {}
    params.setdefault("d", args.d)
    return make_model(args.model, **params)


def cmd_lhv(args) -> str:
    model = _model_from_args(args)
    settings = _settings_from_args(args)
    est = estimate_strong(model, settings, args.shots, args.seed, threads=args.threads)
    report = est.report
    payload = report.to_dict()
    payload.pop("inputs")
    payload.update({
        "sigma": est.sigma,
        "bound_plus_3sigma": report.bound + 3.0 * est.sigma,
        "within_local_bound": report.lhs <= report.bound + 3.0 * est.sigma,
    })
    if args.check_assumptions:
        check_settings = [settings[k] for k in ("a", "a_prime", "b", "b_prime")]
        payload["assumptions"] = {
            "supplementary": check_supplementary(model, check_settings, settings["r"], args.lambdas, args.seed).as_dict(),
            "gr": check_gr(model, check_settings, settings["r"], args.lambdas, args.seed).as_dict(),
        }
    payload["counts"] = {k: led.as_dict() for k, led in est.ledgers.items()}
    payload["meta"] = _meta(args, model=model.name, **model.params())
    return _emit(payload, args.format)


def _source_from_args(args):
    if args.source == "ideal":
        return IdealQuantumSource()
    if args.source == "real":
        return RealQuantumSource(_apparatus(args))
    return LhvSource(_model_from_args(args), args.quadrature_points)


def cmd_optimize(args) -> str:
    source = _source_from_args(args)
    meta = _meta(args)
    if args.source == "real":
        meta.update(eta=args.eta, phi_deg=args.phi_deg)
    if args.full_grid:
        best, value = scan_full(args.inequality, source, args.grid, threads=args.threads)
        payload = {
            "inequality": InequalityName(args.inequality).value,
            "mode": "full-grid",
            "lhs_best": value,
            "unit": "deg",
            "settings": [{"label": k, "deg": v} for k, v in best.items()],
            "source": source.describe(),
            "meta": meta,
        }
        return _emit(payload, args.format)
    result = scan_symmetric(args.inequality, source, args.grid, args.tolerance, threads=args.threads)
    rows = [{"t_deg": t, "lhs": v} for t, v in result.curve]
    if args.out is not None:
        Path(args.out).write_text(_emit({}, "csv", rows), encoding="utf-8")
    payload = {
        "inequality": result.inequality.value,
        "mode": "symmetric",
        "t_best_deg": result.t_best,
        "lhs_best": result.lhs_best,
        "unit": "deg",
        "settings": [{"label": k, "deg": v} for k, v in result.settings.items()],
        "report": result.report.to_dict(),
        "source": source.describe(),
        "meta": meta,
    }
    return _emit(payload, args.format, rows)


# -- parser ------------------------------------------------------------------

def _add_apparatus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=1.0, help="detector quantum efficiency in (0, 1]")
    p.add_argument("--phi-deg", type=float, default=180.0, help="detector half-angle in (0, 180] deg")
    p.add_argument("--prisms", default="ideal", help="'ideal' or t_par,t_perp,r_par,r_perp (both arms)")
    p.add_argument("--prisms2", default=None, help="arm 2 prisms if different from --prisms")
    p.add_argument("--depolarization", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--ideal", action="store_true", help="use the ideal-experiment predictions")


def _add_setting_flags(p: argparse.ArgumentParser) -> None:
    for key in SETTING_FLAGS:
        p.add_argument("--" + key.replace("_", "-"), type=float, default=OPTIMAL_SETTINGS[key], help="deg")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="malus-product", help="noise | malus-product | threshold | lopsided")
    p.add_argument("--d", type=float, default=1.0, help="detection scale of the model")
    p.add_argument("--params", default=None, help="extra model parameters as a JSON object")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", default=None, help="JSON file supplying flag defaults")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    parser = argparse.ArgumentParser(prog="bellstrong", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    p = subs["qm"] = sub.add_parser("qm", parents=[common], help="quantum predictions table")
    _add_apparatus_flags(p)
    p.add_argument("--angles", default="0,30,60", help="comma-separated separations a-b in deg")
    p.set_defaults(func=cmd_qm)

    p = subs["evaluate"] = sub.add_parser("evaluate", parents=[common], help="evaluate one inequality")
    p.add_argument("--inequality", choices=[n.value for n in InequalityName], default=None)
    p.add_argument("--input", default=None, help="JSON file with 'inequality' and 'inputs' (report schema)")
    p.add_argument("--from-qm", action="store_true", help="take inputs from the quantum predictions")
    _add_apparatus_flags(p)
    _add_setting_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = subs["verify-theorem"] = sub.add_parser("verify-theorem", parents=[common], help="check Z <= 0 on the box")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--v", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_theorem)

    p = subs["lhv"] = sub.add_parser("lhv", parents=[common], help="simulate a hidden-variable model")
    _add_model_flags(p)
    _add_setting_flags(p)
    p.add_argument("--shots", type=int, default=1_000_000, help="emissions per setting pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check-assumptions", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lambdas", type=int, default=10_000, help="hidden states sampled by the assumption checks")
    p.set_defaults(func=cmd_lhv)

    p = subs["optimize"] = sub.add_parser("optimize", parents=[common], help="scan orientations")
    p.add_argument("--inequality", choices=[n.value for n in InequalityName], default="ardehali-strong-symmetric")
    p.add_argument("--source", choices=("ideal", "real", "lhv"), default="ideal")
    _add_apparatus_flags(p)
    _add_model_flags(p)
    p.add_argument("--quadrature-points", type=int, default=4096)
    p.add_argument("--grid", type=float, default=1.0, help="grid step in deg, (0, 15]")
    p.add_argument("--tolerance", type=float, default=0.01, help="refinement tolerance in deg")
    p.add_argument("--full-grid", action="store_true", help="explore (a, b, a') on a full grid instead")
    p.add_argument("--out", default=None, help="write the scan curve (t_deg, lhs) to this CSV file")
    p.set_defaults(func=cmd_optimize)
    return parser, subs


def _load_config(argv: Sequence[str]) -> dict[str, Any]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return {}
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return {k.lstrip("-").replace("-", "_"): v for k, v in cfg.items()}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        config = _load_config(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if config:
        for p in subs.values():
            p.set_defaults(**config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        out = args.func(args)
    except (UsageError, UnknownModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateExperimentError as exc:
        print(f"degenerate experiment: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ModelContractError as exc:
        print(f"model contract violation: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (DomainError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code = EXIT_OK
    if isinstance(out, tuple):
        out, code = out
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
