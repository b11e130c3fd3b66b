import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from app import __version__
from app.core.config import ensure_dirs, project_root, settings
from app.core.errors import FinslerLabError, SpecParseError
from app.services.binet_legendre import GAMMA_NOTE, bl_dual_metric, invert_dual, zermelo_bl_closed_form
from app.services.body_spec import body_spec_to_dict, load_body_spec, load_json_text
from app.services.domain_geometry import (
    ZermeloField,
    funk_distance,
    funk_field,
    hilbert_distance,
    parse_field_spec,
    parse_polyline_spec,
    path_length,
    rfunk_distance,
    rfunk_field,
)
from app.services.john import john_report
from app.services.report import FORMATS, render_result, render_suite, run_metadata, write_result, write_suite
from app.services.verify import SUITES, run_suite

logger = logging.getLogger(__name__)

METRICS = ("funk", "rfunk", "hilbert")
METHODS = ("auto", "exact", "montecarlo")

_DISTANCES: Dict[str, Callable[[Any, Any, Any], float]] = {
    "funk": funk_distance,
    "rfunk": rfunk_distance,
    "hilbert": hilbert_distance,
}


class RunConfig(BaseModel):
    """Everything that determines a run; echoed into the output metadata."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str
    inputs: Dict[str, str] = Field(default_factory=dict)
    seed: int = Field(default_factory=lambda: settings.seed)
    samples: int = Field(default_factory=lambda: settings.samples, ge=1)
    tol: Optional[float] = Field(default=None, gt=0.0)
    out: Optional[str] = None
    format: Literal["json", "csv", "xlsx"] = "json"

    def metadata(self, **extra: Any) -> Dict[str, Any]:
        return run_metadata(self.seed, self.samples, self.tol, command=self.command, **self.inputs, **extra)


def parse_point(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise SpecParseError(f"point {text!r}: expected comma-separated reals") from e
    if not values:
        raise SpecParseError(f"point {text!r} is empty")
    return values


def _load_json(path: str) -> object:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"{p}: {e}") from e
    return load_json_text(text, str(p))


def _emit(data: str) -> None:
    sys.stdout.write(data)


def default_out(command: str, seed: int, fmt: str) -> str:
    """Workbooks cannot go to stdout; without --out they land in the configured output directory."""
    ensure_dirs()
    return str(project_root() / settings.output_dir / f"{command}-seed{seed}.{fmt}")


def _finish(cfg: RunConfig, payload: Dict[str, Any], **extra: Any) -> int:
    meta = cfg.metadata(**extra)
    if cfg.out is None:
        _emit(render_result(payload, meta, cfg.format))
    else:
        write_result(cfg.out, payload, meta, cfg.format)
    return 0


def cmd_john(args: argparse.Namespace, cfg: RunConfig) -> int:
    spec = load_body_spec(args.body)
    payload = john_report(spec, tol=cfg.tol)
    payload["body"] = body_spec_to_dict(spec)
    return _finish(cfg, payload)


def cmd_bl(args: argparse.Namespace, cfg: RunConfig) -> int:
    spec = load_body_spec(args.body)
    dual = bl_dual_metric(spec, args.method, cfg.samples, cfg.seed)
    g = invert_dual(dual)
    payload = {
        "metric": g.to_payload(),
        "dual_metric": dual.to_payload(),
        "eigenvalues": [float(v) for v in g.eigenvalues()],
        "notes": {"gamma": GAMMA_NOTE},
    }
    return _finish(cfg, payload, method=args.method)


def cmd_dist(args: argparse.Namespace, cfg: RunConfig) -> int:
    if args.from_point is None or args.to_point is None:
        raise SpecParseError("dist needs --from and --to")
    spec = load_body_spec(args.domain)
    p = parse_point(args.from_point)
    q = parse_point(args.to_point)
    if len(p) != spec.dim or len(q) != spec.dim:
        raise SpecParseError(f"points must have dimension {spec.dim}")
    d = _DISTANCES[args.metric](spec, p, q)
    return _finish(cfg, {"metric": args.metric, "from": p, "to": q, "distance": d})


def _path_points(args: argparse.Namespace) -> Any:
    if args.path is not None:
        return parse_polyline_spec(_load_json(args.path), args.path)
    if args.from_point is None or args.to_point is None:
        raise SpecParseError("pathlen needs --path or both --from and --to")
    return parse_polyline_spec({"points": [parse_point(args.from_point), parse_point(args.to_point)]})


def cmd_pathlen(args: argparse.Namespace, cfg: RunConfig) -> int:
    path = _path_points(args)
    if args.field is not None:
        fields: List[ZermeloField] = [ZermeloField.from_spec(parse_field_spec(_load_json(args.field), args.field))]
        kind = fields[0].kind
    elif args.domain is not None:
        spec = load_body_spec(args.domain)
        kind = args.metric
        if kind == "funk":
            fields = [funk_field(spec)]
        elif kind == "rfunk":
            fields = [rfunk_field(spec)]
        else:
            # Hilbert norm is the mean of the Funk norm and its reverse
            fields = [funk_field(spec), rfunk_field(spec)]
    else:
        raise SpecParseError("pathlen needs --field or --domain")

    lengths = [path_length(f, path) for f in fields]
    length = sum(lengths) / len(lengths)
    return _finish(cfg, {"field": kind, "points": path.points, "length": length})


def cmd_zermelo_bl(args: argparse.Namespace, cfg: RunConfig) -> int:
    source = args.body or args.domain
    if source is None:
        raise SpecParseError("zermelo-bl needs --body (the target Omega)")
    if args.u is None:
        raise SpecParseError("zermelo-bl needs --u")
    spec = load_body_spec(source)
    res = zermelo_bl_closed_form(spec, parse_point(args.u), args.method, cfg.samples, cfg.seed)
    return _finish(cfg, res.to_payload(), method=args.method)


def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    result = run_suite(args.suite, n=args.dim, seed=cfg.seed, count=args.count, samples=cfg.samples, tol=cfg.tol)
    payload = result.to_payload()
    meta = cfg.metadata(suite=args.suite, n=args.dim, count=args.count)
    if cfg.out is None:
        _emit(render_suite(payload, meta, cfg.format))
    else:
        write_suite(cfg.out, payload, meta, cfg.format)

    for row in result.failures:
        logger.warning("FAIL %s %s: measured %.6g vs bound %.6g (%s)", row.check_id, row.body_id, row.measured, row.bound, row.bound_source)
    logger.info("%s: %d checks, %d failed", args.suite, len(result.rows), len(result.failures))
    return 0 if result.passed else 1


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "john": cmd_john,
    "bl": cmd_bl,
    "dist": cmd_dist,
    "pathlen": cmd_pathlen,
    "zermelo-bl": cmd_zermelo_bl,
    "verify": cmd_verify,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="Output file; stdout when omitted.")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--seed", type=int, default=settings.seed)
    p.add_argument("--samples", type=int, default=settings.samples)
    p.add_argument("--tol", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finsler-lab",
        description="Binet-Legendre and John metrics, Funk/Hilbert/Zermelo geometries and bound checks.",
        epilog="Negative coordinates need the = form, e.g. --from=-0.5,0",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("john", help="John ellipsoid, John point and inclusion certificates")
    p.add_argument("--body", required=True, help="Body spec JSON file.")
    _common(p)

    p = sub.add_parser("bl", help="Binet-Legendre metric of a body")
    p.add_argument("--body", required=True, help="Body spec JSON file.")
    p.add_argument("--method", choices=METHODS, default="auto")
    _common(p)

    p = sub.add_parser("dist", help="Funk, reverse Funk or Hilbert distance in a domain")
    p.add_argument("--domain", required=True, help="Domain body spec JSON file.")
    p.add_argument("--metric", choices=METRICS, default="funk")
    p.add_argument("--from", dest="from_point", default=None, help="Comma-separated coordinates.")
    p.add_argument("--to", dest="to_point", default=None, help="Comma-separated coordinates.")
    _common(p)

    p = sub.add_parser("pathlen", help="Finsler length of a polyline")
    p.add_argument("--field", default=None, help="Zermelo field spec JSON file.")
    p.add_argument("--domain", default=None, help="Domain body spec JSON file (with --metric).")
    p.add_argument("--metric", choices=METRICS, default="funk")
    p.add_argument("--path", default=None, help="Polyline JSON file.")
    p.add_argument("--from", dest="from_point", default=None)
    p.add_argument("--to", dest="to_point", default=None)
    _common(p)

    p = sub.add_parser("zermelo-bl", help="Closed-form BL metric of a Zermelo unit ball Omega - u")
    p.add_argument("--body", default=None, help="Target body Omega spec JSON file.")
    p.add_argument("--domain", default=None, help="Alias of --body.")
    p.add_argument("--u", default=None, help="Drift value, comma-separated.")
    p.add_argument("--method", choices=METHODS, default="auto")
    _common(p)

    p = sub.add_parser("verify", help="Run a verification suite")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--count", type=int, default=None, help="Random bodies per family.")
    _common(p)
    p.set_defaults(format="csv")

    return parser


def _inputs(args: argparse.Namespace) -> Dict[str, str]:
    keys = ("body", "domain", "field", "path", "metric", "from_point", "to_point", "u")
    return {k: str(getattr(args, k)) for k in keys if getattr(args, k, None) is not None}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        out = args.out
        if out is None and args.format == "xlsx":
            out = default_out(args.command, args.seed, args.format)
        cfg = RunConfig(
            command=args.command,
            inputs=_inputs(args),
            seed=args.seed,
            samples=args.samples,
            tol=args.tol,
            out=out,
            format=args.format,
        )
        return COMMANDS[args.command](args, cfg)
    except FinslerLabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except ValueError as e:
        logger.error("invalid arguments: %s", e)
        return SpecParseError.exit_code


if __name__ == "__main__":
    sys.exit(main())
