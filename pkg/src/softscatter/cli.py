"""Command-line interface: a thin client over the HTTP service.

Subcommands (``forward``, ``design``, ``simulate``, ``validate``) read a
JSON config plus CSV inputs, send one request to the service — an
in-process instance by default, or a remote one via ``--server`` — and
write the returned artifacts to the output directory.  ``serve`` runs the
service standalone.

Exit codes: 0 success, 2 validation failure, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

import httpx

from . import __version__, errors
from .config import PipelineConfig, config_from_dict
from .errors import ConfigurationError, ParseError, SoftScatterError
from .storage import (
    domain_to_json,
    read_density,
    read_field,
    read_header,
    read_pattern,
    write_density,
    write_ensemble,
    write_field,
    write_pattern,
    write_report,
)

logger = logging.getLogger(__name__)

__all__ = ["main"]

_EXIT_BY_ERROR_CLASS = {
    cls.__name__: cls.exit_code
    for cls in vars(errors).values()
    if isinstance(cls, type) and issubclass(cls, SoftScatterError)
}


class ServiceClient:
    """POSTs to a remote server or an in-process app instance."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        if self.server is not None:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                resp = client.post(path, json=payload)
                return resp.status_code, resp.json()

        async def _go():
            from .service import create_app

            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport, timeout=None,
                                         base_url="http://softscatter.local") as client:
                resp = await client.post(path, json=payload)
                return resp.status_code, resp.json()

        return asyncio.run(_go())


def _exit_code_for(status: int, body: dict) -> int:
    detail = body.get("detail")
    if isinstance(detail, dict) and "error_class" in detail:
        return _EXIT_BY_ERROR_CLASS.get(detail["error_class"], 3)
    if status == 422:  # request-model validation
        return 2
    return 3


def _describe_error(body: dict) -> str:
    detail = body.get("detail")
    if isinstance(detail, dict):
        return detail.get("message", json.dumps(detail))
    if isinstance(detail, list):
        parts = []
        for err in detail:
            loc = ".".join(str(p) for p in err.get("loc", [])[1:]) or "<request>"
            parts.append(f"{loc}: {err.get('msg', '?')}")
        return "; ".join(parts)
    return json.dumps(body)


def _load_config(args) -> PipelineConfig:
    raw = json.loads(Path(args.config).read_text())
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config {args.config} must contain a JSON object")
    if args.out is not None:
        raw["output_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        raw["seeds"] = [args.seed]
    if args.threads is not None:
        raw["threads"] = args.threads
    return config_from_dict(raw)


def _post_or_fail(client: ServiceClient, path: str, payload: dict) -> dict:
    """POST and return the body; raise SystemExit with the mapped code on error."""
    status, body = client.post(path, payload)
    if status != 200:
        print(f"error: {_describe_error(body)}", file=sys.stderr)
        raise SystemExit(_exit_code_for(status, body))
    return body


def _ensemble_meta(config: PipelineConfig, m: int, seed: int) -> dict:
    return {
        "M": m,
        "alpha": list(config.alpha),
        "domain": domain_to_json(config.domain.to_domain()),
        "k": config.k,
        "resolution": config.resolution,
        "seed": seed,
    }


# ---------------------------------------------------------------------------
# subcommands


def _cmd_forward(args) -> int:
    from .service.schemas import FieldPayload, ForwardRequest, ForwardResponse

    config = _load_config(args)
    q = read_field(args.q_file)
    request = ForwardRequest(config=config, q=FieldPayload.from_field(q))
    body = _post_or_fail(ServiceClient(args.server), "/api/forward",
                         request.model_dump(mode="json"))
    response = ForwardResponse.model_validate(body)
    out = Path(config.output_dir)
    write_pattern(out / "pattern.csv", response.pattern.to_pattern())
    write_report(out / "forward_report.json", response.report)
    print(f"pattern norm {response.report['pattern_norm']:.6g}, "
          f"residual {response.report['residual']:.3e} -> {out / 'pattern.csv'}")
    return 0


def _cmd_design(args) -> int:
    from .service.schemas import DesignRequest, DesignResponse, PatternPayload

    config = _load_config(args)
    target = read_pattern(args.target_file)
    request = DesignRequest(config=config, target=PatternPayload.from_pattern(target))
    body = _post_or_fail(ServiceClient(args.server), "/api/design",
                         request.model_dump(mode="json"))
    response = DesignResponse.model_validate(body)
    out = Path(config.output_dir)
    write_field(out / "h.csv", response.h.to_field())
    write_field(out / "u.csv", response.u.to_field())
    write_field(out / "q.csv", response.q.to_field())
    if response.density is not None:
        write_density(out / "density.csv", response.density.to_density())
    write_report(out / "design_report.json", response.report)
    report = response.report
    print(f"final error {report['final_error']:.6g} "
          f"(bound {report['bound']:.6g}, eps {config.eps_targets.eps:.6g}) -> {out}")
    if not report["within_eps"]:
        print(f"error: final error {report['final_error']:.6g} exceeds "
              f"eps = {config.eps_targets.eps:.6g}", file=sys.stderr)
        return 3
    return 0


def _cmd_simulate(args) -> int:
    from .service.schemas import (
        DensityPayload,
        FieldPayload,
        SimulateRequest,
        SimulateResponse,
    )

    config = _load_config(args)
    header = read_header(args.input_file)
    fmt = header.get("format")
    if fmt == "density":
        request = SimulateRequest(
            config=config,
            density=DensityPayload.from_density(read_density(args.input_file)))
    elif fmt == "field":
        request = SimulateRequest(
            config=config, q=FieldPayload.from_field(read_field(args.input_file)))
    else:
        raise ParseError(f"simulate expects a field or density file, found format={fmt!r}",
                         path=str(args.input_file), line=1)
    body = _post_or_fail(ServiceClient(args.server), "/api/simulate",
                         request.model_dump(mode="json"))
    response = SimulateResponse.model_validate(body)
    out = Path(config.output_dir)
    for run in response.runs:
        stem = f"M{run.M}_seed{run.seed}"
        write_ensemble(out / f"ensemble_{stem}.csv", run.ensemble.to_ensemble(),
                       _ensemble_meta(config, run.M, run.seed))
        write_pattern(out / f"pattern_{stem}.csv", run.pattern.to_pattern())
    if response.reference is not None:
        write_pattern(out / "reference_pattern.csv", response.reference.to_pattern())
    write_report(out / "simulate_report.json", response.report)
    medians = response.report["medians"]
    print("median errors: "
          + ", ".join(f"M={m}: {medians[m]:.4f}" for m in sorted(medians, key=int))
          + f" -> {out / 'simulate_report.json'}")
    return 0


def _cmd_validate(args) -> int:
    from .service.schemas import ValidateRequest

    config = _load_config(args)
    request = ValidateRequest(config=config)
    body = _post_or_fail(ServiceClient(args.server), "/api/validate",
                         request.model_dump(mode="json"))
    report = body["report"]
    out = Path(config.output_dir)
    write_report(out / "validation_report.json", report)
    for check in report["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        print(f"{status:4s}  {check['name']:<28s} value={check['value']:.3e} "
              f"threshold={check['threshold']:.3e}")
    if not report["all_passed"]:
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        print(f"error: {len(failed)} check(s) failed: {', '.join(failed)}",
              file=sys.stderr)
        return 2
    print(f"all {len(report['checks'])} checks passed -> {out / 'validation_report.json'}")
    return 0


def _cmd_serve(args) -> int:
    try:
        import uvicorn
    except ImportError:
        print("error: the serve command needs uvicorn (pip install 'softscatter[server]')",
              file=sys.stderr)
        return 2
    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softscatter",
        description="Radiation-pattern synthesis and small-particle realization.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed: bool = False) -> None:
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None,
                       help="BLAS thread cap (overrides config)")
        p.add_argument("--server", default=None,
                       help="base URL of a running service; default runs in-process")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="replace the config seed list with this single seed")

    p = sub.add_parser("forward", help="solve the direct problem for a stored potential")
    p.add_argument("q_file", help="potential field CSV")
    common(p)
    p.set_defaults(func=_cmd_forward)

    p = sub.add_parser("design", help="synthesize a potential for a target pattern")
    p.add_argument("target_file", help="target pattern CSV")
    common(p)
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("simulate", help="run the particle convergence experiment")
    p.add_argument("input_file", help="potential field or density CSV")
    common(p, seed=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate", help="run the invariant battery")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if sys.stderr.isatty() else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except SoftScatterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"error: service request failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
