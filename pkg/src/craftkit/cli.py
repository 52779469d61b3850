"""Command line front end.

Every subcommand prints a JSON document on stdout and logs on stderr.
Exit codes: 0 success, 1 validation or simulation failure, 2 usage or
I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor

from .assembler import build_assembly, connectivity_check
from .catalog import default_catalog, load_catalog
from .collision import validate_collisions
from .errors import CraftError, JsonSyntaxError, PlacementError
from .metrics import (
    compare_assembly_to_mesh,
    compare_meshes,
)
from .meshing import export_assembly_obj
from .orchestrator import (
    POLICIES,
    POLICY_FEEDBACK,
    HttpClient,
    ScriptedClient,
    classify_failure,
    run_pipeline,
)
from .physics import SimConfig, run_functional_test
from .plan import FormatReport, load_plan

log = logging.getLogger("craftkit")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _catalog(args):
    if getattr(args, "catalog", None):
        return load_catalog(args.catalog, strict=False)
    return default_catalog()


def _load_valid_plan(path, catalog):
    try:
        plan, report = load_plan(path, catalog)
    except JsonSyntaxError as exc:
        report = FormatReport()
        report.add(None, None, "JsonSyntaxError", str(exc))
        return None, report
    return plan, report


def cmd_validate(args):
    catalog = _catalog(args)
    plan, report = _load_valid_plan(args.plan, catalog)
    _emit(report.to_dict())
    return EXIT_OK if plan is not None else EXIT_INVALID


def cmd_build(args):
    catalog = _catalog(args)
    plan, report = _load_valid_plan(args.plan, catalog)
    if plan is None:
        _emit({"stage": "FORMAT", "report": report.to_dict()})
        return EXIT_INVALID
    try:
        assembly = build_assembly(plan, catalog)
    except (PlacementError, CraftError) as exc:
        _emit({"stage": "POSITION",
               "report": {"error": type(exc).__name__, "message": str(exc)}})
        return EXIT_INVALID
    collisions = validate_collisions(assembly)
    components = connectivity_check(assembly)
    payload = {
        "assembly": assembly.to_jsonable(),
        "collisions": collisions.to_dict(),
        "connected": components is None,
    }
    if components is not None:
        payload["components"] = [sorted(c) for c in components]
    if args.obj:
        export_assembly_obj(assembly, args.obj)
        payload["obj"] = args.obj
        log.info("wrote %s", args.obj)
    _emit(payload)
    ok = collisions.ok and components is None
    return EXIT_OK if ok else EXIT_INVALID


def cmd_simulate(args):
    catalog = _catalog(args)
    plan, report = _load_valid_plan(args.plan, catalog)
    if plan is None:
        _emit({"stage": "FORMAT", "report": report.to_dict()})
        return EXIT_INVALID
    try:
        assembly = build_assembly(plan, catalog)
    except (PlacementError, CraftError) as exc:
        _emit({"stage": "POSITION",
               "report": {"error": type(exc).__name__, "message": str(exc)}})
        return EXIT_INVALID
    config = SimConfig()
    if args.duration is not None:
        config.duration = args.duration
    outcome = run_functional_test(args.test, assembly, plan, config)
    payload = outcome.to_dict()
    if not args.trace:
        payload.pop("trajectory", None)
    else:
        with open(args.trace, "w", encoding="utf-8") as fh:
            json.dump(outcome.trajectory, fh)
        payload["trace"] = args.trace
    _emit(payload)
    return EXIT_OK if outcome.success else EXIT_INVALID


def cmd_metrics(args):
    if args.plan:
        catalog = _catalog(args)
        plan, report = _load_valid_plan(args.plan, catalog)
        if plan is None:
            _emit({"stage": "FORMAT", "report": report.to_dict()})
            return EXIT_INVALID
        assembly = build_assembly(plan, catalog)
        result = compare_assembly_to_mesh(
            assembly, args.ref, n_samples=args.samples, seed=args.seed,
            threshold=args.threshold)
    else:
        result = compare_meshes(
            args.pred, args.ref, n_samples=args.samples, seed=args.seed,
            threshold=args.threshold)
    _emit(result.to_dict())
    return EXIT_OK


def _make_client(args):
    if args.responses:
        return ScriptedClient(args.responses)
    if args.endpoint and args.model:
        return HttpClient(args.endpoint, args.model, api_key=args.api_key)
    raise SystemExit(EXIT_USAGE)


def cmd_pipeline(args):
    catalog = _catalog(args)
    client = _make_client(args)
    result = run_pipeline(args.category, client, policy=args.policy,
                          catalog=catalog)
    payload = result.to_dict()
    payload["classification"] = classify_failure(result.failure_stage)
    _emit(payload)
    return EXIT_OK if result.status == "success" else EXIT_INVALID


def _batch_job(job, policy, catalog):
    client = ScriptedClient(job["responses"])
    result = run_pipeline(job["category"], client, policy=policy,
                          catalog=catalog)
    return {
        "category": job["category"],
        "attempts": result.llm_calls,
        "status": result.status,
        "failure_stage": result.failure_stage,
    }


def cmd_batch(args):
    catalog = _catalog(args)
    with open(args.manifest, "r", encoding="utf-8") as fh:
        jobs = json.load(fh)
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        rows = list(pool.map(
            lambda j: _batch_job(j, args.policy, catalog), jobs))
    out = open(args.out, "w", newline="", encoding="utf-8") \
        if args.out else sys.stdout
    try:
        writer = csv.DictWriter(
            out, fieldnames=["category", "attempts", "status",
                             "failure_stage"])
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    failed = sum(1 for r in rows if r["status"] != "success")
    log.info("batch: %d jobs, %d failed", len(rows), failed)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="craftkit",
        description="Validate, build, simulate, and score assembly plans.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="format-validate a plan file")
    p.add_argument("plan")
    p.add_argument("--catalog")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build", help="place parts and run position checks")
    p.add_argument("plan")
    p.add_argument("--catalog")
    p.add_argument("--obj", help="export the assembly as an OBJ mesh")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("simulate", help="run a functional simulation test")
    p.add_argument("plan")
    p.add_argument("--test", required=True,
                   choices=["rolling", "support", "hit"])
    p.add_argument("--catalog")
    p.add_argument("--duration", type=float)
    p.add_argument("--trace", help="write the trajectory to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="visual similarity against a mesh")
    p.add_argument("--plan", help="plan file; built then compared")
    p.add_argument("--pred", help="prediction OBJ (alternative to --plan)")
    p.add_argument("--ref", required=True, help="reference OBJ")
    p.add_argument("--catalog")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("pipeline", help="prompt a client and validate")
    p.add_argument("--category", required=True)
    p.add_argument("--policy", default=POLICY_FEEDBACK, choices=POLICIES)
    p.add_argument("--responses",
                   help="directory of canned responses (scripted client)")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--api-key")
    p.add_argument("--catalog")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("batch", help="run many scripted pipelines, CSV out")
    p.add_argument("manifest",
                   help="JSON list of {category, responses} jobs")
    p.add_argument("--policy", default=POLICY_FEEDBACK, choices=POLICIES)
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--catalog")
    p.set_defaults(func=cmd_batch)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except CraftError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
