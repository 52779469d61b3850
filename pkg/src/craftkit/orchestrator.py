"""LLM orchestration: prompting, validation stages, and re-prompting.

The pipeline asks a client for a plan, runs it through format, position,
and physics validation, and optionally asks again.  Clients are pluggable;
the scripted client replays canned responses so the whole pipeline runs
offline and deterministically.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, field
from pathlib import Path

from .assembler import build_assembly, connectivity_check
from .catalog import Catalog, default_catalog
from .collision import validate_collisions
from .errors import (
    ClientError,
    HoleExceedsOwner,
    JsonSyntaxError,
    PlacementError,
)
from .physics import SimConfig, run_functional_test
from .plan import normalize_raw, parse_plan, serialize_plan

# failure stages
STAGE_FORMAT = "FORMAT"
STAGE_COLLISION = "COLLISION"
STAGE_CONNECTIVITY = "CONNECTIVITY"
STAGE_PHYSICS = "PHYSICS"
STAGE_NONE = "NONE"

# re-prompting policies
POLICY_NONE = "NONE"
POLICY_FRESH = "FRESH"
POLICY_FEEDBACK = "FEEDBACK"
POLICIES = (POLICY_NONE, POLICY_FRESH, POLICY_FEEDBACK)

MAX_LLM_CALLS = 3
MAX_CLIENT_RETRIES = 3


def load_heuristics():
    ref = importlib.resources.files("craftkit.data") / "heuristics.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def load_template(category):
    ref = importlib.resources.files("craftkit.data") / "templates" \
        / f"{category.lower()}.json"
    try:
        return ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        return None


def category_function(category):
    entry = load_heuristics().get(category.lower())
    return entry["function"] if entry else None


@dataclass
class PromptBundle:
    category: str
    instruction: str | None = None
    template: str | None = None
    heuristics: dict | None = None
    catalog: Catalog | None = None
    feedback: str | None = None


def build_prompt(bundle: PromptBundle) -> str:
    """Assemble the full prompt text for one request."""
    category = bundle.category
    heur = bundle.heuristics
    if heur is None:
        heur = load_heuristics().get(category.lower())
    template = bundle.template
    if template is None:
        template = load_template(category)
    catalog = bundle.catalog or default_catalog()

    lines = []
    if bundle.instruction:
        lines.append(bundle.instruction)
    else:
        lines.append(
            f"Design a {category} out of the available objects below. "
            "Answer with a JSON array of part entries only, following the "
            "plan language exactly."
        )
    lines.append("")
    lines.append("Available objects (dimensions in mm):")
    for obj in catalog.objects:
        lines.append(f"- {obj.id}")
    if heur:
        lines.append("")
        lines.append("Minimal set of parts:")
        lines.append(json.dumps(heur.get("minimal_parts", {})))
        if heur.get("constraint"):
            lines.append("Constraint: " + heur["constraint"])
    if template:
        lines.append("")
        lines.append("Example of a valid plan for this category:")
        lines.append(template.strip())
    if bundle.feedback:
        lines.append("")
        lines.append(
            "Your previous plan failed validation. The validator reported:")
        lines.append(bundle.feedback)
        lines.append("Return a corrected plan.")
    return "\n".join(lines)


class LlmClient:
    """Interface: complete(prompt) returns the raw model text."""

    def complete(self, prompt: str) -> str:  # pragma: no cover - interface
        raise NotImplementedError


class HttpClient(LlmClient):
    """Chat-completions style HTTP client."""

    def __init__(self, endpoint, model, api_key=None, temperature=0.0,
                 timeout=120.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = requests.post(self.endpoint, json=payload,
                                 headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError,
                ValueError) as exc:
            raise ClientError(str(exc)) from exc


class ScriptedClient(LlmClient):
    """Replays canned responses in order; used for tests and demos.

    Accepts either a list of strings or a directory of numbered files
    (sorted lexicographically).
    """

    def __init__(self, responses):
        if isinstance(responses, (str, Path)):
            directory = Path(responses)
            self.responses = [
                p.read_text(encoding="utf-8")
                for p in sorted(directory.iterdir()) if p.is_file()
            ]
        else:
            self.responses = list(responses)
        self.cursor = 0
        self.prompts: list = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if self.cursor >= len(self.responses):
            raise ClientError("scripted client has no responses left")
        out = self.responses[self.cursor]
        self.cursor += 1
        return out


@dataclass
class AttemptRecord:
    raw: str
    failure_stage: str
    report: dict = field(default_factory=dict)
    plan_json: str | None = None


@dataclass
class PipelineResult:
    category: str
    status: str  # "success" | "failed"
    failure_stage: str
    attempts: list = field(default_factory=list)
    llm_calls: int = 0
    plan: object = None
    assembly: object = None
    outcome: object = None

    def to_dict(self):
        return {
            "category": self.category,
            "status": self.status,
            "failure_stage": self.failure_stage,
            "llm_calls": self.llm_calls,
            "attempts": [
                {"failure_stage": a.failure_stage, "report": a.report}
                for a in self.attempts
            ],
            "outcome": self.outcome.to_dict() if self.outcome else None,
        }


def classify_failure(stage: str) -> str:
    """Map a failure stage onto the coarse validator buckets."""
    if stage == STAGE_FORMAT:
        return "Format Val."
    if stage in (STAGE_COLLISION, STAGE_CONNECTIVITY):
        return "Position Val."
    if stage == STAGE_PHYSICS:
        return "Physics Val."
    return "Success"


def evaluate_plan_text(raw, catalog, functional=None, sim_config=None):
    """Run one raw response through every validation stage.

    Returns (stage, report_dict, plan, assembly, outcome).
    """
    try:
        normalized = normalize_raw(raw)
    except JsonSyntaxError as exc:
        return STAGE_FORMAT, {"error": "JsonSyntaxError",
                              "message": str(exc)}, None, None, None
    plan, report = parse_plan(normalized, catalog)
    if plan is None:
        return STAGE_FORMAT, report.to_dict(), None, None, None

    try:
        assembly = build_assembly(plan, catalog)
    except HoleExceedsOwner as exc:
        return STAGE_COLLISION, {"error": "HoleExceedsOwner",
                                 "message": str(exc)}, plan, None, None
    except PlacementError as exc:
        stage = STAGE_CONNECTIVITY if type(exc).__name__ in (
            "Unplaceable", "HoleNotCarvedYet") else STAGE_COLLISION
        return stage, {"error": type(exc).__name__,
                       "message": str(exc)}, plan, None, None

    collisions = validate_collisions(assembly)
    if not collisions.ok:
        return (STAGE_COLLISION, collisions.to_dict(), plan, assembly, None)

    components = connectivity_check(assembly)
    if components is not None:
        return (STAGE_CONNECTIVITY,
                {"error": "Disconnected",
                 "components": [sorted(c) for c in components]},
                plan, assembly, None)

    if functional is None:
        return STAGE_NONE, {}, plan, assembly, None
    outcome = run_functional_test(functional, assembly, plan, sim_config)
    if not outcome.success:
        report = outcome.to_dict()
        report.pop("trajectory", None)
        return STAGE_PHYSICS, report, plan, assembly, outcome
    return STAGE_NONE, {}, plan, assembly, outcome


def _call(client, prompt):
    last = None
    for _ in range(MAX_CLIENT_RETRIES):
        try:
            return client.complete(prompt)
        except ClientError as exc:
            last = exc
    raise last


def run_pipeline(category, client, policy=POLICY_FEEDBACK, catalog=None,
                 functional="auto", sim_config=None, instruction=None,
                 template=None) -> PipelineResult:
    """Prompt, validate, and re-prompt within the policy's budget.

    Budgets: NONE issues a single call; FRESH retries the identical prompt
    up to twice more; FEEDBACK allows one retry for a pre-simulation
    failure and one more for a simulation failure.  Every policy stays
    within three LLM calls.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    catalog = catalog or default_catalog()
    if functional == "auto":
        functional = category_function(category)
    if sim_config is None:
        sim_config = SimConfig()

    result = PipelineResult(category=category, status="failed",
                            failure_stage=STAGE_NONE)
    pre_sim_retries = 0
    sim_retries = 0
    feedback = None
    while result.llm_calls < MAX_LLM_CALLS:
        bundle = PromptBundle(
            category=category, instruction=instruction, template=template,
            catalog=catalog,
            feedback=feedback if policy == POLICY_FEEDBACK else None)
        raw = _call(client, build_prompt(bundle))
        result.llm_calls += 1
        stage, report, plan, assembly, outcome = evaluate_plan_text(
            raw, catalog, functional=functional, sim_config=sim_config)
        result.attempts.append(AttemptRecord(
            raw=raw, failure_stage=stage, report=report,
            plan_json=serialize_plan(plan) if plan is not None else None))
        result.failure_stage = stage
        result.plan = plan
        result.assembly = assembly
        result.outcome = outcome
        if stage == STAGE_NONE:
            result.status = "success"
            return result
        if policy == POLICY_NONE:
            return result
        if policy == POLICY_FRESH:
            if result.llm_calls >= MAX_LLM_CALLS:
                return result
            continue
        # FEEDBACK
        if stage in (STAGE_FORMAT, STAGE_COLLISION, STAGE_CONNECTIVITY):
            if pre_sim_retries >= 1:
                return result
            pre_sim_retries += 1
        else:
            if sim_retries >= 1:
                return result
            sim_retries += 1
        feedback = json.dumps(report, indent=2)
    return result
