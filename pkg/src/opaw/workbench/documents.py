"""Instance and result documents: canonical JSON, validation with pointer
paths, and builders that turn documents into solver inputs."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..elicitation import ElicitationSession
from ..errors import ParseError, SchemaError, UnknownIdError
from ..opa_pr import PrInstance, PrResult
from ..profiles import PrsResult, RankingProfile, WeightSolution
from ..utility import MomentConstraint, ScenarioSet, StepFunction, UtilityAmbiguitySpec

SCHEMA_VERSION = 1


def canonical_dumps(obj) -> str:
    """Canonical form used for hashing and byte-identical round-trips."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def load_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def save_json(path, obj):
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return (_is_int(x) or isinstance(x, float)) and math.isfinite(x)


def _rank_matrix_errors(rows, n_rows, n_cols, upper, pointer, out):
    if not isinstance(rows, list) or len(rows) != n_rows:
        out.append((pointer, f"expected a list of {n_rows} rows"))
        return
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_cols:
            out.append((f"{pointer}/{i}", f"expected {n_cols} entries"))
            continue
        for j, v in enumerate(row):
            if not _is_int(v) or not 1 <= v <= upper:
                out.append((f"{pointer}/{i}/{j}", f"rank must be an integer in 1..{upper}"))


def validate_instance_document(doc) -> list[tuple[str, str]]:
    """Collect every violation as (json_pointer, message); empty means valid."""
    errors: list[tuple[str, str]] = []
    if not isinstance(doc, dict):
        return [("", "document must be a JSON object")]
    if doc.get("schema_version") != SCHEMA_VERSION:
        errors.append(("/schema_version", f"expected {SCHEMA_VERSION}"))

    expert_ranks = doc.get("expert_ranks")
    if not isinstance(expert_ranks, list) or not expert_ranks:
        errors.append(("/expert_ranks", "required: nonempty list of integer ranks"))
        return errors
    n_experts = len(expert_ranks)
    for i, v in enumerate(expert_ranks):
        if not _is_int(v) or not 1 <= v <= n_experts:
            errors.append((f"/expert_ranks/{i}", f"rank must be an integer in 1..{n_experts}"))

    alt = doc.get("alternative_ranks")
    if not isinstance(alt, list) or len(alt) != n_experts:
        errors.append(("/alternative_ranks", f"required: one block of rows per expert ({n_experts})"))
        return errors
    n_attributes = None
    n_alternatives = None
    for i, block in enumerate(alt):
        if not isinstance(block, list) or not block:
            errors.append((f"/alternative_ranks/{i}", "expected a nonempty list of attribute rows"))
            continue
        if n_attributes is None:
            n_attributes = len(block)
        elif len(block) != n_attributes:
            errors.append((f"/alternative_ranks/{i}", f"expected {n_attributes} attribute rows"))
            continue
        for j, row in enumerate(block):
            if not isinstance(row, list) or not row:
                errors.append((f"/alternative_ranks/{i}/{j}", "expected a nonempty rank row"))
                continue
            if n_alternatives is None:
                n_alternatives = len(row)
            if len(row) != n_alternatives:
                errors.append((f"/alternative_ranks/{i}/{j}", f"expected {n_alternatives} ranks"))
                continue
            bad = [v for v in row if not _is_int(v) or not 1 <= v <= n_alternatives]
            if bad:
                errors.append(
                    (f"/alternative_ranks/{i}/{j}", f"ranks must be integers in 1..{n_alternatives}")
                )
            elif sorted(row) != list(range(1, n_alternatives + 1)):
                errors.append(
                    (
                        f"/alternative_ranks/{i}/{j}",
                        "ranks must form a strict ranking (a bijection onto 1..K); ties are rejected",
                    )
                )
    if n_attributes is None or n_alternatives is None:
        return errors

    attr = doc.get("attribute_ranks")
    intervals = doc.get("attribute_rank_intervals")
    if attr is None and intervals is None:
        errors.append(("/attribute_ranks", "either attribute_ranks or attribute_rank_intervals is required"))
    if attr is not None:
        _rank_matrix_errors(attr, n_experts, n_attributes, n_attributes, "/attribute_ranks", errors)
    if intervals is not None:
        if not isinstance(intervals, list) or len(intervals) != n_experts:
            errors.append(("/attribute_rank_intervals", f"expected {n_experts} rows"))
        else:
            for i, row in enumerate(intervals):
                if not isinstance(row, list) or len(row) != n_attributes:
                    errors.append((f"/attribute_rank_intervals/{i}", f"expected {n_attributes} pairs"))
                    continue
                for j, pair in enumerate(row):
                    ok = (
                        isinstance(pair, list)
                        and len(pair) == 2
                        and all(_is_int(v) for v in pair)
                        and 1 <= pair[0] <= pair[1] <= n_attributes
                    )
                    if not ok:
                        errors.append(
                            (
                                f"/attribute_rank_intervals/{i}/{j}",
                                f"expected [lo, hi] with 1 <= lo <= hi <= {n_attributes}",
                            )
                        )

    lipschitz = doc.get("lipschitz")
    if lipschitz is not None and (not _is_num(lipschitz) or lipschitz <= 0):
        errors.append(("/lipschitz", "must be a positive number"))

    scenarios = doc.get("scenarios")
    if scenarios is not None:
        if not isinstance(scenarios, dict):
            errors.append(("/scenarios", "expected {outcomes, probabilities}"))
        else:
            outcomes = scenarios.get("outcomes")
            probs = scenarios.get("probabilities")
            if not isinstance(outcomes, list) or not all(_is_num(v) for v in outcomes):
                errors.append(("/scenarios/outcomes", "expected a list of numbers"))
            if not isinstance(probs, list) or not all(_is_num(v) for v in probs):
                errors.append(("/scenarios/probabilities", "expected a list of numbers"))
            elif isinstance(outcomes, list) and len(outcomes) != len(probs):
                errors.append(("/scenarios/probabilities", "must match outcomes in length"))

    prefs = doc.get("preferences")
    if prefs is not None:
        if not isinstance(prefs, list) or len(prefs) != n_experts:
            errors.append(("/preferences", f"expected one row per expert ({n_experts})"))
        else:
            for i, row in enumerate(prefs):
                if not isinstance(row, list) or len(row) != n_attributes:
                    errors.append((f"/preferences/{i}", f"expected {n_attributes} entries"))
                    continue
                for j, cell in enumerate(row):
                    if cell is None:
                        continue
                    if not isinstance(cell, dict) or not ("session" in cell or "constraints" in cell):
                        errors.append(
                            (f"/preferences/{i}/{j}", "expected null, {session: id} or {constraints: [...]}")
                        )

    expert_intervals = doc.get("expert_rank_intervals")
    if expert_intervals is not None:
        if not isinstance(expert_intervals, list) or len(expert_intervals) != n_experts:
            errors.append(("/expert_rank_intervals", f"expected {n_experts} pairs"))
        else:
            for i, pair in enumerate(expert_intervals):
                ok = (
                    isinstance(pair, list)
                    and len(pair) == 2
                    and all(_is_num(v) for v in pair)
                    and pair[0] <= expert_ranks[min(i, n_experts - 1)] <= pair[1]
                )
                if not ok:
                    errors.append(
                        (f"/expert_rank_intervals/{i}", "expected [lo, hi] containing the nominal rank")
                    )

    alpha = doc.get("alpha")
    if alpha is not None and (not _is_num(alpha) or not 0.0 <= alpha <= 1.0):
        errors.append(("/alpha", "must be a number in [0, 1]"))
    return errors


def check_instance_document(doc) -> dict:
    errors = validate_instance_document(doc)
    if errors:
        raise SchemaError(errors)
    return doc


def load_instance(path) -> dict:
    """Read, parse, and validate an instance document."""
    return check_instance_document(load_json(path))


def ranking_profile_from_document(doc) -> RankingProfile:
    check_instance_document(doc)
    attr = doc.get("attribute_ranks")
    if attr is None:
        attr = [[pair[0] for pair in row] for row in doc["attribute_rank_intervals"]]
    profile = RankingProfile(doc["expert_ranks"], attr, doc["alternative_ranks"])
    profile.validate()
    return profile


def moment_constraint_to_dict(c: MomentConstraint) -> dict:
    return {
        "psi": {
            "domain_end": c.psi.domain_end,
            "breakpoints": c.psi.breakpoints.tolist(),
            "levels": c.psi.levels.tolist(),
        },
        "bound": c.bound,
    }


def moment_constraint_from_dict(d: dict) -> MomentConstraint:
    return MomentConstraint(
        StepFunction(
            float(d["psi"]["domain_end"]),
            d["psi"]["breakpoints"],
            d["psi"]["levels"],
        ),
        float(d["bound"]),
    )


def pr_instance_from_document(doc, session_loader=None) -> PrInstance:
    """Build the two-stage instance; ``session_loader`` resolves referenced
    elicitation sessions by id to their stored documents."""
    check_instance_document(doc)
    n_ranks = len(doc["alternative_ranks"][0][0])
    n_experts = len(doc["expert_ranks"])
    n_attributes = len(doc["alternative_ranks"][0])
    lipschitz = doc.get("lipschitz")
    if lipschitz is None:
        lipschitz = 1.0 / n_ranks
    intervals = doc.get("attribute_rank_intervals")
    if intervals is None:
        intervals = [[[s, s] for s in row] for row in doc["attribute_ranks"]]

    specs = None
    prefs = doc.get("preferences")
    if prefs is not None:
        specs = []
        for i in range(n_experts):
            row = []
            for j in range(n_attributes):
                cell = prefs[i][j]
                if cell is None:
                    row.append(None)
                    continue
                if "session" in cell:
                    if session_loader is None:
                        raise UnknownIdError(
                            f"preference cell ({i},{j}) references session {cell['session']!r} "
                            "but no session store is available"
                        )
                    session = ElicitationSession.from_dict(session_loader(cell["session"]))
                    row.append(session.finalize())
                else:
                    constraints = [moment_constraint_from_dict(c) for c in cell["constraints"]]
                    row.append(UtilityAmbiguitySpec.on_ranks(n_ranks, lipschitz, constraints))
            specs.append(row)

    scenarios = None
    if doc.get("scenarios") is not None:
        scenarios = ScenarioSet(doc["scenarios"]["outcomes"], doc["scenarios"]["probabilities"])
    return PrInstance(
        expert_ranks=doc["expert_ranks"],
        attribute_rank_intervals=intervals,
        alternative_ranks=doc["alternative_ranks"],
        lipschitz=float(lipschitz),
        ambiguity_specs=specs,
        scenarios=scenarios,
    )


def _weights_payload(solution: WeightSolution) -> dict:
    return {
        "z": solution.z,
        "weights_by_rank": solution.weights.tolist(),
        "weights_by_alternative": solution.weights_by_alternative().tolist(),
    }


def _groups_payload(groups) -> dict:
    return {
        "experts": groups.experts.tolist(),
        "attributes": groups.attributes.tolist(),
        "alternatives": groups.alternatives.tolist(),
    }


def result_document_opa(solution: WeightSolution, groups, provenance: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "opa",
        **_weights_payload(solution),
        "aggregates": _groups_payload(groups),
        "provenance": provenance,
    }


def result_document_pr(result: PrResult, provenance: dict) -> dict:
    utilities = [
        [
            {"grid": res.utility.grid.tolist(), "values": res.utility.values.tolist(), "rho": res.rho}
            for res in row
        ]
        for row in result.stage1
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "opa-pr",
        **_weights_payload(result.solution),
        "aggregates": _groups_payload(result.groups),
        "worst_case_utilities": utilities,
        "normalized_utility_table": result.table.values.tolist(),
        "provenance": provenance,
    }


def result_document_prs(result: PrsResult, provenance: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "opa-prs",
        **_weights_payload(result.solution),
        "aggregates": _groups_payload(result.groups),
        "fragility": {
            "eta": result.eta.tolist(),
            "total": result.total_fragility,
            "phi": result.fragility_phi,
            "alpha": result.alpha,
            "z_target": result.z_target,
        },
        "provenance": provenance,
    }


def provenance(method: str, **extra) -> dict:
    base = {
        "method": method,
        "feasibility_tolerance": 1e-9,
        "milp_gap": 1e-7,
    }
    base.update(extra)
    return base


def instance_to_arrays(doc) -> dict:
    """Convenience view used by tests: numpy arrays keyed like the document."""
    return {
        "expert_ranks": np.asarray(doc["expert_ranks"]),
        "alternative_ranks": np.asarray(doc["alternative_ranks"]),
    }
