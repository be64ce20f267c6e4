"""Command-line workbench: solve instances, run the questionnaire, benchmark,
and serve the HTTP API.

Exit codes: 0 success, 2 validation problem (bad flags, malformed documents,
inconsistent replays), 3 solver failure.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click

from .. import elicitation, lp
from ..benchmarks import (
    DecisionMatrix,
    moora,
    sensitivity_permutations,
    spearman,
    topsis,
    vikor,
)
from ..errors import OpawError, ParseError, ValidationError
from ..opa import aggregate_weights, solve_opa_closed_form, solve_opa_lp
from ..opa_pr import solve_opa_pr
from ..opa_prs import PrsInstance, solve_opa_prs
from . import documents
from .store import default_data_dir

EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _fail(exc: OpawError):
    click.echo(f"error[{exc.code}]: {exc}", err=True)
    sys.exit(EXIT_VALIDATION if exc.category == "validation" else EXIT_SOLVER)


def _write_out(out: str | None, doc: dict):
    if out:
        documents.save_json(out, doc)
        click.echo(f"wrote {out}")


def _echo_weights(doc: dict):
    click.echo(f"z = {doc['z']:.6f}")
    agg = doc["aggregates"]
    for name, values in (
        ("experts", agg["experts"]),
        ("attributes", agg["attributes"]),
        ("alternatives", agg["alternatives"]),
    ):
        pretty = ", ".join(f"{v:.4f}" for v in values)
        click.echo(f"{name}: {pretty}")


@click.group()
@click.option("--lp-trace", is_flag=True, help="dump simplex tableaus to stderr")
def main(lp_trace: bool):
    """Ordinal priority workbench."""
    lp.TRACE = lp_trace


@main.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="write the result document")
@click.option("--path", "solver_path", type=click.Choice(["closed_form", "lp"]), default="closed_form")
def solve(instance, out, solver_path):
    """Classical ordinal-priority weights for INSTANCE."""
    try:
        profile = documents.ranking_profile_from_document(documents.load_instance(instance))
        solver = solve_opa_closed_form if solver_path == "closed_form" else solve_opa_lp
        solution = solver(profile)
        groups = aggregate_weights(solution)
        doc = documents.result_document_opa(
            solution, groups, documents.provenance("opa", solver_path=solver_path)
        )
    except OpawError as exc:
        _fail(exc)
    _echo_weights(doc)
    _write_out(out, doc)


@main.command("pr-solve")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--cross-check", is_flag=True, help="also solve the stage-2 LP and compare")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="session store for preference references")
def pr_solve(instance, out, cross_check, data_dir):
    """Two-stage preference-robust weights for INSTANCE."""
    try:
        loader = None
        if data_dir is not None:
            from .store import JsonStore

            store = JsonStore(data_dir)
            loader = lambda sid: store.load("sessions", sid)  # noqa: E731
        pr = documents.pr_instance_from_document(documents.load_instance(instance), loader)
        result = solve_opa_pr(pr, cross_check=cross_check)
        doc = documents.result_document_pr(
            result, documents.provenance("opa-pr", solver_path="closed_form", cross_check=cross_check)
        )
    except OpawError as exc:
        _fail(exc)
    _echo_weights(doc)
    _write_out(out, doc)


@main.command("prs-solve")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, default=None, help="target performance level in [0, 1]")
@click.option("--alpha-sweep", default=None, metavar="START:STOP:STEP",
              help="emit fragility for a whole range of target levels")
@click.option("--out", type=click.Path(dir_okay=False))
def prs_solve(instance, alpha, alpha_sweep, out):
    """Robust-satisficing weights for INSTANCE."""
    try:
        body = documents.load_instance(instance)
        pr = documents.pr_instance_from_document(body)
        stage = solve_opa_pr(pr)
        rank_map = pr.ranking_profile().rank_to_alternative()
        intervals = body.get("expert_rank_intervals")
        if intervals is None:
            intervals = [[float(t), float(t)] for t in body["expert_ranks"]]
        level = alpha if alpha is not None else float(body.get("alpha", 0.9))

        if alpha_sweep:
            try:
                start, stop, step = (float(x) for x in alpha_sweep.split(":"))
            except ValueError as exc:
                raise ValidationError(f"bad --alpha-sweep {alpha_sweep!r}: {exc}") from exc
            points = []
            level_at = start
            while level_at <= stop + 1e-12:
                res = solve_opa_prs(
                    PrsInstance(stage.profile, stage.table, intervals, round(level_at, 12)),
                    rank_map,
                )
                points.append({"alpha": round(level_at, 12), "total_fragility": res.total_fragility,
                               "phi": res.fragility_phi})
                level_at += step
            doc = {"schema_version": documents.SCHEMA_VERSION, "kind": "opa-prs-sweep", "points": points}
            for point in points:
                click.echo(f"alpha={point['alpha']:.4f} fragility={point['total_fragility']:.6f}")
            _write_out(out, doc)
            if out and out.endswith(".json"):
                csv_path = Path(out).with_suffix(".csv")
                lines = ["alpha,total_fragility,phi"] + [
                    f"{p['alpha']},{p['total_fragility']},{p['phi']}" for p in points
                ]
                csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
                click.echo(f"wrote {csv_path}")
            return

        result = solve_opa_prs(PrsInstance(stage.profile, stage.table, intervals, level), rank_map)
        doc = documents.result_document_prs(result, documents.provenance("opa-prs", alpha=level))
    except OpawError as exc:
        _fail(exc)
    _echo_weights(doc)
    click.echo(f"total fragility = {doc['fragility']['total']:.6f}")
    _write_out(out, doc)


@main.command()
@click.option("--ranks", "-r", type=int, required=True, help="number of ranked alternatives")
@click.option("--lipschitz", "-g", type=float, required=True, help="slope cap of the utility")
@click.option("--questions", "-l", type=int, required=True, help="question budget")
@click.option("--seed", type=int, default=0)
@click.option("--interactive", is_flag=True, help="ask the questions on stdin")
@click.option("--replay", type=click.Path(exists=True, dir_okay=False),
              help="re-run a recorded session and verify it reproduces")
@click.option("--out", type=click.Path(dir_okay=False), help="write the final session document")
def elicit(ranks, lipschitz, questions, seed, interactive, replay, out):
    """Adaptive lottery questionnaire producing an ambiguity-set document."""
    try:
        if interactive and replay:
            raise ValidationError("--interactive and --replay are mutually exclusive")
        if replay:
            recorded = documents.load_json(replay)
            session = elicitation.start_session(
                int(recorded["n_ranks"]),
                float(recorded["lipschitz"]),
                int(recorded["target_questions"]),
                int(recorded["seed"]),
            )
            for item in recorded["asked"]:
                question = session.next_question()
                expected = item["question"]
                got = (question.r1, question.r2, question.r3)
                want = (expected["r1"], expected["r2"], expected["r3"])
                if got != want or abs(question.p - expected["p"]) > 1e-12:
                    raise ValidationError(
                        f"replay diverged at question {question.index}: drew {got}, file has {want}"
                    )
                session.record_answer(item["answer"])
        else:
            session = elicitation.start_session(ranks, lipschitz, questions, seed)
            if session.budget_warning:
                click.echo("warning: 3L + 2 exceeds the rank count; questions may overlap", err=True)
            if interactive:
                while session.status == elicitation.ACTIVE and len(session.asked) < questions:
                    q = session.next_question()
                    click.echo(
                        f"Q{q.index}: lottery pays rank {q.r3} with p={q.p:.3f} else rank {q.r1}; "
                        f"certain outcome is rank {q.r2}"
                    )
                    pick = click.prompt("prefer (l)ottery or (c)ertain", type=click.Choice(["l", "c"]))
                    session.record_answer(
                        elicitation.PREFERS_LOTTERY if pick == "l" else elicitation.PREFERS_CERTAIN
                    )
            elif questions > 0:
                raise ValidationError("a question budget needs --interactive or --replay")
        spec = session.finalize()
        spec_doc = {
            "n_ranks": session.n_ranks,
            "lipschitz": session.lipschitz,
            "constraints": [documents.moment_constraint_to_dict(c) for c in spec.constraints],
        }
        digest = hashlib.sha256(documents.canonical_dumps(spec_doc).encode()).hexdigest()
        click.echo(f"session {session.status}; {len(spec.constraints)} constraints; spec sha256 {digest[:16]}")
        _write_out(out, {**session.to_dict(), "finalized_spec": spec_doc})
    except OpawError as exc:
        _fail(exc)


@main.command()
@click.option("--matrix", type=click.Path(exists=True, dir_okay=False), default=None,
              help="decision-matrix document (defaults to the bundled fixture)")
@click.option("--out", type=click.Path(dir_okay=False))
def bench(matrix, out):
    """Run the benchmark rankers and compare against the recorded rows."""
    import importlib.resources as resources

    try:
        if matrix is None:
            raw = json.loads(resources.files("opaw.fixtures").joinpath("table1.json").read_text())
        else:
            raw = documents.load_json(matrix)
        weights = None if raw.get("weights") in (None, "equal") else raw["weights"]
        dm = DecisionMatrix(raw["values"], weights, raw.get("attributes"), raw.get("alternatives"))
        results = {"topsis": topsis(dm), "vikor": vikor(dm), "moora": moora(dm)}
        reference = json.loads(
            resources.files("opaw.fixtures").joinpath("table2_rankings.json").read_text()
        )["methods"]
        doc = {
            "schema_version": documents.SCHEMA_VERSION,
            "kind": "bench",
            "methods": {
                name: {
                    "scores": res.scores.tolist(),
                    "ranks": res.ranks.tolist(),
                    "tied": res.tied,
                    "notes": res.notes,
                }
                for name, res in results.items()
            },
            "reference_rows": reference,
            "matches": {
                name: results[name].ranks.tolist() == reference[name.upper()]
                for name in results
            },
        }
        for name, res in results.items():
            flag = "matches" if doc["matches"][name] else "DIFFERS from"
            click.echo(f"{name}: ranks {res.ranks.tolist()} ({flag} the recorded row)")
        if not doc["matches"]["vikor"]:
            click.echo(f"vikor per-alternative Q: {results['vikor'].notes['Q']}")
    except OpawError as exc:
        _fail(exc)
    _write_out(out, doc)


@main.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--cap", type=int, default=5040, show_default=True,
              help="max permutations; beyond this a seeded sample is used")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="also write stats as CSV")
def sensitivity(instance, cap, seed, out, csv_path):
    """Expert-ranking permutation sweep with descriptive statistics."""
    try:
        pr = documents.pr_instance_from_document(documents.load_instance(instance))
        stage = solve_opa_pr(pr)
        rank_map = pr.ranking_profile().rank_to_alternative()
        report = sensitivity_permutations(stage.profile, stage.table, cap, seed, rank_map)
        doc = {
            "schema_version": documents.SCHEMA_VERSION,
            "kind": "sensitivity",
            "n_scenarios": report.n_scenarios,
            "stats": {
                group: {
                    label: vars(row)
                    for label, row in zip(report.labels[group], report.stats[group])
                }
                for group in report.labels
            },
            "samples": {group: report.samples[group].tolist() for group in report.samples},
        }
    except OpawError as exc:
        _fail(exc)
    click.echo(f"{report.n_scenarios} scenarios")
    for group in ("experts", "attributes", "alternatives"):
        for label, row in zip(report.labels[group], report.stats[group]):
            click.echo(
                f"{label}: mean={row.mean:.4f} skew={row.skewness:.4f} "
                f"kurt={row.kurtosis:.4f} cv={row.coefficient_of_variation:.4f} "
                f"min={row.min:.4f} max={row.max:.4f}"
            )
    _write_out(out, doc)
    if csv_path:
        lines = ["entity,mean,skewness,kurtosis,coefficient_of_variation,min,max"]
        for group in ("experts", "attributes", "alternatives"):
            for label, row in zip(report.labels[group], report.stats[group]):
                lines.append(
                    f"{label},{row.mean},{row.skewness},{row.kurtosis},"
                    f"{row.coefficient_of_variation},{row.min},{row.max}"
                )
        Path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"wrote {csv_path}")


@main.command()
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False), default=None)
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="static frontend bundle to serve at /")
def serve(port, host, data_dir, ui_dir):
    """Run the HTTP API (loopback by default)."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir or default_data_dir(), ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
